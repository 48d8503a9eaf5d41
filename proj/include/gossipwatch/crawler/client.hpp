// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "gossipwatch/metrics/metrics.hpp"

namespace gossipwatch::crawler {

using metrics::ClientFamily;

/// Splits a user agent such as "Lighthouse/v1.0.1-5a3b94cb/x86_64-linux" on
/// '/'. The first token names the family (case-insensitive) and the second,
/// when present, is the version. Anything unrecognized is (Unknown, "").
std::pair<ClientFamily, std::string> classify_client(std::string_view user_agent);

}  // namespace gossipwatch::crawler
