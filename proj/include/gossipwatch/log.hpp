// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/spdlog.h>

namespace gossipwatch {

/// Reads GOSSIPWATCH_LOG (error | info | debug) and configures the default
/// logger. Unset or unknown values mean "error".
void init_logging_from_env();

}  // namespace gossipwatch
