// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/crawler/client.hpp"

#include <algorithm>
#include <cctype>

namespace gossipwatch::crawler {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size()
         && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
              return std::tolower(static_cast<unsigned char>(x))
                     == std::tolower(static_cast<unsigned char>(y));
            });
}

}  // namespace

std::pair<ClientFamily, std::string> classify_client(std::string_view user_agent) {
  auto slash = user_agent.find('/');
  auto name = user_agent.substr(0, slash);
  for (auto family : metrics::kAllFamilies) {
    if (family == ClientFamily::Unknown || !iequals(name, metrics::to_string(family))) {
      continue;
    }
    std::string version;
    if (slash != std::string_view::npos) {
      auto rest = user_agent.substr(slash + 1);
      version = std::string(rest.substr(0, rest.find('/')));
    }
    return {family, version};
  }
  return {ClientFamily::Unknown, ""};
}

}  // namespace gossipwatch::crawler
