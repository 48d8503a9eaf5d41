// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "gossipwatch/identity/node_record.hpp"

namespace gossipwatch::crawler {

class BadConfig : public Error {
 public:
  using Error::Error;
};

struct GeoProviderConfig {
  std::string name = "none";  // "none" | "mapping"
  std::string data_path;

  friend bool operator==(const GeoProviderConfig &, const GeoProviderConfig &) = default;
};

/// Monitoring host settings. JSON keys match the member names; `bootnodes`
/// holds node records in their text form.
struct HostConfig {
  std::string listen_ip = "0.0.0.0";
  std::uint16_t tcp_port = 9000;
  std::uint16_t udp_port = 9000;
  std::string network_id = "mainnet";
  std::vector<std::string> topics;
  std::int64_t export_interval_s = 300;
  std::int64_t max_outbound_dials_in_flight = 16;
  GeoProviderConfig geo_provider;
  std::string user_agent = "gossipwatch/v0.1.0";
  std::vector<identity::NodeRecord> bootnodes;

  /// Default profile: the five beacon topics.
  static HostConfig defaults();

  /// Throws BadConfig naming the offending field.
  void validate() const;
};

HostConfig parse_config(std::string_view json_text);

/// Throws BadConfig (naming the path) when the file cannot be read.
HostConfig load_config(const std::filesystem::path &path);

}  // namespace gossipwatch::crawler
