// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>

#include "gossipwatch/common.hpp"

namespace gossipwatch::simnet {

class ScenarioInvalid : public Error {
 public:
  using Error::Error;
};

enum class Strategy {
  Strict,    // refuses the crawler when it would exceed max_peers
  Flexible,  // accepts, then periodically prunes down toward max_peers
};

struct Churn {
  TimeMs disconnect_after_ms = 0;  // session length before the peer hangs up
  TimeMs reconnect_after_ms = 0;   // offline gap before it dials back
};

struct PeerProfile {
  std::string user_agent = "simpeer/v0.0.1";
  std::size_t max_peers = 50;
  Strategy strategy = Strategy::Strict;
  std::map<std::string, double> publish_rate_per_min;
  TimeMs link_delay_ms = 50;
  bool accepts_inbound = true;
  std::optional<Churn> churn;
  /// Emit four extra per-topic stream notices around each connect and
  /// disconnect, as stream-level bookkeeping does.
  bool legacy_event_mode = false;
  TimeMs prune_period_ms = 300'000;
  std::size_t background_peers = 0;
  std::string country = "Unknown";
  std::string city = "Unknown";
  std::optional<std::string> network_id;
  std::uint16_t tcp_port = 9000;
};

struct PeerGroup {
  std::size_t count = 0;
  PeerProfile profile;
};

struct Scenario {
  std::uint64_t seed = 1;
  TimeMs duration_ms = 0;
  TimeMs slot_interval_ms = 12'000;
  std::vector<std::size_t> bootnodes = {0};
  std::size_t overlay_degree = 8;
  std::size_t known_peers = 8;
  std::string network_id = "mainnet";
  TimeMs discovery_interval_ms = 1000;
  TimeMs link_delay_jitter_ms = 0;
  /// Raw crawler config overrides, merged over the defaults.
  std::string crawler_json = "{}";
  std::vector<PeerGroup> peers;

  std::size_t peer_count() const;

  /// Throws ScenarioInvalid.
  void validate() const;
};

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path &path);

const char *to_string(Strategy strategy);

}  // namespace gossipwatch::simnet
