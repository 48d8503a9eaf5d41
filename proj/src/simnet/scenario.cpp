// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/simnet/scenario.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace gossipwatch::simnet {

using nlohmann::json;

const char *to_string(Strategy strategy) {
  return strategy == Strategy::Strict ? "Strict" : "Flexible";
}

std::size_t Scenario::peer_count() const {
  std::size_t n = 0;
  for (const auto &g : peers) {
    n += g.count;
  }
  return n;
}

void Scenario::validate() const {
  if (duration_ms <= 0) {
    throw ScenarioInvalid("duration_ms: must be positive");
  }
  if (slot_interval_ms <= 0) {
    throw ScenarioInvalid("slot_interval_ms: must be positive");
  }
  if (discovery_interval_ms <= 0) {
    throw ScenarioInvalid("discovery_interval_ms: must be positive");
  }
  if (link_delay_jitter_ms < 0) {
    throw ScenarioInvalid("link_delay_jitter_ms: must be nonnegative");
  }
  const auto n = peer_count();
  if (n == 0) {
    throw ScenarioInvalid("peers: at least one peer is required");
  }
  if (n > 62'500) {
    throw ScenarioInvalid("peers: at most 62500 peers are supported");
  }
  if (bootnodes.empty()) {
    throw ScenarioInvalid("bootnodes: at least one bootnode is required");
  }
  for (auto b : bootnodes) {
    if (b >= n) {
      throw ScenarioInvalid(fmt::format("bootnodes: index {} out of range", b));
    }
  }
  for (std::size_t g = 0; g < peers.size(); ++g) {
    const auto &p = peers[g].profile;
    auto where = fmt::format("peers[{}].profile", g);
    if (p.max_peers < 1) {
      throw ScenarioInvalid(where + ".max_peers: must be >= 1");
    }
    if (p.link_delay_ms < 1) {
      throw ScenarioInvalid(where + ".link_delay_ms: must be >= 1");
    }
    if (p.prune_period_ms <= 0) {
      throw ScenarioInvalid(where + ".prune_period_ms: must be positive");
    }
    if (p.tcp_port == 0) {
      throw ScenarioInvalid(where + ".tcp_port: must be nonzero");
    }
    for (const auto &[topic, rate] : p.publish_rate_per_min) {
      if (!(rate >= 0)) {
        throw ScenarioInvalid(where + ".publish_rate_per_min." + topic
                              + ": must be nonnegative");
      }
    }
    if (p.churn && (p.churn->disconnect_after_ms <= 0 || p.churn->reconnect_after_ms <= 0)) {
      throw ScenarioInvalid(where + ".churn: both intervals must be positive");
    }
  }
}

namespace {

template <typename T>
void take(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) {
    return;
  }
  try {
    j.at(key).get_to(out);
  } catch (const json::exception &e) {
    throw ScenarioInvalid(where + key + ": " + e.what());
  }
}

template <typename T>
void take_unsigned(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) {
    return;
  }
  const auto &v = j.at(key);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<T>::max()) {
    throw ScenarioInvalid(where + key + ": expected a nonnegative integer in range");
  }
  out = v.get<T>();
}

PeerProfile parse_profile(const json &j, const std::string &where) {
  if (!j.is_object()) {
    throw ScenarioInvalid(where + ": expected object");
  }
  PeerProfile p;
  take(j, "user_agent", p.user_agent, where + ".");
  take_unsigned(j, "max_peers", p.max_peers, where + ".");
  if (j.contains("strategy")) {
    auto s = j.at("strategy");
    if (s == "Strict") {
      p.strategy = Strategy::Strict;
    } else if (s == "Flexible") {
      p.strategy = Strategy::Flexible;
    } else {
      throw ScenarioInvalid(where + ".strategy: expected Strict or Flexible");
    }
  }
  take(j, "publish_rate_per_min", p.publish_rate_per_min, where + ".");
  take(j, "link_delay_ms", p.link_delay_ms, where + ".");
  take(j, "accepts_inbound", p.accepts_inbound, where + ".");
  if (j.contains("churn") && !j.at("churn").is_null()) {
    const auto &c = j.at("churn");
    Churn churn;
    take(c, "disconnect_after_ms", churn.disconnect_after_ms, where + ".churn.");
    take(c, "reconnect_after_ms", churn.reconnect_after_ms, where + ".churn.");
    p.churn = churn;
  }
  take(j, "legacy_event_mode", p.legacy_event_mode, where + ".");
  take(j, "prune_period_ms", p.prune_period_ms, where + ".");
  take_unsigned(j, "background_peers", p.background_peers, where + ".");
  take(j, "country", p.country, where + ".");
  take(j, "city", p.city, where + ".");
  if (j.contains("network_id")) {
    std::string id;
    take(j, "network_id", id, where + ".");
    p.network_id = id;
  }
  take_unsigned(j, "tcp_port", p.tcp_port, where + ".");
  return p;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error &e) {
    throw ScenarioInvalid(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ScenarioInvalid("scenario must be a JSON object");
  }
  Scenario s;
  take_unsigned(j, "seed", s.seed, "");
  take(j, "duration_ms", s.duration_ms, "");
  take(j, "slot_interval_ms", s.slot_interval_ms, "");
  take(j, "bootnodes", s.bootnodes, "");
  take_unsigned(j, "overlay_degree", s.overlay_degree, "");
  take_unsigned(j, "known_peers", s.known_peers, "");
  take(j, "network_id", s.network_id, "");
  take(j, "discovery_interval_ms", s.discovery_interval_ms, "");
  take(j, "link_delay_jitter_ms", s.link_delay_jitter_ms, "");
  if (j.contains("crawler")) {
    if (!j.at("crawler").is_object()) {
      throw ScenarioInvalid("crawler: expected object");
    }
    s.crawler_json = j.at("crawler").dump();
  }
  if (!j.contains("peers") || !j.at("peers").is_array()) {
    throw ScenarioInvalid("peers: expected array");
  }
  const auto &peers = j.at("peers");
  for (std::size_t g = 0; g < peers.size(); ++g) {
    auto where = fmt::format("peers[{}]", g);
    const auto &group = peers[g];
    if (!group.is_object()) {
      throw ScenarioInvalid(where + ": expected object");
    }
    PeerGroup pg;
    take_unsigned(group, "count", pg.count, where + ".");
    if (pg.count == 0) {
      throw ScenarioInvalid(where + ".count: must be >= 1");
    }
    pg.profile = parse_profile(group.value("profile", json::object()), where + ".profile");
    s.peers.push_back(std::move(pg));
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioInvalid("cannot read scenario file: " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace gossipwatch::simnet
