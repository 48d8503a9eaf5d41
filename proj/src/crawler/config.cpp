// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/crawler/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gossipwatch/gossip/router.hpp"
#include "json.hpp"

namespace gossipwatch::crawler {

using nlohmann::json;

HostConfig HostConfig::defaults() {
  HostConfig c;
  c.topics = gossip::default_topics();
  return c;
}

void HostConfig::validate() const {
  if (!identity::IpAddress::parse(listen_ip)) {
    throw BadConfig("listen_ip: not an IP address: " + listen_ip);
  }
  if (tcp_port == 0 || udp_port == 0) {
    throw BadConfig("tcp_port/udp_port: must be nonzero");
  }
  if (topics.empty()) {
    throw BadConfig("topics: must not be empty");
  }
  std::set<std::string> unique(topics.begin(), topics.end());
  if (unique.size() != topics.size()) {
    throw BadConfig("topics: duplicate topic name");
  }
  if (export_interval_s < 1) {
    throw BadConfig("export_interval_s: must be >= 1");
  }
  if (max_outbound_dials_in_flight < 1) {
    throw BadConfig("max_outbound_dials_in_flight: must be >= 1");
  }
  if (geo_provider.name != "none" && geo_provider.name != "mapping") {
    throw BadConfig("geo_provider.name: unknown provider " + geo_provider.name);
  }
  if (geo_provider.name == "mapping" && geo_provider.data_path.empty()) {
    throw BadConfig("geo_provider.data_path: required for mapping provider");
  }
}

HostConfig parse_config(std::string_view json_text) {
  HostConfig c = HostConfig::defaults();
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error &e) {
    throw BadConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw BadConfig("config must be a JSON object");
  }
  auto field = [&](const char *key, auto &out) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(out);
    } catch (const json::exception &e) {
      throw BadConfig(std::string(key) + ": " + e.what());
    }
  };
  static const std::set<std::string> known = {
      "listen_ip", "tcp_port", "udp_port", "network_id", "topics", "export_interval_s",
      "max_outbound_dials_in_flight", "geo_provider", "user_agent", "bootnodes"};
  for (const auto &[key, value] : j.items()) {
    if (!known.contains(key)) {
      throw BadConfig(key + ": unknown field");
    }
  }
  auto port = [&](const char *key, std::uint16_t &out) {
    std::int64_t v = out;
    field(key, v);
    if (v < 0 || v > 65535) {
      throw BadConfig(std::string(key) + ": out of range");
    }
    out = static_cast<std::uint16_t>(v);
  };
  field("listen_ip", c.listen_ip);
  port("tcp_port", c.tcp_port);
  port("udp_port", c.udp_port);
  field("network_id", c.network_id);
  field("topics", c.topics);
  field("export_interval_s", c.export_interval_s);
  field("max_outbound_dials_in_flight", c.max_outbound_dials_in_flight);
  field("user_agent", c.user_agent);
  if (j.contains("geo_provider")) {
    const auto &g = j.at("geo_provider");
    if (!g.is_object()) {
      throw BadConfig("geo_provider: expected object");
    }
    c.geo_provider.name = g.value("name", std::string("none"));
    c.geo_provider.data_path = g.value("data_path", std::string());
  }
  std::vector<std::string> boot;
  field("bootnodes", boot);
  for (const auto &text : boot) {
    auto record = identity::parse_text(text);
    if (!record) {
      throw BadConfig("bootnodes: unparseable record: " + text);
    }
    c.bootnodes.push_back(std::move(*record));
  }
  c.validate();
  return c;
}

HostConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw BadConfig("cannot read config file: " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace gossipwatch::crawler
