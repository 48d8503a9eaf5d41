// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "gossipwatch/metrics/metrics.hpp"
#include "json.hpp"

namespace gossipwatch::metrics {

using nlohmann::json;

namespace {

json to_json(const PeerMetrics &m) {
  json events = json::array();
  for (const auto &e : m.events) {
    events.push_back({{"kind", to_string(e.kind)}, {"t_ms", e.t_ms}});
  }
  json counters = json::object();
  for (const auto &[topic, count] : m.counters) {
    counters[topic] = count;
  }
  const auto &i = m.info;
  return {{"peer_id", i.peer_id},
          {"node_id", i.node_id},
          {"pubkey", i.pubkey},
          {"multiaddr", i.multiaddr},
          {"ip", i.ip},
          {"country", i.country},
          {"city", i.city},
          {"client_family", to_string(i.client_family)},
          {"client_version", i.client_version},
          {"user_agent", i.user_agent},
          {"latency_s", i.latency.to_string()},
          {"events", std::move(events)},
          {"counters", std::move(counters)}};
}

class Reader {
 public:
  const json &require(const json &obj, const std::string &path,
                      const char *key) const {
    auto it = obj.find(key);
    if (it == obj.end()) {
      throw SchemaViolation(join(path, key), 0, "missing required field");
    }
    return *it;
  }

  std::string string(const json &obj, const std::string &path,
                     const char *key) const {
    const auto &v = require(obj, path, key);
    if (!v.is_string()) {
      throw SchemaViolation(join(path, key), 0, "expected string");
    }
    return v.get<std::string>();
  }

  std::int64_t integer(const json &obj, const std::string &path,
                       const char *key) const {
    const auto &v = require(obj, path, key);
    if (!v.is_number_integer()) {
      throw SchemaViolation(join(path, key), 0, "expected integer");
    }
    return v.get<std::int64_t>();
  }

  static std::string join(const std::string &path, const char *key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }
};

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

PeerMetrics peer_from_json(const json &j, const std::string &path) {
  Reader r;
  if (!j.is_object()) {
    throw SchemaViolation(path, 0, "expected object");
  }
  PeerMetrics m;
  auto &i = m.info;
  i.peer_id = r.string(j, path, "peer_id");
  i.node_id = r.string(j, path, "node_id");
  i.pubkey = r.string(j, path, "pubkey");
  i.multiaddr = r.string(j, path, "multiaddr");
  i.ip = r.string(j, path, "ip");
  i.country = r.string(j, path, "country");
  i.city = r.string(j, path, "city");
  auto family = parse_family(r.string(j, path, "client_family"));
  if (!family) {
    throw SchemaViolation(path + ".client_family", 0, "unknown client family");
  }
  i.client_family = *family;
  i.client_version = r.string(j, path, "client_version");
  if (j.contains("user_agent")) {
    i.user_agent = r.string(j, path, "user_agent");
  }
  auto latency = Latency::parse(r.string(j, path, "latency_s"));
  if (!latency) {
    throw SchemaViolation(path + ".latency_s", 0,
                          "expected nonnegative decimal string");
  }
  i.latency = *latency;

  const auto &events = r.require(j, path, "events");
  if (!events.is_array()) {
    throw SchemaViolation(path + ".events", 0, "expected array");
  }
  for (std::size_t k = 0; k < events.size(); ++k) {
    auto epath = fmt::format("{}.events[{}]", path, k);
    if (!events[k].is_object()) {
      throw SchemaViolation(epath, 0, "expected object");
    }
    auto kind = parse_event_kind(r.string(events[k], epath, "kind"));
    if (!kind) {
      throw SchemaViolation(epath + ".kind", 0, "expected Connect or Disconnect");
    }
    auto t = r.integer(events[k], epath, "t_ms");
    if (t <= 0) {
      throw SchemaViolation(epath + ".t_ms", 0, "timestamp must be positive");
    }
    if (!m.events.empty() && m.events.back().t_ms > t) {
      throw SchemaViolation(epath + ".t_ms", 0, "events out of time order");
    }
    m.events.push_back({*kind, t});
  }

  const auto &counters = r.require(j, path, "counters");
  if (!counters.is_object()) {
    throw SchemaViolation(path + ".counters", 0, "expected object");
  }
  for (const auto &[topic, count] : counters.items()) {
    if (!count.is_number_unsigned()) {
      throw SchemaViolation(path + ".counters." + topic, 0,
                            "expected nonnegative integer");
    }
    m.counters[topic] = count.get<std::uint64_t>();
  }
  return m;
}

}  // namespace

std::string serialize_snapshot(const MetricsSnapshot &snapshot) {
  json peers = json::array();
  for (const auto &p : snapshot.peers) {
    peers.push_back(to_json(p));
  }
  json doc = {{"schema", kSnapshotSchema},
              {"captured_at_ms", snapshot.captured_at_ms},
              {"host_node_id", snapshot.host_node_id},
              {"network_id", snapshot.network_id},
              {"peers", std::move(peers)}};
  return doc.dump(2) + "\n";
}

MetricsSnapshot parse_snapshot(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw SchemaViolation("", line_of(text, e.byte), e.what());
  }
  if (!doc.is_object()) {
    throw SchemaViolation("", 1, "top level must be an object");
  }
  Reader r;
  if (r.integer(doc, "", "schema") != kSnapshotSchema) {
    throw SchemaViolation("schema", 0, "unsupported schema version");
  }
  MetricsSnapshot snap;
  snap.captured_at_ms = r.integer(doc, "", "captured_at_ms");
  snap.host_node_id = r.string(doc, "", "host_node_id");
  snap.network_id = r.string(doc, "", "network_id");
  const auto &peers = r.require(doc, "", "peers");
  if (!peers.is_array()) {
    throw SchemaViolation("peers", 0, "expected array");
  }
  std::set<std::string> ids;
  for (std::size_t k = 0; k < peers.size(); ++k) {
    auto path = fmt::format("peers[{}]", k);
    auto m = peer_from_json(peers[k], path);
    if (!ids.insert(m.info.peer_id).second) {
      throw SchemaViolation(path + ".peer_id", 0, "duplicate peer id");
    }
    snap.peers.push_back(std::move(m));
  }
  return snap;
}

void write_snapshot(const MetricsSnapshot &snapshot,
                    const std::filesystem::path &path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoFailure("cannot open " + tmp.string() + " for writing");
    }
    out << serialize_snapshot(snapshot);
    out.flush();
    if (!out) {
      throw IoFailure("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoFailure("rename to " + path.string() + ": " + ec.message());
  }
}

MetricsSnapshot read_snapshot(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

}  // namespace gossipwatch::metrics
