// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "gossipwatch/analyzer/analyzer.hpp"
#include "gossipwatch/simnet/simnet.hpp"

namespace gossipwatch::simnet {

namespace {

identity::Seed crawler_seed(std::uint64_t seed) {
  Bytes buf = to_bytes("gossipwatch-sim-crawler");
  for (int i = 7; i >= 0; --i) {
    buf.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  }
  return sha256(buf);
}

}  // namespace

crawler::HostConfig crawler_config_for(const Scenario &scenario) {
  try {
    return crawler::parse_config(scenario.crawler_json);
  } catch (const crawler::BadConfig &e) {
    throw ScenarioInvalid(std::string("crawler: ") + e.what());
  }
}

RunResult run_scenario(const Scenario &scenario, const RunOptions &options) {
  scenario.validate();
  auto config = options.crawler_config ? *options.crawler_config : crawler_config_for(scenario);

  EventLoop loop;
  SimNetwork net(scenario, loop);
  for (auto &r : net.bootnode_records()) {
    config.bootnodes.push_back(std::move(r));
  }
  std::shared_ptr<const crawler::GeoProvider> geo;
  if (config.geo_provider.name == "mapping") {
    geo = crawler::MappingGeoProvider::load(config.geo_provider.data_path);
  } else {
    geo = net.geo_provider();
  }

  crawler::HostOptions host_options;
  host_options.discovery_interval_ms = scenario.discovery_interval_ms;
  host_options.output_dir = options.output_dir;

  const TimeMs end = loop.now() + options.duration_ms.value_or(scenario.duration_ms);
  auto host = crawler::Host::init(config, crawler_seed(scenario.seed), net, loop, geo,
                                  host_options);
  net.set_crawler(host->record(), host->peer_id(), config.topics);
  net.start(end);

  RunResult result;
  result.interrupted = !loop.run_until(end, options.interrupted);
  const TimeMs now = loop.now();
  host->stop();
  result.snapshot = host->snapshot(now);
  result.truth = net.truth(now);
  result.peerstore = host->peerstore().dump();
  result.dials = host->dial_log();
  result.discovery_rounds = host->discovery_rounds();
  return result;
}

std::string to_string(const Mismatch &m) {
  std::string out = m.kind;
  if (!m.peer_id.empty()) {
    out += " peer=" + m.peer_id;
  }
  if (!m.topic.empty()) {
    out += " topic=" + m.topic;
  }
  return out + ": " + m.detail;
}

std::vector<Mismatch> verify_counters(const metrics::MetricsSnapshot &snapshot,
                                      const GroundTruth &truth) {
  std::vector<Mismatch> out;
  const std::set<std::string> subscribed(truth.crawler_topics.begin(),
                                         truth.crawler_topics.end());

  // Earliest (t, peer_id) full copy per message.
  std::vector<std::optional<std::pair<TimeMs, std::string>>> first(truth.publishes.size());
  for (const auto &d : truth.deliveries) {
    std::pair<TimeMs, std::string> key{d.t_ms, truth.peers[d.peer].peer_id};
    auto &f = first[d.msg];
    if (!f || key < *f) {
      f = key;
    }
  }
  std::map<std::pair<std::string, std::string>, std::uint64_t> expected;
  for (std::size_t m = 0; m < first.size(); ++m) {
    if (first[m] && subscribed.contains(truth.publishes[m].topic)) {
      ++expected[{first[m]->second, truth.publishes[m].topic}];
    }
  }
  std::map<std::pair<std::string, std::string>, std::uint64_t> actual;
  for (const auto &p : snapshot.peers) {
    for (const auto &[topic, count] : p.counters) {
      if (count) {
        actual[{p.info.peer_id, topic}] = count;
      }
    }
  }
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto &[k, v] : expected) keys.insert(k);
  for (const auto &[k, v] : actual) keys.insert(k);
  for (const auto &k : keys) {
    auto e = expected.contains(k) ? expected.at(k) : 0;
    auto a = actual.contains(k) ? actual.at(k) : 0;
    if (e != a) {
      out.push_back({"counter", k.first, k.second,
                     fmt::format("expected {} first deliveries, snapshot has {}", e, a)});
    }
  }

  // Eager forwards must follow the overlay's shortest delay path.
  const auto n = truth.peers.size();
  std::vector<std::vector<std::pair<std::uint32_t, TimeMs>>> adj(n);
  for (const auto &l : truth.links) {
    adj[l.a].emplace_back(l.b, l.delay_ms);
    adj[l.b].emplace_back(l.a, l.delay_ms);
  }
  std::map<std::uint32_t, std::vector<TimeMs>> dist_from;
  auto distances = [&](std::uint32_t src) -> const std::vector<TimeMs> & {
    auto it = dist_from.find(src);
    if (it != dist_from.end()) {
      return it->second;
    }
    std::vector<TimeMs> d(n, std::numeric_limits<TimeMs>::max());
    using Item = std::pair<TimeMs, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d[src] = 0;
    pq.emplace(0, src);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (auto [v, w] : adj[u]) {
        if (du + w < d[v]) {
          d[v] = du + w;
          pq.emplace(d[v], v);
        }
      }
    }
    return dist_from.emplace(src, std::move(d)).first->second;
  };
  for (const auto &d : truth.deliveries) {
    if (d.via_iwant) {
      continue;
    }
    const auto &pub = truth.publishes[d.msg];
    const TimeMs want = pub.t_ms + distances(pub.origin)[d.peer] + truth.peers[d.peer].link_delay_ms;
    if (d.t_ms != want) {
      out.push_back({"timing", truth.peers[d.peer].peer_id, pub.topic,
                     fmt::format("message {} arrived at {} ms, expected {} ms", pub.msg_id,
                                 d.t_ms, want)});
    }
  }
  return out;
}

std::vector<Mismatch> verify_durations(const metrics::MetricsSnapshot &snapshot,
                                       const GroundTruth &truth, TimeMs tolerance_ms) {
  std::vector<Mismatch> out;
  std::map<std::string, std::vector<analyzer::Session>> expected;
  for (const auto &p : truth.peers) {
    expected[p.peer_id];
  }
  for (const auto &s : truth.sessions) {
    expected[truth.peers[s.peer].peer_id].push_back(
        {s.start_ms, s.end_ms.value_or(snapshot.captured_at_ms)});
  }
  std::map<std::string, const metrics::PeerMetrics *> observed;
  for (const auto &p : snapshot.peers) {
    observed[p.info.peer_id] = &p;
    if (!expected.contains(p.info.peer_id)) {
      out.push_back({"unknown_peer", p.info.peer_id, "", "peer is not part of the simulation"});
    }
  }
  for (auto &[peer_id, want] : expected) {
    std::sort(want.begin(), want.end(),
              [](const auto &a, const auto &b) { return a.start_ms < b.start_ms; });
    std::vector<analyzer::Session> got;
    if (auto it = observed.find(peer_id); it != observed.end()) {
      auto events = analyzer::dedup_events(it->second->events, analyzer::DedupPolicy{});
      got = analyzer::connection_sessions(events, snapshot.captured_at_ms).sessions;
    }
    if (got.size() != want.size()) {
      out.push_back({"session", peer_id, "",
                     fmt::format("{} sessions in snapshot, {} in ground truth", got.size(),
                                 want.size())});
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      const auto &g = got[i];
      const auto &w = want[i];
      const TimeMs ds = std::abs(g.start_ms - w.start_ms);
      const TimeMs de = std::abs(g.end_ms - w.end_ms);
      const TimeMs dd = std::abs((g.end_ms - g.start_ms) - (w.end_ms - w.start_ms));
      if (ds > tolerance_ms || de > tolerance_ms || dd > tolerance_ms) {
        out.push_back({"session", peer_id, "",
                       fmt::format("session {}: snapshot [{}, {}] vs truth [{}, {}]", i,
                                   g.start_ms, g.end_ms, w.start_ms, w.end_ms)});
      }
    }
  }
  return out;
}

}  // namespace gossipwatch::simnet
