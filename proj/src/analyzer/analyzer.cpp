// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/analyzer/analyzer.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace gossipwatch::analyzer {

std::vector<ConnectionEvent> dedup_events(std::span<const ConnectionEvent> events,
                                          DedupPolicy policy) {
  if (policy.window_ms <= 0) {
    throw std::invalid_argument("dedup window must be positive");
  }
  std::vector<ConnectionEvent> out;
  std::optional<TimeMs> last_connect;
  std::optional<TimeMs> last_disconnect;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto &e = events[i];
    if (i > 0 && events[i - 1].t_ms > e.t_ms) {
      throw UnsortedInput(fmt::format("event {} at {} ms precedes event {} at {} ms",
                                      i, e.t_ms, i - 1, events[i - 1].t_ms));
    }
    auto &anchor = e.kind == EventKind::Connect ? last_connect : last_disconnect;
    if (anchor && e.t_ms - *anchor < policy.window_ms) {
      continue;
    }
    anchor = e.t_ms;
    out.push_back(e);
  }
  return out;
}

SessionSummary connection_sessions(std::span<const ConnectionEvent> deduped,
                                   TimeMs snapshot_end_ms) {
  SessionSummary s;
  std::optional<TimeMs> open;
  for (const auto &e : deduped) {
    if (e.kind == EventKind::Connect) {
      if (open) {
        ++s.repeated_connects;
      } else {
        open = e.t_ms;
      }
    } else if (open) {
      s.sessions.push_back({*open, e.t_ms});
      open.reset();
    } else {
      ++s.leading_disconnects;
    }
  }
  if (open) {
    s.sessions.push_back({*open, std::max(*open, snapshot_end_ms)});
    s.open_at_end = true;
  }
  for (const auto &x : s.sessions) {
    s.total_ms += x.end_ms - x.start_ms;
  }
  return s;
}

std::string format_minutes(TimeMs ms) {
  // 1 ms = 100/6 micro-minutes.
  const std::int64_t um = ms * 100 / 6;
  return fmt::format("{}.{:06d}", um / 1'000'000, um % 1'000'000);
}

const char *to_string(OutlierFlag flag) {
  switch (flag) {
    case OutlierFlag::HighRate: return "HighRate";
    case OutlierFlag::Silent: return "Silent";
    case OutlierFlag::SuperPeer: return "SuperPeer";
  }
  return "HighRate";
}

double top_k_share(std::span<const PeerDerived> per_peer, std::string_view topic,
                   std::size_t k) {
  std::vector<std::pair<std::uint64_t, const std::string *>> counts;
  std::uint64_t total = 0;
  for (const auto &p : per_peer) {
    auto it = p.counts.find(std::string(topic));
    std::uint64_t c = it == p.counts.end() ? 0 : it->second;
    counts.emplace_back(c, &p.peer_id);
    total += c;
  }
  if (total == 0) {
    return 0.0;
  }
  std::sort(counts.begin(), counts.end(), [](const auto &a, const auto &b) {
    return a.first != b.first ? a.first > b.first : *a.second < *b.second;
  });
  std::uint64_t top = 0;
  for (std::size_t i = 0; i < std::min(k, counts.size()); ++i) {
    top += counts[i].first;
  }
  return static_cast<double>(top) / static_cast<double>(total);
}

std::vector<Outlier> flag_outliers(std::span<const PeerDerived> per_peer,
                                   const OutlierRules &rules) {
  std::vector<Outlier> out;
  for (const auto &p : per_peer) {
    const double minutes = p.connected_time_min();
    const double msgs = static_cast<double>(p.total_messages);
    if (minutes < rules.rate_max_connected_min && p.total_messages > 0
        && (minutes == 0 || msgs / minutes > rules.rate_per_min)) {
      out.push_back({p.peer_id, OutlierFlag::HighRate});
    }
    if (minutes > rules.silent_min && p.total_messages == 0) {
      out.push_back({p.peer_id, OutlierFlag::Silent});
    }
    if (p.total_messages > rules.super_messages && minutes > rules.super_min) {
      out.push_back({p.peer_id, OutlierFlag::SuperPeer});
    }
  }
  return out;
}

PeerDerived derive_peer(const metrics::PeerMetrics &peer, TimeMs snapshot_end_ms,
                        DedupPolicy policy) {
  PeerDerived d;
  const auto &i = peer.info;
  d.peer_id = i.peer_id;
  d.user_agent = i.user_agent;
  d.client_family = i.client_family;
  d.client_version = i.client_version;
  d.country = i.country;
  d.city = i.city;
  d.latency = i.latency;
  auto events = dedup_events(peer.events, policy);
  for (const auto &e : events) {
    (e.kind == EventKind::Connect ? d.connections : d.disconnections) += 1;
  }
  d.connected_ms = connection_sessions(events, snapshot_end_ms).total_ms;
  d.counts = peer.counters;
  for (const auto &[t, c] : d.counts) {
    d.total_messages += c;
  }
  return d;
}

AnalysisReport aggregate(const metrics::MetricsSnapshot &snapshot,
                         const AggregateOptions &options) {
  AnalysisReport r;

  std::set<std::string> seen_topics;
  for (const auto &p : snapshot.peers) {
    for (const auto &[t, c] : p.counters) {
      seen_topics.insert(t);
    }
  }
  for (const char *t : {"BeaconBlock", "BeaconAggregateAndProof", "VoluntaryExit",
                        "ProposerSlashing", "AttesterSlashing"}) {
    if (seen_topics.erase(t)) {
      r.topics.emplace_back(t);
    }
  }
  r.topics.insert(r.topics.end(), seen_topics.begin(), seen_topics.end());

  for (const auto &p : snapshot.peers) {
    auto d = derive_peer(p, snapshot.captured_at_ms, options.dedup);
    for (const auto &t : r.topics) {
      d.counts.try_emplace(t, 0);
    }
    r.per_peer.push_back(std::move(d));
  }
  std::sort(r.per_peer.begin(), r.per_peer.end(),
            [](const auto &a, const auto &b) { return a.peer_id < b.peer_id; });

  for (std::size_t f = 0; f < metrics::kAllFamilies.size(); ++f) {
    const auto family = metrics::kAllFamilies[f];
    ClientRow row;
    row.family = family;
    std::set<std::string> versions;
    std::int64_t latency_us = 0;
    for (const auto &p : r.per_peer) {
      if (p.client_family != family) {
        continue;
      }
      ++row.peer_count;
      row.avg_connections += static_cast<double>(p.connections);
      row.avg_disconnections += static_cast<double>(p.disconnections);
      row.avg_connected_time_min += p.connected_time_min();
      latency_us += p.latency.micros();
      for (const auto &t : r.topics) {
        row.topic_totals[t] += p.counts.at(t);
      }
      versions.insert(p.client_version);  // "" counts as one (unreported) version
    }
    r.version_counts[f] = versions.size();
    if (row.peer_count == 0) {
      continue;
    }
    const auto n = static_cast<double>(row.peer_count);
    row.avg_connections /= n;
    row.avg_disconnections /= n;
    row.avg_connected_time_min /= n;
    row.avg_latency_s = static_cast<double>(latency_us) / 1e6 / n;
    for (const auto &t : r.topics) {
      row.topic_averages[t] = static_cast<double>(row.topic_totals[t]) / n;
    }
    row.version_count = versions.size();
    r.per_client.push_back(std::move(row));
  }

  std::map<std::string, std::size_t> countries;
  for (const auto &p : r.per_peer) {
    ++countries[p.country];
  }
  for (const auto &[c, n] : countries) {
    r.per_country.push_back({c, n});
  }
  std::stable_sort(r.per_country.begin(), r.per_country.end(),
                   [](const auto &a, const auto &b) { return a.peer_count > b.peer_count; });

  auto &s = r.summary;
  s.peers = r.per_peer.size();
  s.peerstore_size = options.peerstore_size;
  s.connected_count = static_cast<std::size_t>(
      std::count_if(r.per_peer.begin(), r.per_peer.end(),
                    [](const auto &p) { return p.connections > 0; }));
  for (const auto &t : r.topics) {
    s.top_k.push_back({t, options.top_k, top_k_share(r.per_peer, t, options.top_k)});
  }
  s.outliers = flag_outliers(r.per_peer, options.rules);
  for (const auto &o : s.outliers) {
    if (o.flag == OutlierFlag::SuperPeer) {
      s.super_peers.push_back(o.peer_id);
    }
  }
  return r;
}

}  // namespace gossipwatch::analyzer
