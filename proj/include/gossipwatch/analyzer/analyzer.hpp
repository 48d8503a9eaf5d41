// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>

#include "gossipwatch/metrics/metrics.hpp"

namespace gossipwatch::analyzer {

using metrics::ClientFamily;
using metrics::ConnectionEvent;
using metrics::EventKind;

struct DedupPolicy {
  TimeMs window_ms = 500;
};

class UnsortedInput : public Error {
 public:
  using Error::Error;
};

/// Keeps an event iff no kept event of the same kind lies within the trailing
/// window, anchored at the last kept event of that kind.
/// Throws UnsortedInput, and std::invalid_argument for window_ms <= 0.
std::vector<ConnectionEvent> dedup_events(std::span<const ConnectionEvent> events,
                                          DedupPolicy policy = {});

struct Session {
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;

  friend bool operator==(const Session &, const Session &) = default;
};

struct SessionSummary {
  std::vector<Session> sessions;
  TimeMs total_ms = 0;
  std::size_t leading_disconnects = 0;  // dropped
  std::size_t repeated_connects = 0;    // Connect while already connected, ignored
  bool open_at_end = false;

  double total_min() const { return static_cast<double>(total_ms) / 60'000.0; }
};

/// Pairs each Connect with the next Disconnect; a trailing Connect closes at
/// `snapshot_end_ms`.
SessionSummary connection_sessions(std::span<const ConnectionEvent> deduped,
                                   TimeMs snapshot_end_ms);

/// Minutes with six decimals, truncated: 1476025 ms -> "24.600416".
std::string format_minutes(TimeMs ms);

struct PeerDerived {
  std::string peer_id;
  std::string user_agent;
  ClientFamily client_family = ClientFamily::Unknown;
  std::string client_version;
  std::string country;
  std::string city;
  metrics::Latency latency;
  std::size_t connections = 0;
  std::size_t disconnections = 0;
  TimeMs connected_ms = 0;
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total_messages = 0;

  double connected_time_min() const { return static_cast<double>(connected_ms) / 60'000.0; }
};

struct ClientRow {
  ClientFamily family = ClientFamily::Unknown;
  std::size_t peer_count = 0;
  double avg_connections = 0;
  double avg_disconnections = 0;
  double avg_connected_time_min = 0;
  double avg_latency_s = 0;
  std::map<std::string, std::uint64_t> topic_totals;
  std::map<std::string, double> topic_averages;
  std::size_t version_count = 0;
};

struct CountryRow {
  std::string country;
  std::size_t peer_count = 0;
};

enum class OutlierFlag { HighRate, Silent, SuperPeer };

const char *to_string(OutlierFlag flag);

struct OutlierRules {
  double rate_per_min = 200;
  double rate_max_connected_min = 10;
  double silent_min = 120;
  std::uint64_t super_messages = 10'000;
  double super_min = 600;
};

struct Outlier {
  std::string peer_id;
  OutlierFlag flag = OutlierFlag::HighRate;

  friend bool operator==(const Outlier &, const Outlier &) = default;
};

struct TopKShare {
  std::string topic;
  std::size_t k = 0;
  double share = 0;
};

struct Summary {
  std::size_t peers = 0;
  std::optional<std::size_t> peerstore_size;
  std::size_t connected_count = 0;
  std::vector<TopKShare> top_k;
  std::vector<Outlier> outliers;
  std::vector<std::string> super_peers;
};

struct AnalysisReport {
  std::vector<std::string> topics;  // column order
  std::vector<PeerDerived> per_peer;
  std::vector<ClientRow> per_client;  // families present, canonical order
  std::array<std::size_t, metrics::kAllFamilies.size()> version_counts{};
  std::vector<CountryRow> per_country;
  Summary summary;
};

struct AggregateOptions {
  DedupPolicy dedup;
  std::size_t top_k = 10;
  OutlierRules rules;
  std::optional<std::size_t> peerstore_size;
};

/// Fraction of the topic's messages held by the k largest contributors
/// (ties by peer_id). 0 when the topic has no messages.
double top_k_share(std::span<const PeerDerived> per_peer, std::string_view topic,
                   std::size_t k);

std::vector<Outlier> flag_outliers(std::span<const PeerDerived> per_peer,
                                   const OutlierRules &rules = {});

PeerDerived derive_peer(const metrics::PeerMetrics &peer, TimeMs snapshot_end_ms,
                        DedupPolicy policy);

AnalysisReport aggregate(const metrics::MetricsSnapshot &snapshot,
                         const AggregateOptions &options = {});

/// Writes per_peer.csv, per_client.csv, client_versions.csv, per_country.csv,
/// summary.csv, outliers.csv and the SVG charts. Throws metrics::IoFailure.
std::vector<std::filesystem::path> emit_report(const AnalysisReport &report,
                                               const std::filesystem::path &out_dir);

/// Comma-separated; a field is double-quoted only when it contains a comma.
std::string csv_field(std::string_view value);

}  // namespace gossipwatch::analyzer
