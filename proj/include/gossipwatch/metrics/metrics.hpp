// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <mutex>

#include "gossipwatch/common.hpp"

namespace gossipwatch::metrics {

using PeerId = std::string;

enum class EventKind { Connect, Disconnect };

const char *to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct ConnectionEvent {
  EventKind kind = EventKind::Connect;
  TimeMs t_ms = 0;

  friend bool operator==(const ConnectionEvent &, const ConnectionEvent &) = default;
};

enum class ClientFamily { Lighthouse, Teku, Nimbus, Prysm, Lodestar, Unknown };

inline constexpr std::array<ClientFamily, 6> kAllFamilies = {
    ClientFamily::Lighthouse, ClientFamily::Teku, ClientFamily::Nimbus,
    ClientFamily::Prysm, ClientFamily::Lodestar, ClientFamily::Unknown};

const char *to_string(ClientFamily family);
std::optional<ClientFamily> parse_family(std::string_view text);

/// Nonnegative seconds with microsecond resolution. Always rendered with six
/// fractional digits so values survive a text round-trip exactly.
class Latency {
 public:
  constexpr Latency() = default;
  static constexpr Latency from_micros(std::int64_t us) { return Latency(us); }
  static Latency from_seconds(double s);
  static std::optional<Latency> parse(std::string_view text);

  constexpr std::int64_t micros() const { return micros_; }
  double seconds() const { return static_cast<double>(micros_) / 1e6; }
  std::string to_string() const;

  friend auto operator<=>(const Latency &, const Latency &) = default;

 private:
  constexpr explicit Latency(std::int64_t us) : micros_(us) {}
  std::int64_t micros_ = 0;
};

struct PeerInfo {
  PeerId peer_id;
  std::string node_id;   // hex
  std::string pubkey;    // hex
  std::string multiaddr;
  std::string ip;
  std::string country = "Unknown";
  std::string city = "Unknown";
  ClientFamily client_family = ClientFamily::Unknown;
  std::string client_version;
  std::string user_agent;
  Latency latency;

  friend bool operator==(const PeerInfo &, const PeerInfo &) = default;
};

struct PeerMetrics {
  PeerInfo info;
  std::vector<ConnectionEvent> events;
  std::map<std::string, std::uint64_t> counters;

  friend bool operator==(const PeerMetrics &, const PeerMetrics &) = default;
};

struct MetricsSnapshot {
  TimeMs captured_at_ms = 0;
  std::string host_node_id;
  std::string network_id;
  std::vector<PeerMetrics> peers;  // ordered by peer_id

  friend bool operator==(const MetricsSnapshot &, const MetricsSnapshot &) = default;
};

enum class RecordStatus { Ok, ClockRegression };

class UnknownTopic : public Error {
 public:
  explicit UnknownTopic(const std::string &topic)
      : Error("unknown topic: " + topic) {}
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed snapshot. `field` is a JSON path such as "peers[2].latency_s";
/// `line` is 1-based and 0 when unknown.
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string field, std::size_t line, const std::string &what);

  const std::string &field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

/// Per-peer accumulator shared by the crawler's tasks. Every member locks, so
/// mutations are linearizable and snapshots are consistent copies.
class MetricsStore {
 public:
  explicit MetricsStore(std::vector<std::string> topics);

  const std::vector<std::string> &topics() const { return topics_; }

  /// Inserts in time order. An event more than 1000 ms older than the peer's
  /// latest event is still stored but reported as ClockRegression.
  RecordStatus record_event(const PeerId &peer, EventKind kind, TimeMs t_ms);

  std::uint64_t increment_counter(const PeerId &peer, std::string_view topic);

  /// Replaces identity metadata; events and counters are kept.
  void update_info(const PeerInfo &info);
  void set_latency(const PeerId &peer, Latency latency);

  bool contains(const PeerId &peer) const;
  std::optional<PeerMetrics> peer(const PeerId &peer) const;
  std::size_t flagged_events() const;

  MetricsSnapshot snapshot(TimeMs captured_at_ms, std::string host_node_id,
                           std::string network_id) const;

 private:
  PeerMetrics &slot(const PeerId &peer);

  std::vector<std::string> topics_;
  mutable std::mutex mu_;
  std::map<PeerId, PeerMetrics> peers_;
  std::size_t flagged_ = 0;
};

inline constexpr int kSnapshotSchema = 1;

/// Canonical JSON: sorted keys, two-space indent, trailing newline.
std::string serialize_snapshot(const MetricsSnapshot &snapshot);
MetricsSnapshot parse_snapshot(std::string_view text);

/// Writes through a temporary file and rename so readers never observe a
/// partial snapshot.
void write_snapshot(const MetricsSnapshot &snapshot,
                    const std::filesystem::path &path);
MetricsSnapshot read_snapshot(const std::filesystem::path &path);

}  // namespace gossipwatch::metrics
