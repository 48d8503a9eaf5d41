// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <stop_token>

#include "gossipwatch/crawler/config.hpp"
#include "gossipwatch/crawler/geo.hpp"
#include "gossipwatch/crawler/transport.hpp"

namespace gossipwatch::crawler {

enum class HandshakeError { NetworkMismatch, HandshakeTimeout };

const char *to_string(HandshakeError error);

struct HandshakeResult {
  std::optional<HandshakeError> error;
  StatusMessage remote;
  std::string user_agent;
  TimeMs elapsed_ms = 0;

  bool ok() const { return !error.has_value(); }
};

struct DialAttempt {
  std::string node_id;  // hex
  DialOutcome outcome = DialOutcome::Timeout;
  TimeMs t_ms = 0;
};

struct BackoffPolicy {
  TimeMs base_ms = 30'000;
  std::int64_t factor = 2;
  TimeMs cap_ms = 30 * 60'000;

  /// Delay before retry number `failures` (1-based).
  TimeMs delay(unsigned failures) const;
};

struct HostOptions {
  TimeMs discovery_interval_ms = 1000;
  std::size_t alpha = discovery::kDefaultAlpha;
  TimeMs discovery_timeout_ms = discovery::kDefaultTransportTimeoutMs;
  TimeMs dial_timeout_ms = 10'000;
  TimeMs handshake_timeout_ms = 10'000;
  TimeMs ping_timeout_ms = 60'000;
  TimeMs ping_interval_ms = 60'000;
  double latency_alpha = 0.3;
  BackoffPolicy backoff;
  gossip::Params gossip;
  /// Periodic snapshots go here; empty disables the export timer.
  std::filesystem::path output_dir;
};

/// A running monitoring host: identity, gossip router, peerstore, discovery,
/// connect-all dialer, latency probes and the metrics store, all driven as
/// tasks on one Scheduler.
class Host final : public HostEvents {
 public:
  /// Generates the identity, binds, subscribes to the configured topics,
  /// bootstraps the peerstore and starts every service.
  /// Throws BadConfig or BindFailure.
  static std::unique_ptr<Host> init(const HostConfig &config,
                                    const identity::Seed &seed,
                                    HostTransport &transport,
                                    Scheduler &scheduler,
                                    std::shared_ptr<const GeoProvider> geo,
                                    HostOptions options = {});

  ~Host() override;
  Host(const Host &) = delete;
  Host &operator=(const Host &) = delete;

  /// No new dials or probes are issued afterwards; in-flight exchanges finish.
  void stop();
  bool stopped() const { return stop_.stop_requested(); }

  const HostConfig &config() const { return config_; }
  const identity::NodeRecord &record() const { return record_; }
  const identity::Keypair &keypair() const { return keypair_; }
  const gossip::PeerId &peer_id() const { return peer_id_; }
  StatusMessage local_status() const;

  discovery::Peerstore &peerstore() { return peerstore_; }
  const discovery::Peerstore &peerstore() const { return peerstore_; }
  const gossip::Router &router() const { return router_; }
  const metrics::MetricsStore &metrics() const { return metrics_; }
  const std::vector<DialAttempt> &dial_log() const { return dial_log_; }
  std::size_t dials_in_flight() const { return in_flight_; }
  std::size_t connected_count() const;
  std::size_t discovery_rounds() const;
  /// Per-topic stream notices recorded as raw connection events.
  std::size_t stream_events() const { return stream_events_; }

  /// Exchanges status on an open session. A network mismatch closes it.
  HandshakeResult status_handshake(SessionId session);

  /// Pings the peer's current session and folds the RTT into its latency.
  /// Returns the updated latency, or nullopt on timeout / no session.
  std::optional<metrics::Latency> measure_latency(const gossip::PeerId &peer);

  metrics::MetricsSnapshot snapshot(TimeMs now) const;

  /// Writes snapshot-<ms>.json and peerstore-<ms>.jsonl into `dir`.
  std::filesystem::path export_snapshot(const std::filesystem::path &dir,
                                        TimeMs now) const;

  // HostEvents
  void on_inbound(const identity::NodeRecord &remote, SessionId session) override;
  void on_disconnected(SessionId session) override;
  void on_message(SessionId session, const gossip::GossipMessage &msg) override;
  void on_ihave(SessionId session, const std::string &topic,
                const std::vector<gossip::MessageId> &ids) override;
  void on_graft(SessionId session, const std::string &topic) override;
  void on_prune(SessionId session, const std::string &topic) override;
  void on_stream_event(SessionId session, metrics::EventKind kind) override;

 private:
  struct PeerState;

  Host(const HostConfig &config, const identity::Seed &seed,
       HostTransport &transport, Scheduler &scheduler,
       std::shared_ptr<const GeoProvider> geo, HostOptions options);

  void start();
  void enqueue(const identity::NodeId &id);
  void pump();
  void dial_done(const identity::NodeId &id, DialReply reply);
  void handshake_done(const identity::NodeId &id, SessionId session,
                      bool outbound, HandshakeResult result);
  void establish(PeerState &peer, const HandshakeResult &result);
  void fail(PeerState &peer, DialOutcome outcome);
  void schedule_retry(const identity::NodeId &id, TimeMs delay);
  void ping_loop(const identity::NodeId &id, SessionId session);
  void heartbeat_loop();
  void export_loop();
  PeerState *by_session(SessionId session);
  PeerState &state_for(const identity::NodeRecord &record);
  SessionId session_of(const gossip::PeerId &peer) const;

  HostConfig config_;
  HostOptions options_;
  HostTransport &transport_;
  Scheduler &scheduler_;
  std::shared_ptr<const GeoProvider> geo_;
  identity::Keypair keypair_;
  identity::NodeRecord record_;
  gossip::PeerId peer_id_;
  discovery::Peerstore peerstore_;
  gossip::Router router_;
  metrics::MetricsStore metrics_;
  discovery::SubscriberQueue discovered_;
  std::unique_ptr<discovery::DiscoveryService> discovery_;
  std::stop_source stop_;

  std::map<identity::NodeId, std::unique_ptr<PeerState>> peers_;
  std::map<SessionId, identity::NodeId> sessions_;
  std::map<gossip::PeerId, identity::NodeId> by_peer_id_;
  std::deque<identity::NodeId> dial_queue_;
  std::size_t in_flight_ = 0;
  bool pump_scheduled_ = false;
  std::vector<DialAttempt> dial_log_;
  std::size_t stream_events_ = 0;
};

}  // namespace gossipwatch::crawler
