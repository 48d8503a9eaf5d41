// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gossipwatch/discovery/discovery.hpp"
#include "gossipwatch/gossip/router.hpp"
#include "gossipwatch/metrics/metrics.hpp"

namespace gossipwatch::crawler {

using SessionId = std::uint64_t;

enum class DialOutcome { Connected, Refused, Timeout, HandshakeFailed };

const char *to_string(DialOutcome outcome);

/// Chain-view summary exchanged right after a connection opens.
struct StatusMessage {
  Bytes network_id;
  std::uint64_t head_slot = 0;
  Hash32 head_root{};
  std::uint64_t finalized_epoch = 0;
  Hash32 finalized_root{};

  friend bool operator==(const StatusMessage &, const StatusMessage &) = default;
};

/// The status a monitoring host always presents: slot 0, epoch 0, zero roots.
StatusMessage genesis_status(Bytes network_id);

struct Endpoint {
  identity::IpAddress ip;
  std::uint16_t tcp_port = 0;
  std::uint16_t udp_port = 0;
};

/// Transport calls return synchronously with the outcome they will have and
/// `elapsed_ms`, the time the exchange takes on the wire. Callers post their
/// continuation that far into the future.
struct DialReply {
  DialOutcome outcome = DialOutcome::Timeout;
  SessionId session = 0;
  TimeMs elapsed_ms = 0;
};

struct StatusReply {
  std::optional<StatusMessage> status;  // nullopt: remote stayed silent
  std::string user_agent;
  TimeMs elapsed_ms = 0;
};

struct PingReply {
  std::optional<TimeMs> rtt_ms;  // nullopt: timeout
  TimeMs elapsed_ms = 0;
};

class BindFailure : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Network-originated events delivered to a bound host.
class HostEvents {
 public:
  virtual ~HostEvents() = default;
  virtual void on_inbound(const identity::NodeRecord &remote, SessionId session) = 0;
  virtual void on_disconnected(SessionId session) = 0;
  virtual void on_message(SessionId session, const gossip::GossipMessage &msg) = 0;
  virtual void on_ihave(SessionId session, const std::string &topic,
                        const std::vector<gossip::MessageId> &ids) = 0;
  virtual void on_graft(SessionId session, const std::string &topic) = 0;
  virtual void on_prune(SessionId session, const std::string &topic) = 0;
  /// Per-topic stream attach/detach notices. Only transports that model
  /// stream-level bookkeeping emit these.
  virtual void on_stream_event(SessionId session, metrics::EventKind kind) = 0;
};

class HostTransport : public discovery::DiscoveryTransport {
 public:
  /// Throws BindFailure when the endpoint is taken.
  virtual void bind(const Endpoint &endpoint, HostEvents &events) = 0;
  virtual DialReply dial(const identity::NodeRecord &remote, TimeMs timeout_ms) = 0;
  virtual StatusReply exchange_status(SessionId session, const StatusMessage &ours,
                                      const std::string &our_user_agent,
                                      TimeMs timeout_ms) = 0;
  virtual PingReply ping(SessionId session, TimeMs timeout_ms) = 0;
  virtual void close(SessionId session) = 0;
  virtual void send_control(SessionId session, const gossip::ControlAction &action) = 0;
  virtual void send_iwant(SessionId session, const std::vector<gossip::MessageId> &ids) = 0;
  virtual void send_message(SessionId session, const gossip::GossipMessage &msg) = 0;
};

/// Placeholder for a real-network transport. Every call throws Unsupported.
class LiveTransport final : public HostTransport {
 public:
  std::optional<std::vector<discovery::Nodes>> find_node(
      const identity::NodeRecord &, discovery::FindNode, TimeMs) override;
  void bind(const Endpoint &, HostEvents &) override;
  DialReply dial(const identity::NodeRecord &, TimeMs) override;
  StatusReply exchange_status(SessionId, const StatusMessage &, const std::string &,
                              TimeMs) override;
  PingReply ping(SessionId, TimeMs) override;
  void close(SessionId) override;
  void send_control(SessionId, const gossip::ControlAction &) override;
  void send_iwant(SessionId, const std::vector<gossip::MessageId> &) override;
  void send_message(SessionId, const gossip::GossipMessage &) override;
};

}  // namespace gossipwatch::crawler
