// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <random>
#include <set>
#include <stop_token>
#include <variant>

#include "gossipwatch/discovery/peerstore.hpp"
#include "gossipwatch/scheduler.hpp"

namespace gossipwatch::discovery {

inline constexpr std::size_t kMaxNodesPerMessage = 16;
inline constexpr TimeMs kDefaultTransportTimeoutMs = 2000;

struct FindNode {
  std::uint16_t distance = 0;
};

/// At most kMaxNodesPerMessage records.
struct Nodes {
  std::vector<NodeRecord> records;
};

struct Ping {
  std::uint64_t enr_seq = 0;
};

struct Pong {
  std::uint64_t enr_seq = 0;
};

using DiscoveryMessage = std::variant<FindNode, Nodes, Ping, Pong>;

/// Request/response side of the discovery protocol.
class DiscoveryTransport {
 public:
  virtual ~DiscoveryTransport() = default;

  /// Sends FindNode to `to` and returns all Nodes replies, or nullopt when the
  /// peer does not answer within `timeout_ms`.
  virtual std::optional<std::vector<Nodes>> find_node(const NodeRecord &to,
                                                      FindNode request,
                                                      TimeMs timeout_ms) = 0;
};

/// Admits verifying bootnode records; returns how many were accepted.
std::size_t bootstrap(Peerstore &store, std::span<const NodeRecord> bootnodes,
                      TimeMs now);

inline AdmitOutcome admit_record(Peerstore &store, const NodeRecord &record,
                                 TimeMs now) {
  return store.admit(record, now);
}

/// Distances asked of `peer` when looking up `target`: its log distance to the
/// target, then one further out and one closer, clipped to 1..256.
std::vector<std::uint16_t> lookup_distances(const NodeId &peer, const NodeId &target);

/// Queries the `alpha` stored peers closest to `target` with FindNode at
/// lookup_distances() and admits every returned record. A peer that times out
/// contributes nothing further. Returns the ids that were newly inserted.
std::vector<NodeId> lookup_round(Peerstore &store,
                                 DiscoveryTransport &transport,
                                 const NodeId &target, std::size_t alpha,
                                 TimeMs now,
                                 TimeMs timeout_ms = kDefaultTransportTimeoutMs);

/// Multi-producer queue of discovered node ids.
class SubscriberQueue {
 public:
  void push(const NodeId &id);
  std::vector<NodeId> drain();
  std::size_t size() const;

  /// Invoked after each push, outside the queue lock.
  void set_notify(std::function<void()> notify) { notify_ = std::move(notify); }

 private:
  mutable std::mutex mu_;
  std::deque<NodeId> items_;
  std::function<void()> notify_;
};

/// Periodic random-target lookups feeding newly inserted ids to a subscriber.
///
/// Every stored id is emitted exactly once, including ids that entered the
/// store through bootstrap before the service started.
class DiscoveryService {
 public:
  struct Options {
    TimeMs interval_ms = 1000;
    std::size_t alpha = kDefaultAlpha;
    TimeMs timeout_ms = kDefaultTransportTimeoutMs;
    std::uint64_t seed = 1;
  };

  DiscoveryService(Peerstore &store, DiscoveryTransport &transport,
                   Scheduler &scheduler, SubscriberQueue &subscriber,
                   Options options);

  /// First round runs one interval after start.
  void start(std::stop_token stop);

  std::size_t rounds() const { return rounds_; }
  std::size_t emitted() const { return emitted_.size(); }

 private:
  void tick();
  void emit_new();

  Peerstore &store_;
  DiscoveryTransport &transport_;
  Scheduler &scheduler_;
  SubscriberQueue &subscriber_;
  Options options_;
  std::mt19937_64 rng_;
  std::stop_token stop_;
  std::set<NodeId> emitted_;
  std::size_t rounds_ = 0;
};

}  // namespace gossipwatch::discovery
