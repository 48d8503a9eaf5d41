// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "gossipwatch/common.hpp"

namespace gossipwatch::gossip {

using PeerId = std::string;
using MessageId = Hash32;

/// The five beacon-chain topics the crawler joins by default.
inline const std::vector<std::string> &default_topics() {
  static const std::vector<std::string> topics = {
      "BeaconBlock", "BeaconAggregateAndProof", "VoluntaryExit",
      "ProposerSlashing", "AttesterSlashing"};
  return topics;
}

struct Params {
  std::size_t d = 6;
  std::size_t d_low = 4;
  std::size_t d_high = 12;
  TimeMs heartbeat_ms = 700;
  TimeMs seen_ttl_ms = 120'000;
  std::size_t history_gossip = 3;  // heartbeats of ids advertised in IHAVE
  std::size_t gossip_sample = 6;
};

struct GossipMessage {
  std::string topic;
  Bytes payload;
  MessageId id{};

  /// Builds a message with id = sha256(u32be(len(topic)) || topic || payload).
  static GossipMessage make(std::string topic, Bytes payload);
  static MessageId compute_id(std::string_view topic,
                              std::span<const std::uint8_t> payload);

  bool id_matches() const { return compute_id(topic, payload) == id; }

  friend bool operator==(const GossipMessage &, const GossipMessage &) = default;
};

enum class Delivery { DeliveredFirst, Duplicate, Ignored };

struct DeliveryRecord {
  MessageId id{};
  std::string topic;
  PeerId first_relayer;
  TimeMs t_ms = 0;
};

struct ControlAction {
  enum class Kind { Graft, Prune, IHave };
  Kind kind = Kind::Graft;
  PeerId peer;
  std::string topic;
  std::vector<MessageId> ids;  // IHave only
};

struct PublishResult {
  GossipMessage message;
  std::vector<PeerId> forwards;
};

class AlreadySubscribed : public Error {
 public:
  explicit AlreadySubscribed(const std::string &topic)
      : Error("already subscribed: " + topic) {}
};

class NotSubscribed : public Error {
 public:
  explicit NotSubscribed(const std::string &topic)
      : Error("not subscribed: " + topic) {}
};

/// Single-host GossipSub state: subscriptions, per-topic meshes, seen cache,
/// IHAVE/IWANT bookkeeping and the append-only delivery log.
///
/// Not thread-safe; the owner serializes all calls through one event loop.
///
/// Dedup is decided by the delivery log, which never forgets an id. The seen
/// cache (TTL `seen_ttl_ms`) keeps full messages for IWANT service and records
/// the first relayer while an id is fresh.
class Router {
 public:
  using DeliveryHook = std::function<void(const DeliveryRecord &)>;

  Router(PeerId self, Params params, std::uint64_t seed);

  const PeerId &self() const { return self_; }
  const Params &params() const { return params_; }

  void subscribe(const std::string &topic);
  bool subscribed(const std::string &topic) const;
  const std::set<std::string> &subscriptions() const { return subscriptions_; }

  /// Registers a connected peer and the topics it participates in.
  void add_peer(const PeerId &peer, const std::vector<std::string> &topics);
  void remove_peer(const PeerId &peer);
  bool has_peer(const PeerId &peer) const { return peers_.contains(peer); }

  /// Fired exactly once per delivered message, inside handle_full_message.
  void set_delivery_hook(DeliveryHook hook) { hook_ = std::move(hook); }

  Delivery handle_full_message(const PeerId &from, const GossipMessage &msg,
                               TimeMs now);

  /// Ids worth requesting: on a subscribed topic, unseen and not already
  /// requested from someone else. Returned ids become pending.
  std::vector<MessageId> handle_ihave(const PeerId &from,
                                      const std::string &topic,
                                      const std::vector<MessageId> &ids,
                                      TimeMs now);

  std::vector<GossipMessage> handle_iwant(const PeerId &from,
                                          const std::vector<MessageId> &ids,
                                          TimeMs now) const;

  /// Remote GRAFT. Accepted while the mesh is below d_high; a refusal means
  /// the caller answers with PRUNE.
  bool handle_graft(const PeerId &from, const std::string &topic);
  void handle_prune(const PeerId &from, const std::string &topic);

  /// Adds `peer` to the topic mesh unconditionally. Heartbeat restores bounds.
  void join_mesh(const PeerId &peer, const std::string &topic);

  /// Mesh maintenance plus IHAVE gossip. GRAFT/PRUNE actions are already
  /// applied to local state when returned.
  std::vector<ControlAction> heartbeat(TimeMs now);

  PublishResult publish(const std::string &topic, Bytes payload, TimeMs now);

  /// Mesh peers for the topic other than `exclude`.
  std::vector<PeerId> forward_targets(const std::string &topic,
                                      const PeerId &exclude) const;

  std::set<PeerId> mesh(const std::string &topic) const;
  bool seen(const MessageId &id) const { return delivered_.contains(id); }
  bool pending(const MessageId &id, TimeMs now) const;
  const std::vector<DeliveryRecord> &delivery_log() const { return log_; }
  std::size_t seen_cache_size() const { return cache_.size(); }

 private:
  struct CacheEntry {
    GossipMessage message;
    PeerId first_relayer;
    TimeMs received_at = 0;
  };

  void remember(const GossipMessage &msg, const PeerId &from, TimeMs now);
  std::vector<PeerId> sample(std::vector<PeerId> candidates, std::size_t n);

  PeerId self_;
  Params params_;
  std::mt19937_64 rng_;
  std::set<std::string> subscriptions_;
  std::map<PeerId, std::set<std::string>> peers_;
  std::map<std::string, std::set<PeerId>> mesh_;
  std::unordered_map<MessageId, CacheEntry, Hash32Hasher> cache_;
  std::unordered_map<MessageId, TimeMs, Hash32Hasher> pending_;
  std::unordered_map<MessageId, std::size_t, Hash32Hasher> delivered_;
  // Newest heartbeat window first; ids with their topic.
  std::deque<std::vector<std::pair<MessageId, std::string>>> history_;
  std::vector<DeliveryRecord> log_;
  DeliveryHook hook_;
};

/// CSV with header `msg_id_hex,topic,first_relayer_peer_id,t_ms`.
void write_delivery_log(std::ostream &out, const std::vector<DeliveryRecord> &log);

}  // namespace gossipwatch::gossip
