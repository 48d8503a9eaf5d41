// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/gossip/router.hpp"

#include <algorithm>
#include <ostream>

namespace gossipwatch::gossip {

namespace {
constexpr std::size_t kPublished = static_cast<std::size_t>(-1);
}

MessageId GossipMessage::compute_id(std::string_view topic,
                                    std::span<const std::uint8_t> payload) {
  Bytes preimage;
  preimage.reserve(4 + topic.size() + payload.size());
  auto n = static_cast<std::uint32_t>(topic.size());
  preimage.push_back(static_cast<std::uint8_t>(n >> 24));
  preimage.push_back(static_cast<std::uint8_t>(n >> 16));
  preimage.push_back(static_cast<std::uint8_t>(n >> 8));
  preimage.push_back(static_cast<std::uint8_t>(n));
  preimage.insert(preimage.end(), topic.begin(), topic.end());
  preimage.insert(preimage.end(), payload.begin(), payload.end());
  return sha256(preimage);
}

GossipMessage GossipMessage::make(std::string topic, Bytes payload) {
  GossipMessage m;
  m.id = compute_id(topic, payload);
  m.topic = std::move(topic);
  m.payload = std::move(payload);
  return m;
}

Router::Router(PeerId self, Params params, std::uint64_t seed)
    : self_(std::move(self)), params_(params), rng_(seed) {
  history_.emplace_back();
}

void Router::subscribe(const std::string &topic) {
  if (!subscriptions_.insert(topic).second) {
    throw AlreadySubscribed(topic);
  }
  mesh_[topic];
}

bool Router::subscribed(const std::string &topic) const {
  return subscriptions_.contains(topic);
}

void Router::add_peer(const PeerId &peer,
                      const std::vector<std::string> &topics) {
  peers_[peer].insert(topics.begin(), topics.end());
}

void Router::remove_peer(const PeerId &peer) {
  peers_.erase(peer);
  for (auto &[topic, members] : mesh_) {
    members.erase(peer);
  }
}

void Router::remember(const GossipMessage &msg, const PeerId &from,
                      TimeMs now) {
  cache_[msg.id] = CacheEntry{msg, from, now};
  history_.front().emplace_back(msg.id, msg.topic);
  pending_.erase(msg.id);
}

Delivery Router::handle_full_message(const PeerId &from,
                                     const GossipMessage &msg, TimeMs now) {
  if (!subscribed(msg.topic)) {
    return Delivery::Ignored;
  }
  if (delivered_.contains(msg.id)) {
    return Delivery::Duplicate;
  }
  delivered_.emplace(msg.id, log_.size());
  log_.push_back(DeliveryRecord{msg.id, msg.topic, from, now});
  remember(msg, from, now);
  if (hook_) {
    hook_(log_.back());
  }
  return Delivery::DeliveredFirst;
}

bool Router::pending(const MessageId &id, TimeMs now) const {
  auto it = pending_.find(id);
  return it != pending_.end() && it->second > now;
}

std::vector<MessageId> Router::handle_ihave(const PeerId &from,
                                            const std::string &topic,
                                            const std::vector<MessageId> &ids,
                                            TimeMs now) {
  (void)from;
  std::vector<MessageId> wanted;
  if (!subscribed(topic)) {
    return wanted;
  }
  const TimeMs expiry =
      now + static_cast<TimeMs>(params_.history_gossip) * params_.heartbeat_ms;
  for (const auto &id : ids) {
    if (delivered_.contains(id) || pending(id, now)) {
      continue;
    }
    pending_[id] = expiry;
    wanted.push_back(id);
  }
  return wanted;
}

std::vector<GossipMessage> Router::handle_iwant(
    const PeerId &from, const std::vector<MessageId> &ids, TimeMs now) const {
  (void)from;
  std::vector<GossipMessage> out;
  for (const auto &id : ids) {
    auto it = cache_.find(id);
    if (it != cache_.end() && now - it->second.received_at <= params_.seen_ttl_ms) {
      out.push_back(it->second.message);
    }
  }
  return out;
}

bool Router::handle_graft(const PeerId &from, const std::string &topic) {
  if (!subscribed(topic)) {
    return false;
  }
  auto &members = mesh_[topic];
  if (members.contains(from)) {
    return true;
  }
  if (members.size() >= params_.d_high) {
    return false;
  }
  members.insert(from);
  return true;
}

void Router::handle_prune(const PeerId &from, const std::string &topic) {
  auto it = mesh_.find(topic);
  if (it != mesh_.end()) {
    it->second.erase(from);
  }
}

void Router::join_mesh(const PeerId &peer, const std::string &topic) {
  mesh_[topic].insert(peer);
}

std::vector<PeerId> Router::sample(std::vector<PeerId> candidates,
                                   std::size_t n) {
  std::shuffle(candidates.begin(), candidates.end(), rng_);
  if (candidates.size() > n) {
    candidates.resize(n);
  }
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<ControlAction> Router::heartbeat(TimeMs now) {
  std::vector<ControlAction> actions;

  std::erase_if(pending_, [&](const auto &kv) { return kv.second <= now; });
  std::erase_if(cache_, [&](const auto &kv) {
    return now - kv.second.received_at > params_.seen_ttl_ms;
  });

  for (const auto &topic : subscriptions_) {
    auto &members = mesh_[topic];
    std::vector<PeerId> outside;
    for (const auto &[peer, topics] : peers_) {
      if (topics.contains(topic) && !members.contains(peer)) {
        outside.push_back(peer);
      }
    }

    if (members.size() < params_.d_low) {
      for (auto &peer : sample(outside, params_.d - members.size())) {
        members.insert(peer);
        actions.push_back({ControlAction::Kind::Graft, peer, topic, {}});
      }
      std::erase_if(outside,
                    [&](const PeerId &p) { return members.contains(p); });
    } else if (members.size() > params_.d_high) {
      std::vector<PeerId> current(members.begin(), members.end());
      for (auto &peer : sample(current, members.size() - params_.d)) {
        members.erase(peer);
        actions.push_back({ControlAction::Kind::Prune, peer, topic, {}});
        outside.push_back(peer);
      }
      std::sort(outside.begin(), outside.end());
    }

    std::vector<MessageId> recent;
    for (std::size_t w = 0; w < history_.size() && w < params_.history_gossip;
         ++w) {
      for (const auto &[id, t] : history_[w]) {
        if (t == topic) {
          recent.push_back(id);
        }
      }
    }
    if (!recent.empty()) {
      for (auto &peer : sample(outside, params_.gossip_sample)) {
        actions.push_back({ControlAction::Kind::IHave, peer, topic, recent});
      }
    }
  }

  history_.emplace_front();
  while (history_.size() > std::max<std::size_t>(params_.history_gossip, 1)) {
    history_.pop_back();
  }
  return actions;
}

PublishResult Router::publish(const std::string &topic, Bytes payload,
                              TimeMs now) {
  if (!subscribed(topic)) {
    throw NotSubscribed(topic);
  }
  PublishResult result;
  result.message = GossipMessage::make(topic, std::move(payload));
  if (!delivered_.contains(result.message.id)) {
    delivered_.emplace(result.message.id, kPublished);
    remember(result.message, self_, now);
  }
  const auto &members = mesh_[topic];
  result.forwards.assign(members.begin(), members.end());
  return result;
}

std::vector<PeerId> Router::forward_targets(const std::string &topic,
                                            const PeerId &exclude) const {
  std::vector<PeerId> out;
  auto it = mesh_.find(topic);
  if (it == mesh_.end()) {
    return out;
  }
  for (const auto &peer : it->second) {
    if (peer != exclude) {
      out.push_back(peer);
    }
  }
  return out;
}

std::set<PeerId> Router::mesh(const std::string &topic) const {
  auto it = mesh_.find(topic);
  return it == mesh_.end() ? std::set<PeerId>{} : it->second;
}

void write_delivery_log(std::ostream &out, const std::vector<DeliveryRecord> &log) {
  out << "msg_id_hex,topic,first_relayer_peer_id,t_ms\n";
  for (const auto &d : log) {
    out << to_hex(d.id) << ',' << d.topic << ',' << d.first_relayer << ',' << d.t_ms << '\n';
  }
}

}  // namespace gossipwatch::gossip
