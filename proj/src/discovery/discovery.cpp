// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/discovery/discovery.hpp"

#include "gossipwatch/log.hpp"

namespace gossipwatch::discovery {

std::size_t bootstrap(Peerstore &store, std::span<const NodeRecord> bootnodes,
                      TimeMs now) {
  std::size_t admitted = 0;
  for (const auto &record : bootnodes) {
    auto outcome = store.admit(record, now);
    if (outcome == AdmitOutcome::Inserted || outcome == AdmitOutcome::Updated) {
      ++admitted;
    }
  }
  return admitted;
}

std::vector<std::uint16_t> lookup_distances(const NodeId &peer, const NodeId &target) {
  const auto d = static_cast<int>(identity::log_distance(peer, target));
  std::vector<std::uint16_t> out;
  for (int c : {d, d + 1, d - 1}) {
    if (c >= 1 && c <= static_cast<int>(kBucketCount)) {
      out.push_back(static_cast<std::uint16_t>(c));
    }
  }
  return out;
}

std::vector<NodeId> lookup_round(Peerstore &store,
                                 DiscoveryTransport &transport,
                                 const NodeId &target, std::size_t alpha,
                                 TimeMs now, TimeMs timeout_ms) {
  std::vector<NodeId> inserted;
  for (const auto &peer : store.closest(target, std::max<std::size_t>(alpha, 1))) {
    for (auto distance : lookup_distances(peer.node_id, target)) {
      auto replies = transport.find_node(peer, FindNode{distance}, timeout_ms);
      if (!replies) {
        spdlog::debug("discovery: {} timed out", to_hex(peer.node_id).substr(0, 12));
        break;
      }
      for (const auto &nodes : *replies) {
        // Oversized replies are a protocol violation; the excess is dropped.
        auto n = std::min(nodes.records.size(), kMaxNodesPerMessage);
        for (std::size_t i = 0; i < n; ++i) {
          if (store.admit(nodes.records[i], now) == AdmitOutcome::Inserted) {
            inserted.push_back(nodes.records[i].node_id);
          }
        }
      }
    }
  }
  return inserted;
}

void SubscriberQueue::push(const NodeId &id) {
  {
    std::lock_guard lock(mu_);
    items_.push_back(id);
  }
  if (notify_) {
    notify_();
  }
}

std::vector<NodeId> SubscriberQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<NodeId> out(items_.begin(), items_.end());
  items_.clear();
  return out;
}

std::size_t SubscriberQueue::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

DiscoveryService::DiscoveryService(Peerstore &store,
                                   DiscoveryTransport &transport,
                                   Scheduler &scheduler,
                                   SubscriberQueue &subscriber,
                                   Options options)
    : store_(store),
      transport_(transport),
      scheduler_(scheduler),
      subscriber_(subscriber),
      options_(options),
      rng_(options.seed) {}

void DiscoveryService::start(std::stop_token stop) {
  stop_ = std::move(stop);
  scheduler_.post_after(options_.interval_ms, [this] { tick(); });
}

void DiscoveryService::emit_new() {
  for (const auto &entry : store_.entries()) {
    if (emitted_.insert(entry.record.node_id).second) {
      subscriber_.push(entry.record.node_id);
    }
  }
}

void DiscoveryService::tick() {
  if (stop_.stop_requested()) {
    return;
  }
  if (rounds_ == 0) {
    emit_new();
  }
  NodeId target{};
  for (auto &b : target) {
    b = static_cast<std::uint8_t>(rng_());
  }
  ++rounds_;
  if (store_.size() > 0) {
    auto inserted = lookup_round(store_, transport_, target, options_.alpha,
                                 scheduler_.now(), options_.timeout_ms);
    for (const auto &id : inserted) {
      if (emitted_.insert(id).second) {
        subscriber_.push(id);
      }
    }
  } else {
    spdlog::info("discovery: peerstore empty, nothing to query");
  }
  scheduler_.post_after(options_.interval_ms, [this] { tick(); });
}

}  // namespace gossipwatch::discovery
