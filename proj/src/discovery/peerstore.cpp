// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/discovery/peerstore.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace gossipwatch::discovery {

const char *to_string(AdmitOutcome outcome) {
  switch (outcome) {
    case AdmitOutcome::Inserted: return "Inserted";
    case AdmitOutcome::Updated: return "Updated";
    case AdmitOutcome::IgnoredStale: return "IgnoredStale";
    case AdmitOutcome::RejectedInvalid: return "RejectedInvalid";
  }
  return "?";
}

Peerstore::Peerstore(NodeId local_id) : local_id_(local_id) {}

AdmitOutcome Peerstore::admit(const NodeRecord &record, TimeMs now) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(record.node_id);
  // A byte-identical copy of the stored record was verified on admission.
  if (it != entries_.end() && it->second.record == record) {
    it->second.last_seen = now;
    return AdmitOutcome::IgnoredStale;
  }
  if (record.node_id == local_id_) {
    return AdmitOutcome::IgnoredStale;
  }
  if (!identity::verify_record(record)) {
    return AdmitOutcome::RejectedInvalid;
  }
  if (it == entries_.end()) {
    entries_.emplace(record.node_id, PeerEntry{record, now, now});
    auto distance = identity::log_distance(local_id_, record.node_id);
    auto &bucket = buckets_[distance - 1];
    if (bucket.size() < kBucketSize) {
      bucket.push_back(record.node_id);
    }
    return AdmitOutcome::Inserted;
  }
  auto &entry = it->second;
  if (record.seq > entry.record.seq) {
    entry.record = record;
    entry.last_seen = now;
    return AdmitOutcome::Updated;
  }
  if (record.seq == entry.record.seq) {
    entry.last_seen = now;
  }
  return AdmitOutcome::IgnoredStale;
}

std::size_t Peerstore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

bool Peerstore::contains(const NodeId &id) const {
  std::lock_guard lock(mu_);
  return entries_.contains(id);
}

std::optional<PeerEntry> Peerstore::find(const NodeId &id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::vector<PeerEntry> Peerstore::entries() const {
  std::lock_guard lock(mu_);
  std::vector<PeerEntry> out;
  out.reserve(entries_.size());
  for (const auto &[id, entry] : entries_) {
    out.push_back(entry);
  }
  return out;
}

std::vector<NodeRecord> Peerstore::closest(const NodeId &target,
                                           std::size_t n) const {
  std::lock_guard lock(mu_);
  std::vector<const NodeRecord *> all;
  all.reserve(entries_.size());
  for (const auto &[id, entry] : entries_) {
    all.push_back(&entry.record);
  }
  auto k = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), [&](const NodeRecord *a, const NodeRecord *b) {
                      return identity::closer_to(target, a->node_id,
                                                 b->node_id);
                    });
  std::vector<NodeRecord> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(*all[i]);
  }
  return out;
}

std::vector<NodeId> Peerstore::bucket(unsigned distance) const {
  if (distance < 1 || distance > kBucketCount) {
    return {};
  }
  std::lock_guard lock(mu_);
  return buckets_[distance - 1];
}

std::vector<DumpEntry> Peerstore::dump() const {
  std::lock_guard lock(mu_);
  std::vector<DumpEntry> out;
  out.reserve(entries_.size());
  for (const auto &[id, entry] : entries_) {
    const auto &r = entry.record;
    out.push_back(DumpEntry{to_hex(id), r.seq, r.ip.to_string(), r.tcp_port,
                            r.udp_port,
                            std::string(r.network_id.begin(),
                                        r.network_id.end()),
                            entry.first_seen, entry.last_seen});
  }
  return out;
}

void write_dump(std::ostream &out, const std::vector<DumpEntry> &entries) {
  for (const auto &e : entries) {
    nlohmann::json j = {{"node_id", e.node_id},
                        {"seq", e.seq},
                        {"ip", e.ip},
                        {"tcp", e.tcp},
                        {"udp", e.udp},
                        {"network_id", e.network_id},
                        {"first_seen_ms", e.first_seen_ms},
                        {"last_seen_ms", e.last_seen_ms}};
    out << j.dump() << '\n';
  }
}

std::vector<DumpEntry> read_dump(std::istream &in) {
  std::vector<DumpEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      DumpEntry e;
      e.node_id = j.at("node_id").get<std::string>();
      e.seq = j.at("seq").get<std::uint64_t>();
      e.ip = j.at("ip").get<std::string>();
      e.tcp = j.at("tcp").get<std::uint16_t>();
      e.udp = j.at("udp").get<std::uint16_t>();
      e.network_id = j.at("network_id").get<std::string>();
      e.first_seen_ms = j.at("first_seen_ms").get<TimeMs>();
      e.last_seen_ms = j.at("last_seen_ms").get<TimeMs>();
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception &ex) {
      throw Error("peerstore dump line " + std::to_string(line_no) + ": "
                  + ex.what());
    }
  }
  return out;
}

}  // namespace gossipwatch::discovery
