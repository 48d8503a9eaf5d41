// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <mutex>
#include <vector>

#include "gossipwatch/identity/node_record.hpp"

namespace gossipwatch::discovery {

using identity::NodeId;
using identity::NodeRecord;

inline constexpr std::size_t kBucketSize = 16;
inline constexpr std::size_t kBucketCount = 256;
inline constexpr std::size_t kDefaultAlpha = 3;

enum class AdmitOutcome { Inserted, Updated, IgnoredStale, RejectedInvalid };

const char *to_string(AdmitOutcome outcome);

struct PeerEntry {
  NodeRecord record;
  TimeMs first_seen = 0;
  TimeMs last_seen = 0;
};

/// One line of the peerstore dump file.
struct DumpEntry {
  std::string node_id;
  std::uint64_t seq = 0;
  std::string ip;
  std::uint16_t tcp = 0;
  std::uint16_t udp = 0;
  std::string network_id;
  TimeMs first_seen_ms = 0;
  TimeMs last_seen_ms = 0;

  friend bool operator==(const DumpEntry &, const DumpEntry &) = default;
};

/// Database of discovered node records.
///
/// Every admitted record lives in `entries`. The routing table is the
/// XOR-distance bucket index over those entries; a bucket holds at most
/// kBucketSize ids and a record arriving at a full bucket is kept in the
/// entries but not indexed (no ping-replace eviction).
///
/// All members lock internally, so one instance may be shared between the
/// discovery service and the crawler.
class Peerstore {
 public:
  explicit Peerstore(NodeId local_id);

  const NodeId &local_id() const { return local_id_; }

  /// Inserted for an unseen id, Updated when seq grows, IgnoredStale when it
  /// does not (refreshing last_seen on equal seq), RejectedInvalid when the
  /// record fails verification. The local node's own record is ignored.
  AdmitOutcome admit(const NodeRecord &record, TimeMs now);

  std::size_t size() const;
  bool contains(const NodeId &id) const;
  std::optional<PeerEntry> find(const NodeId &id) const;

  /// Consistent copy of all entries ordered by node id.
  std::vector<PeerEntry> entries() const;

  /// Up to `n` stored records ordered by XOR distance to `target`.
  std::vector<NodeRecord> closest(const NodeId &target, std::size_t n) const;

  /// Ids indexed at log distance `distance` (1..256) from the local id.
  std::vector<NodeId> bucket(unsigned distance) const;

  std::vector<DumpEntry> dump() const;

 private:
  NodeId local_id_;
  mutable std::mutex mu_;
  std::map<NodeId, PeerEntry> entries_;
  std::array<std::vector<NodeId>, kBucketCount> buckets_;
};

/// JSON-lines peerstore dump. One object per line with keys node_id, seq, ip,
/// tcp, udp, network_id, first_seen_ms, last_seen_ms.
void write_dump(std::ostream &out, const std::vector<DumpEntry> &entries);
std::vector<DumpEntry> read_dump(std::istream &in);

}  // namespace gossipwatch::discovery
