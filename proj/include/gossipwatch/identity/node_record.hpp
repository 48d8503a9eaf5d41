// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <utility>

#include "gossipwatch/common.hpp"

namespace gossipwatch::identity {

using NodeId = Hash32;
using Seed = std::array<std::uint8_t, 32>;

/// IPv4 or IPv6 address held in network byte order.
class IpAddress {
 public:
  IpAddress() = default;

  static std::optional<IpAddress> parse(std::string_view text);
  static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c,
                      std::uint8_t d);
  /// Accepts 4 or 16 raw bytes.
  static std::optional<IpAddress> from_bytes(std::span<const std::uint8_t> raw);

  bool is_v4() const { return v4_; }
  std::span<const std::uint8_t> bytes() const {
    return {octets_.data(), v4_ ? 4u : 16u};
  }
  std::string to_string() const;

  /// Loopback, RFC 1918, link-local, CGNAT and IPv6 ULA/link-local ranges.
  bool is_private() const;

  friend bool operator==(const IpAddress &, const IpAddress &) = default;
  friend auto operator<=>(const IpAddress &, const IpAddress &) = default;

 private:
  bool v4_ = true;
  std::array<std::uint8_t, 16> octets_{};
};

/// Ed25519 key material. `secret` is libsodium's 64-byte expanded form.
struct Keypair {
  std::array<std::uint8_t, 64> secret{};
  std::array<std::uint8_t, 32> pub{};
};

/// Signed, sequence-numbered node record advertising identity, endpoints and
/// network membership.
struct NodeRecord {
  NodeId node_id{};
  Bytes pubkey;
  std::uint64_t seq = 0;
  IpAddress ip;
  std::uint16_t tcp_port = 0;
  std::uint16_t udp_port = 0;
  Bytes network_id;
  Bytes signature;

  friend bool operator==(const NodeRecord &, const NodeRecord &) = default;
};

/// Field updates for bump_record; unset members keep their value.
struct RecordChanges {
  std::optional<IpAddress> ip;
  std::optional<std::uint16_t> tcp_port;
  std::optional<std::uint16_t> udp_port;
  std::optional<Bytes> network_id;
};

class KeyMismatch : public Error {
 public:
  KeyMismatch() : Error("keypair does not match record public key") {}
};

NodeId node_id_from_pubkey(std::span<const std::uint8_t> pubkey);

/// libp2p peer id for an Ed25519 key: base58 of the identity multihash of the
/// protobuf-wrapped public key ("12D3KooW...").
std::string peer_id_from_pubkey(std::span<const std::uint8_t> pubkey);

/// Deterministic in `seed`. Throws std::invalid_argument on a zero port.
std::pair<Keypair, NodeRecord> generate_identity(const Seed &seed,
                                                 const IpAddress &ip,
                                                 std::uint16_t tcp_port,
                                                 std::uint16_t udp_port,
                                                 Bytes network_id);

/// Canonical encoding: u32 big-endian length prefix + bytes for each field in
/// the order node_id, pubkey, seq, ip, tcp_port, udp_port, network_id,
/// signature. Integers are big-endian.
Bytes encode_record(const NodeRecord &record);

/// encode_record without the trailing signature field.
Bytes signing_preimage(const NodeRecord &record);

std::optional<NodeRecord> decode_record(std::span<const std::uint8_t> data);

bool verify_record(const NodeRecord &record);

NodeRecord bump_record(const Keypair &keypair, const NodeRecord &record,
                       const RecordChanges &changes);

/// Text form used in config files:
///   nodeid:<hex>/seq:<n>/<ip>:<tcp>:<udp>/net:<id>/pubkey:<b64>/sig:<b64>
/// IPv6 addresses are bracketed. A network id containing anything outside
/// [A-Za-z0-9._-] is written as `net:hex:<hex>`.
std::string to_text(const NodeRecord &record);
std::optional<NodeRecord> parse_text(std::string_view text);

/// Index of the highest differing bit, 1..256; 0 when equal.
unsigned log_distance(const NodeId &a, const NodeId &b);

/// Lexicographic comparison of a^target and b^target.
bool closer_to(const NodeId &target, const NodeId &a, const NodeId &b);

}  // namespace gossipwatch::identity
