// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/identity/node_record.hpp"

#include <arpa/inet.h>
#include <sodium.h>

#include <bit>
#include <charconv>
#include <stdexcept>

namespace gossipwatch::identity {

namespace {

void put_field(Bytes &out, std::span<const std::uint8_t> field) {
  auto n = static_cast<std::uint32_t>(field.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), field.begin(), field.end());
}

template <typename T>
std::array<std::uint8_t, sizeof(T)> big_endian(T v) {
  std::array<std::uint8_t, sizeof(T)> out{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[sizeof(T) - 1 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  return out;
}

template <typename T>
std::optional<T> read_big_endian(std::span<const std::uint8_t> raw) {
  if (raw.size() != sizeof(T)) {
    return std::nullopt;
  }
  T v = 0;
  for (auto b : raw) {
    v = static_cast<T>((v << 8) | b);
  }
  return v;
}

class FieldReader {
 public:
  explicit FieldReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::optional<std::span<const std::uint8_t>> next() {
    if (data_.size() < 4) {
      return std::nullopt;
    }
    std::uint32_t n = (std::uint32_t{data_[0]} << 24)
                    | (std::uint32_t{data_[1]} << 16)
                    | (std::uint32_t{data_[2]} << 8) | data_[3];
    data_ = data_.subspan(4);
    if (data_.size() < n) {
      return std::nullopt;
    }
    auto field = data_.first(n);
    data_ = data_.subspan(n);
    return field;
  }

  bool done() const { return data_.empty(); }

 private:
  std::span<const std::uint8_t> data_;
};

void sign_in_place(const Keypair &keypair, NodeRecord &record) {
  auto preimage = signing_preimage(record);
  record.signature.assign(crypto_sign_BYTES, 0);
  crypto_sign_detached(record.signature.data(), nullptr, preimage.data(),
                       preimage.size(), keypair.secret.data());
}

bool is_plain_network_id(std::span<const std::uint8_t> id) {
  if (id.empty()) {
    return false;
  }
  for (auto c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')
              || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) {
      return false;
    }
  }
  return true;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::uint16_t> parse_port(std::string_view s) {
  auto v = parse_u64(s);
  if (!v || *v > 0xffff) {
    return std::nullopt;
  }
  return static_cast<std::uint16_t>(*v);
}

std::optional<std::string_view> strip_prefix(std::string_view s,
                                             std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) {
    return std::nullopt;
  }
  return s.substr(prefix.size());
}

}  // namespace

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  std::string buf(text);
  IpAddress ip;
  if (inet_pton(AF_INET, buf.c_str(), ip.octets_.data()) == 1) {
    ip.v4_ = true;
    return ip;
  }
  if (inet_pton(AF_INET6, buf.c_str(), ip.octets_.data()) == 1) {
    ip.v4_ = false;
    return ip;
  }
  return std::nullopt;
}

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c,
                        std::uint8_t d) {
  IpAddress ip;
  ip.octets_[0] = a;
  ip.octets_[1] = b;
  ip.octets_[2] = c;
  ip.octets_[3] = d;
  return ip;
}

std::optional<IpAddress> IpAddress::from_bytes(
    std::span<const std::uint8_t> raw) {
  if (raw.size() != 4 && raw.size() != 16) {
    return std::nullopt;
  }
  IpAddress ip;
  ip.v4_ = raw.size() == 4;
  std::copy(raw.begin(), raw.end(), ip.octets_.begin());
  return ip;
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN] = {};
  inet_ntop(v4_ ? AF_INET : AF_INET6, octets_.data(), buf, sizeof(buf));
  return buf;
}

bool IpAddress::is_private() const {
  const auto &o = octets_;
  if (v4_) {
    return o[0] == 10 || o[0] == 127 || (o[0] == 172 && (o[1] & 0xf0) == 16)
           || (o[0] == 192 && o[1] == 168) || (o[0] == 169 && o[1] == 254)
           || (o[0] == 100 && (o[1] & 0xc0) == 64) || o[0] == 0;
  }
  bool loopback = true;
  for (std::size_t i = 0; i < 15; ++i) {
    loopback = loopback && o[i] == 0;
  }
  if (loopback && o[15] == 1) {
    return true;
  }
  return (o[0] & 0xfe) == 0xfc || (o[0] == 0xfe && (o[1] & 0xc0) == 0x80);
}

NodeId node_id_from_pubkey(std::span<const std::uint8_t> pubkey) {
  return sha256(pubkey);
}

std::string peer_id_from_pubkey(std::span<const std::uint8_t> pubkey) {
  // PublicKey protobuf {Type: Ed25519, Data: key} wrapped in an identity
  // multihash.
  Bytes mh{0x00, static_cast<std::uint8_t>(4 + pubkey.size()), 0x08, 0x01,
           0x12, static_cast<std::uint8_t>(pubkey.size())};
  mh.insert(mh.end(), pubkey.begin(), pubkey.end());
  return to_base58(mh);
}

std::pair<Keypair, NodeRecord> generate_identity(const Seed &seed,
                                                 const IpAddress &ip,
                                                 std::uint16_t tcp_port,
                                                 std::uint16_t udp_port,
                                                 Bytes network_id) {
  if (tcp_port == 0 || udp_port == 0) {
    throw std::invalid_argument("ports must be nonzero");
  }
  ensure_crypto();
  Keypair kp;
  crypto_sign_seed_keypair(kp.pub.data(), kp.secret.data(), seed.data());

  NodeRecord record;
  record.pubkey.assign(kp.pub.begin(), kp.pub.end());
  record.node_id = node_id_from_pubkey(record.pubkey);
  record.seq = 1;
  record.ip = ip;
  record.tcp_port = tcp_port;
  record.udp_port = udp_port;
  record.network_id = std::move(network_id);
  sign_in_place(kp, record);
  return {kp, std::move(record)};
}

Bytes signing_preimage(const NodeRecord &record) {
  Bytes out;
  out.reserve(128 + record.pubkey.size() + record.network_id.size());
  put_field(out, record.node_id);
  put_field(out, record.pubkey);
  put_field(out, big_endian(record.seq));
  put_field(out, record.ip.bytes());
  put_field(out, big_endian(record.tcp_port));
  put_field(out, big_endian(record.udp_port));
  put_field(out, record.network_id);
  return out;
}

Bytes encode_record(const NodeRecord &record) {
  Bytes out = signing_preimage(record);
  put_field(out, record.signature);
  return out;
}

std::optional<NodeRecord> decode_record(std::span<const std::uint8_t> data) {
  FieldReader reader(data);
  auto node_id = reader.next();
  auto pubkey = reader.next();
  auto seq = reader.next();
  auto ip = reader.next();
  auto tcp = reader.next();
  auto udp = reader.next();
  auto net = reader.next();
  auto sig = reader.next();
  if (!sig || !reader.done() || node_id->size() != 32) {
    return std::nullopt;
  }
  auto seq_v = read_big_endian<std::uint64_t>(*seq);
  auto tcp_v = read_big_endian<std::uint16_t>(*tcp);
  auto udp_v = read_big_endian<std::uint16_t>(*udp);
  auto ip_v = IpAddress::from_bytes(*ip);
  if (!seq_v || !tcp_v || !udp_v || !ip_v) {
    return std::nullopt;
  }
  NodeRecord r;
  std::copy(node_id->begin(), node_id->end(), r.node_id.begin());
  r.pubkey.assign(pubkey->begin(), pubkey->end());
  r.seq = *seq_v;
  r.ip = *ip_v;
  r.tcp_port = *tcp_v;
  r.udp_port = *udp_v;
  r.network_id.assign(net->begin(), net->end());
  r.signature.assign(sig->begin(), sig->end());
  return r;
}

bool verify_record(const NodeRecord &record) {
  if (record.pubkey.size() != crypto_sign_PUBLICKEYBYTES
      || record.signature.size() != crypto_sign_BYTES || record.seq < 1) {
    return false;
  }
  if (node_id_from_pubkey(record.pubkey) != record.node_id) {
    return false;
  }
  ensure_crypto();
  auto preimage = signing_preimage(record);
  return crypto_sign_verify_detached(record.signature.data(), preimage.data(),
                                     preimage.size(), record.pubkey.data())
         == 0;
}

NodeRecord bump_record(const Keypair &keypair, const NodeRecord &record,
                       const RecordChanges &changes) {
  if (!std::equal(keypair.pub.begin(), keypair.pub.end(),
                  record.pubkey.begin(), record.pubkey.end())) {
    throw KeyMismatch();
  }
  NodeRecord next = record;
  next.seq = record.seq + 1;
  if (changes.ip) next.ip = *changes.ip;
  if (changes.tcp_port) next.tcp_port = *changes.tcp_port;
  if (changes.udp_port) next.udp_port = *changes.udp_port;
  if (changes.network_id) next.network_id = *changes.network_id;
  sign_in_place(keypair, next);
  return next;
}

std::string to_text(const NodeRecord &record) {
  std::string out = "nodeid:" + to_hex(record.node_id);
  out += "/seq:" + std::to_string(record.seq) + "/";
  if (record.ip.is_v4()) {
    out += record.ip.to_string();
  } else {
    out += "[" + record.ip.to_string() + "]";
  }
  out += ":" + std::to_string(record.tcp_port) + ":"
         + std::to_string(record.udp_port);
  if (is_plain_network_id(record.network_id)) {
    out += "/net:"
           + std::string(record.network_id.begin(), record.network_id.end());
  } else {
    out += "/net:hex:" + to_hex(record.network_id);
  }
  out += "/pubkey:" + to_base64(record.pubkey);
  out += "/sig:" + to_base64(record.signature);
  return out;
}

std::optional<NodeRecord> parse_text(std::string_view text) {
  // Base64 may contain '/', so the pubkey and sig segments are located by
  // their labels rather than by splitting.
  auto pk_pos = text.find("/pubkey:");
  auto sig_pos = text.find("/sig:");
  if (pk_pos == std::string_view::npos || sig_pos == std::string_view::npos
      || sig_pos < pk_pos) {
    return std::nullopt;
  }
  auto head = text.substr(0, pk_pos);
  auto pk_text = text.substr(pk_pos + 8, sig_pos - pk_pos - 8);
  auto sig_text = text.substr(sig_pos + 5);

  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    auto slash = head.find('/', start);
    parts.push_back(head.substr(start, slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  if (parts.size() != 4) {
    return std::nullopt;
  }
  auto id_hex = strip_prefix(parts[0], "nodeid:");
  auto seq_text = strip_prefix(parts[1], "seq:");
  auto net_text = strip_prefix(parts[3], "net:");
  if (!id_hex || !seq_text || !net_text) {
    return std::nullopt;
  }

  NodeRecord r;
  auto id = from_hex(*id_hex);
  auto seq = parse_u64(*seq_text);
  if (!id || id->size() != 32 || !seq) {
    return std::nullopt;
  }
  std::copy(id->begin(), id->end(), r.node_id.begin());
  r.seq = *seq;

  // Endpoint: <ip>:<tcp>:<udp> or [<ipv6>]:<tcp>:<udp>
  std::string_view ep = parts[2];
  auto last = ep.rfind(':');
  if (last == std::string_view::npos) return std::nullopt;
  auto mid = ep.rfind(':', last - 1);
  if (mid == std::string_view::npos || last == 0) return std::nullopt;
  auto ip_text = ep.substr(0, mid);
  if (ip_text.size() >= 2 && ip_text.front() == '[' && ip_text.back() == ']') {
    ip_text = ip_text.substr(1, ip_text.size() - 2);
  }
  auto ip = IpAddress::parse(ip_text);
  auto tcp = parse_port(ep.substr(mid + 1, last - mid - 1));
  auto udp = parse_port(ep.substr(last + 1));
  if (!ip || !tcp || !udp) {
    return std::nullopt;
  }
  r.ip = *ip;
  r.tcp_port = *tcp;
  r.udp_port = *udp;

  if (auto hex = strip_prefix(*net_text, "hex:")) {
    auto net = from_hex(*hex);
    if (!net) return std::nullopt;
    r.network_id = std::move(*net);
  } else {
    r.network_id = to_bytes(*net_text);
  }

  auto pk = from_base64(pk_text);
  auto sig = from_base64(sig_text);
  if (!pk || !sig) {
    return std::nullopt;
  }
  r.pubkey = std::move(*pk);
  r.signature = std::move(*sig);
  return r;
}

unsigned log_distance(const NodeId &a, const NodeId &b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = static_cast<std::uint8_t>(a[i] ^ b[i]);
    if (x != 0) {
      return static_cast<unsigned>((a.size() - i) * 8
                                   - static_cast<unsigned>(std::countl_zero(x)));
    }
  }
  return 0;
}

bool closer_to(const NodeId &target, const NodeId &a, const NodeId &b) {
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto da = static_cast<std::uint8_t>(a[i] ^ target[i]);
    auto db = static_cast<std::uint8_t>(b[i] ^ target[i]);
    if (da != db) {
      return da < db;
    }
  }
  return false;
}

}  // namespace gossipwatch::identity
