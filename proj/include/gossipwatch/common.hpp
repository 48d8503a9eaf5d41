// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gossipwatch {

using Bytes = std::vector<std::uint8_t>;
using Hash32 = std::array<std::uint8_t, 32>;

/// Milliseconds. Unix epoch on live transports, virtual epoch in the simulator.
using TimeMs = std::int64_t;

/// Root of every error this project throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_hex(std::span<const std::uint8_t> data);
std::optional<Bytes> from_hex(std::string_view hex);

std::string to_base64(std::span<const std::uint8_t> data);
std::optional<Bytes> from_base64(std::string_view text);

/// Bitcoin-alphabet base58, used for libp2p-style peer ids.
std::string to_base58(std::span<const std::uint8_t> data);

Hash32 sha256(std::span<const std::uint8_t> data);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

struct Hash32Hasher {
  std::size_t operator()(const Hash32 &h) const noexcept {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(v); ++i) {
      v = (v << 8) | h[i];
    }
    return v;
  }
};

/// Ensures libsodium is initialized; safe to call repeatedly.
void ensure_crypto();

}  // namespace gossipwatch
