// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/common.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>

#include "gossipwatch/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace gossipwatch {

void ensure_crypto() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) {
    throw Error("libsodium initialization failed");
  }
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    return std::nullopt;
  }
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      return std::nullopt;
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::string to_base64(std::span<const std::uint8_t> data) {
  ensure_crypto();
  const auto variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(data.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::optional<Bytes> from_base64(std::string_view text) {
  ensure_crypto();
  Bytes out(text.size());
  std::size_t len = 0;
  const char *end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0
      || end != text.data() + text.size()) {
    return std::nullopt;
  }
  out.resize(len);
  return out;
}

std::string to_base58(std::span<const std::uint8_t> data) {
  static constexpr char kAlphabet[] =
      "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
  std::size_t zeros = 0;
  while (zeros < data.size() && data[zeros] == 0) {
    ++zeros;
  }
  // Big-number division by 58, base-256 digits in place.
  std::vector<std::uint8_t> num(data.begin() + zeros, data.end());
  std::string digits;
  while (!num.empty()) {
    std::uint32_t rem = 0;
    std::vector<std::uint8_t> next;
    next.reserve(num.size());
    for (auto byte : num) {
      std::uint32_t acc = (rem << 8) | byte;
      auto q = static_cast<std::uint8_t>(acc / 58);
      rem = acc % 58;
      if (!next.empty() || q != 0) {
        next.push_back(q);
      }
    }
    digits.push_back(kAlphabet[rem]);
    num = std::move(next);
  }
  digits.append(zeros, '1');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Hash32 sha256(std::span<const std::uint8_t> data) {
  ensure_crypto();
  Hash32 out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

void init_logging_from_env() {
  static const bool installed = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("gossipwatch"));
    return true;
  }();
  (void)installed;
  const char *level = std::getenv("GOSSIPWATCH_LOG");
  std::string_view v = level ? level : "";
  if (v == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (v == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::err);
  }
}

}  // namespace gossipwatch
