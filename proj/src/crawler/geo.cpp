// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/crawler/geo.hpp"

#include <charconv>
#include <fstream>

namespace gossipwatch::crawler {

namespace {

std::optional<MappingGeoProvider::Entry> parse_network(std::string_view text) {
  MappingGeoProvider::Entry e;
  auto slash = text.find('/');
  auto ip = identity::IpAddress::parse(text.substr(0, slash));
  if (!ip) {
    return std::nullopt;
  }
  e.network = *ip;
  e.prefix_len = ip->is_v4() ? 32 : 128;
  if (slash != std::string_view::npos) {
    auto len_text = text.substr(slash + 1);
    unsigned len = 0;
    auto [p, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc{} || p != len_text.data() + len_text.size() || len > e.prefix_len) {
      return std::nullopt;
    }
    e.prefix_len = len;
  }
  return e;
}

bool matches(const MappingGeoProvider::Entry &e, const identity::IpAddress &ip) {
  if (e.network.is_v4() != ip.is_v4()) {
    return false;
  }
  auto a = e.network.bytes();
  auto b = ip.bytes();
  unsigned bits = e.prefix_len;
  for (std::size_t i = 0; bits > 0; ++i) {
    unsigned take = std::min(bits, 8u);
    auto mask = static_cast<std::uint8_t>(0xff << (8 - take));
    if ((a[i] & mask) != (b[i] & mask)) {
      return false;
    }
    bits -= take;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

MappingGeoProvider::MappingGeoProvider(std::vector<Entry> entries)
    : entries_(std::move(entries)) {}

std::shared_ptr<MappingGeoProvider> MappingGeoProvider::load(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ProviderUnavailable("geo mapping file not readable: " + path.string());
  }
  auto provider = std::make_shared<MappingGeoProvider>(std::vector<Entry>{});
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto c1 = v.find(',');
    auto c2 = c1 == std::string_view::npos ? c1 : v.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw ProviderUnavailable(path.string() + ":" + std::to_string(line_no)
                                + ": expected <ip>,<country>,<city>");
    }
    auto entry = parse_network(trim(v.substr(0, c1)));
    if (!entry) {
      throw ProviderUnavailable(path.string() + ":" + std::to_string(line_no)
                                + ": bad address");
    }
    entry->location = {std::string(trim(v.substr(c1 + 1, c2 - c1 - 1))),
                       std::string(trim(v.substr(c2 + 1)))};
    provider->entries_.push_back(std::move(*entry));
  }
  return provider;
}

void MappingGeoProvider::add(std::string_view ip_or_cidr, Location location) {
  auto entry = parse_network(ip_or_cidr);
  if (!entry) {
    throw Error("bad address: " + std::string(ip_or_cidr));
  }
  entry->location = std::move(location);
  entries_.push_back(std::move(*entry));
}

std::optional<Location> MappingGeoProvider::lookup(
    const identity::IpAddress &ip) const {
  const Entry *best = nullptr;
  for (const auto &e : entries_) {
    if (matches(e, ip) && (!best || e.prefix_len > best->prefix_len)) {
      best = &e;
    }
  }
  if (!best) {
    return std::nullopt;
  }
  return best->location;
}

Location locate_peer(const GeoProvider *provider, const identity::IpAddress &ip) {
  if (!provider || ip.is_private()) {
    return {};
  }
  return provider->lookup(ip).value_or(Location{});
}

}  // namespace gossipwatch::crawler
