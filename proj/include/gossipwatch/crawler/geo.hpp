// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "gossipwatch/identity/node_record.hpp"

namespace gossipwatch::crawler {

struct Location {
  std::string country = "Unknown";
  std::string city = "Unknown";

  friend bool operator==(const Location &, const Location &) = default;
};

class ProviderUnavailable : public Error {
 public:
  using Error::Error;
};

class GeoProvider {
 public:
  virtual ~GeoProvider() = default;
  virtual std::optional<Location> lookup(const identity::IpAddress &ip) const = 0;
};

/// Offline ip -> (country, city) table. Entries are exact addresses or IPv4
/// CIDR blocks; the longest matching prefix wins.
///
/// File format, one entry per line, '#' starts a comment:
///   <ip-or-cidr>,<country>,<city>
/// The city is the remainder of the line and may itself contain commas.
class MappingGeoProvider final : public GeoProvider {
 public:
  struct Entry {
    identity::IpAddress network;
    unsigned prefix_len = 32;
    Location location;
  };

  explicit MappingGeoProvider(std::vector<Entry> entries);

  /// Throws ProviderUnavailable when the file is missing or malformed.
  static std::shared_ptr<MappingGeoProvider> load(const std::filesystem::path &path);

  void add(std::string_view ip_or_cidr, Location location);

  std::optional<Location> lookup(const identity::IpAddress &ip) const override;

 private:
  std::vector<Entry> entries_;
};

/// Private and unresolvable addresses map to ("Unknown", "Unknown").
Location locate_peer(const GeoProvider *provider, const identity::IpAddress &ip);

}  // namespace gossipwatch::crawler
