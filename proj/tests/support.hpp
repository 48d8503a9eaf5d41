// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gossipwatch/identity/node_record.hpp"

namespace gwtest {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("gw-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline fs::path fixture(const std::string &name) {
  return fs::path(GW_FIXTURES_DIR) / name;
}

inline gossipwatch::identity::Seed seed_of(std::uint64_t n) {
  gossipwatch::identity::Seed s{};
  for (int i = 0; i < 8; ++i) {
    s[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(n >> (8 * i));
  }
  s[31] = 0x5a;
  return s;
}

inline std::pair<gossipwatch::identity::Keypair, gossipwatch::identity::NodeRecord>
make_identity(std::uint64_t n, std::string net = "mainnet") {
  using namespace gossipwatch::identity;
  auto ip = IpAddress::v4(203, 0, 113, static_cast<std::uint8_t>(n % 250 + 1));
  return generate_identity(seed_of(n), ip, 9000, 9000, gossipwatch::to_bytes(net));
}

/// Splits one CSV line, honouring double-quoted fields.
inline std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(const fs::path &path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    rows.push_back(split_csv(line));
  }
  return rows;
}

}  // namespace gwtest
