// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "gossipwatch/common.hpp"

namespace gossipwatch::simnet {

/// Everything the simulator knows that the crawler has to infer. Written as
/// JSON next to the snapshot for offline checks.
struct GroundTruth {
  struct Peer {
    std::string node_id;  // hex
    std::string peer_id;
    std::string ip;
    std::uint16_t tcp_port = 0;
    std::string user_agent;
    std::string strategy;
    TimeMs link_delay_ms = 0;  // to and from the crawler
    bool accepts_inbound = true;
    std::string network_id;
  };
  struct Link {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    TimeMs delay_ms = 0;
  };
  struct Publish {
    std::string msg_id;  // hex
    std::uint32_t origin = 0;
    std::string topic;
    TimeMs t_ms = 0;
  };
  struct Session {
    std::uint32_t peer = 0;
    TimeMs start_ms = 0;
    std::optional<TimeMs> end_ms;  // nullopt: still open at the end
    bool inbound = false;
  };
  struct Dial {
    std::uint32_t peer = 0;
    TimeMs t_ms = 0;
    std::string decision;  // accepted | refused | timeout
  };
  /// One full copy of a message handed to the crawler.
  struct Delivery {
    std::uint32_t msg = 0;   // index into publishes
    std::uint32_t peer = 0;
    TimeMs t_ms = 0;
    bool via_iwant = false;
  };

  std::uint64_t seed = 0;
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  std::string crawler_node_id;
  std::string crawler_peer_id;
  std::vector<std::string> crawler_topics;
  std::vector<Peer> peers;
  std::vector<Link> links;
  std::vector<Publish> publishes;
  std::vector<Session> sessions;
  std::vector<Dial> dials;
  std::vector<Delivery> deliveries;

  /// Node ids of all simulated peers.
  std::vector<std::string> membership() const;
};

std::string serialize_truth(const GroundTruth &truth);
/// Throws Error on malformed input.
GroundTruth parse_truth(std::string_view text);

void write_truth(const GroundTruth &truth, const std::filesystem::path &path);
GroundTruth read_truth(const std::filesystem::path &path);

}  // namespace gossipwatch::simnet
