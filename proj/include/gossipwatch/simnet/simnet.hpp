// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "gossipwatch/crawler/host.hpp"
#include "gossipwatch/discovery/peerstore.hpp"
#include "gossipwatch/simnet/event_loop.hpp"
#include "gossipwatch/simnet/scenario.hpp"
#include "gossipwatch/simnet/truth.hpp"

namespace gossipwatch::simnet {

/// Virtual-time network of simulated beacon nodes, seen from one crawler.
///
/// Peers form a random connected overlay. A published message floods the
/// overlay along shortest delay paths. Each peer with an established crawler
/// session then either forwards the message to the crawler (when the crawler
/// grafted it for that topic) or advertises it in an IHAVE at its next
/// heartbeat and serves the crawler's IWANT.
class SimNetwork final : public crawler::HostTransport {
 public:
  SimNetwork(const Scenario &scenario, EventLoop &loop);
  ~SimNetwork() override;

  std::size_t peer_count() const;
  const identity::NodeRecord &peer_record(std::size_t i) const;
  const std::string &peer_id(std::size_t i) const;
  std::vector<identity::NodeRecord> bootnode_records() const;
  /// Exact-address geo entries for every peer.
  std::shared_ptr<crawler::GeoProvider> geo_provider() const;

  /// Schedules publishing, pruning and churn up to `end_ms`.
  void start(TimeMs end_ms);

  /// Closes the books at `end_ms`. Sessions still open stay open-ended.
  GroundTruth truth(TimeMs end_ms) const;

  /// Records the crawler identity and subscribed topics in the truth.
  void set_crawler(const identity::NodeRecord &record, const std::string &peer_id,
                   std::vector<std::string> topics);

  // DiscoveryTransport
  std::optional<std::vector<discovery::Nodes>> find_node(const identity::NodeRecord &to,
                                                         discovery::FindNode request,
                                                         TimeMs timeout_ms) override;
  // HostTransport
  void bind(const crawler::Endpoint &endpoint, crawler::HostEvents &events) override;
  crawler::DialReply dial(const identity::NodeRecord &remote, TimeMs timeout_ms) override;
  crawler::StatusReply exchange_status(crawler::SessionId session,
                                       const crawler::StatusMessage &ours,
                                       const std::string &our_user_agent,
                                       TimeMs timeout_ms) override;
  crawler::PingReply ping(crawler::SessionId session, TimeMs timeout_ms) override;
  void close(crawler::SessionId session) override;
  void send_control(crawler::SessionId session, const gossip::ControlAction &action) override;
  void send_iwant(crawler::SessionId session, const std::vector<gossip::MessageId> &ids) override;
  void send_message(crawler::SessionId session, const gossip::GossipMessage &msg) override;

 private:
  struct State;
  std::unique_ptr<State> s_;
};

struct RunOptions {
  /// Replaces the scenario's crawler section when set.
  std::optional<crawler::HostConfig> crawler_config;
  std::optional<TimeMs> duration_ms;
  std::filesystem::path output_dir;  // periodic and final exports; empty: none
  std::function<bool()> interrupted;
};

struct RunResult {
  metrics::MetricsSnapshot snapshot;
  GroundTruth truth;
  std::vector<discovery::DumpEntry> peerstore;
  std::vector<crawler::DialAttempt> dials;
  std::size_t discovery_rounds = 0;
  bool interrupted = false;
};

/// Throws ScenarioInvalid, crawler::BadConfig or crawler::BindFailure.
RunResult run_scenario(const Scenario &scenario, const RunOptions &options = {});

crawler::HostConfig crawler_config_for(const Scenario &scenario);

struct Mismatch {
  std::string kind;  // counter | timing | session | unknown_peer
  std::string peer_id;
  std::string topic;
  std::string detail;
};

/// Replays the publish log: each message is credited to the earliest full
/// copy that reached the crawler (ties by peer_id) and the totals are diffed
/// against the snapshot counters. Also checks that every eagerly forwarded
/// copy arrived exactly at publish time + overlay shortest path + crawler link.
std::vector<Mismatch> verify_counters(const metrics::MetricsSnapshot &snapshot,
                                      const GroundTruth &truth);

/// Compares analyzer-derived sessions against the simulator's schedule.
std::vector<Mismatch> verify_durations(const metrics::MetricsSnapshot &snapshot,
                                       const GroundTruth &truth,
                                       TimeMs tolerance_ms = 500);

std::string to_string(const Mismatch &m);

}  // namespace gossipwatch::simnet
