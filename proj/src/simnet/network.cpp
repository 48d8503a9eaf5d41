// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gossipwatch/simnet/simnet.hpp"

namespace gossipwatch::simnet {

namespace {

constexpr TimeMs kPeerHeartbeatMs = 700;
constexpr TimeMs kPeerCacheMs = 120'000;
constexpr int kLegacyExtraEvents = 4;
constexpr std::size_t kMaxTopics = 32;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) { return n ? gen_() % n : 0; }

  /// Exponential inter-arrival in whole milliseconds, at least 1.
  TimeMs exponential_ms(double rate_per_ms) {
    double x = -std::log1p(-uniform()) / rate_per_ms;
    return std::max<TimeMs>(1, static_cast<TimeMs>(std::ceil(x)));
  }

  std::mt19937_64 &engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

identity::Seed peer_seed(std::uint64_t seed, std::size_t index) {
  Bytes buf = to_bytes("gossipwatch-sim-peer");
  for (int i = 7; i >= 0; --i) {
    buf.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  }
  for (int i = 3; i >= 0; --i) {
    buf.push_back(static_cast<std::uint8_t>(index >> (8 * i)));
  }
  return sha256(buf);
}

std::size_t pick_weighted(Rng &rng, const std::vector<double> &weights, double total) {
  double x = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (x < weights[i]) {
      return i;
    }
    x -= weights[i];
  }
  // Rounding left x just past the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) {
      return i;
    }
  }
  return 0;
}

}  // namespace

struct SimNetwork::State {
  struct Peer {
    PeerProfile profile;
    Bytes network_id;
    identity::NodeRecord record;
    std::string peer_id;
    std::vector<std::pair<std::uint32_t, TimeMs>> neighbours;
    std::map<unsigned, std::vector<std::uint32_t>> table;
    TimeMs hb_offset = 0;
    TimeMs offline_until = 0;
    crawler::SessionId session = 0;  // open session with the crawler, 0 if none
  };
  struct Session {
    std::uint32_t peer = 0;
    bool open = true;
    bool inbound = false;
    std::optional<TimeMs> established_at;
    std::uint32_t mesh = 0;  // topic bitmask; crawler grafted on these
    std::optional<std::size_t> truth;
  };
  struct Message {
    gossip::GossipMessage msg;
    std::uint32_t origin = 0;
    std::uint32_t topic = 0;
    TimeMs t_ms = 0;
  };
  struct FullCopy {
    crawler::SessionId session = 0;
    std::uint32_t peer = 0;
    std::uint32_t msg = 0;
    bool via_iwant = false;
  };
  struct IHaveBatch {
    crawler::SessionId session = 0;
    std::vector<std::uint32_t> msgs;
  };

  State(const Scenario &sc, EventLoop &l)
      : scenario(sc), loop(l), start(l.now()), topo_rng(sc.seed ^ 0x746f706f6c6f6779ULL),
        publish_rng(sc.seed ^ 0x7075626c69736821ULL), prune_rng(sc.seed ^ 0x7072756e65212121ULL) {}

  const Scenario scenario;
  EventLoop &loop;
  TimeMs start;
  TimeMs end = 0;
  Rng topo_rng;
  Rng publish_rng;
  Rng prune_rng;

  std::vector<Peer> peers;
  std::vector<std::uint32_t> rank;  // position of each peer in peer_id order
  std::vector<std::vector<TimeMs>> dist;
  std::vector<std::string> topics;
  std::map<identity::NodeId, std::uint32_t> by_node;

  std::vector<Message> msgs;
  std::unordered_map<gossip::MessageId, std::uint32_t, Hash32Hasher> msg_index;

  std::map<crawler::SessionId, Session> sessions;
  crawler::SessionId next_session = 1;
  crawler::HostEvents *host = nullptr;

  std::map<TimeMs, std::vector<FullCopy>> due;
  std::map<std::pair<std::uint32_t, TimeMs>, IHaveBatch> ihave;

  GroundTruth truth;

  // -- helpers ---------------------------------------------------------------

  TimeMs now() const { return loop.now(); }
  TimeMs delay(std::uint32_t p) const { return peers[p].profile.link_delay_ms; }

  bool established(const Session &s) const {
    return s.open && s.established_at && *s.established_at <= now();
  }

  Session *session(crawler::SessionId id) {
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : &it->second;
  }

  std::uint32_t topic_index(const std::string &t) const {
    auto it = std::find(topics.begin(), topics.end(), t);
    return static_cast<std::uint32_t>(it - topics.begin());
  }

  TimeMs next_heartbeat(std::uint32_t p, TimeMs t) const {
    const TimeMs base = start + peers[p].hb_offset;
    if (t < base) {
      return base;
    }
    return base + ((t - base) / kPeerHeartbeatMs + 1) * kPeerHeartbeatMs;
  }

  TimeMs arrival(std::uint32_t m, std::uint32_t p) const {
    return msgs[m].t_ms + dist[msgs[m].origin][p];
  }

  std::size_t overlay_degree(std::uint32_t p) const { return peers[p].neighbours.size(); }

  void build(const Scenario &sc);
  void build_overlay();
  void build_tables();
  void schedule_publishing();
  void schedule_pruning();

  void publish(std::uint32_t m);
  void arrive(std::uint32_t m, std::uint32_t p);
  void queue_full(TimeMs at, FullCopy copy);
  void flush_full(TimeMs at);
  void flush_ihave(std::uint32_t p, TimeMs at);
  void on_established(crawler::SessionId id);
  void peer_close(crawler::SessionId id, bool churn);
  void peer_redial(std::uint32_t p);
  void prune_tick(std::uint32_t p);
  void legacy_events(crawler::SessionId id, TimeMs from, metrics::EventKind kind);
};

void SimNetwork::State::build(const Scenario &sc) {
  std::set<std::string> extra_topics;
  for (const auto &g : sc.peers) {
    for (const auto &[t, r] : g.profile.publish_rate_per_min) {
      extra_topics.insert(t);
    }
  }
  topics = gossip::default_topics();
  for (const auto &t : extra_topics) {
    if (std::find(topics.begin(), topics.end(), t) == topics.end()) {
      topics.push_back(t);
    }
  }
  if (topics.size() > kMaxTopics) {
    throw ScenarioInvalid(fmt::format("at most {} topics are supported", kMaxTopics));
  }

  std::uint32_t index = 0;
  for (const auto &g : sc.peers) {
    for (std::size_t k = 0; k < g.count; ++k, ++index) {
      Peer p;
      p.profile = g.profile;
      p.network_id = to_bytes(g.profile.network_id.value_or(sc.network_id));
      auto ip = identity::IpAddress::v4(44, 0, static_cast<std::uint8_t>(index / 250),
                                        static_cast<std::uint8_t>(index % 250 + 1));
      auto [kp, rec] = identity::generate_identity(peer_seed(sc.seed, index), ip,
                                                   g.profile.tcp_port, g.profile.tcp_port,
                                                   p.network_id);
      p.record = rec;
      p.peer_id = identity::peer_id_from_pubkey(rec.pubkey);
      p.hb_offset = static_cast<TimeMs>(topo_rng.below(kPeerHeartbeatMs));
      by_node[rec.node_id] = index;
      peers.push_back(std::move(p));
    }
  }
  std::vector<std::uint32_t> order(peers.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return peers[a].peer_id < peers[b].peer_id; });
  rank.assign(peers.size(), 0);
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = r;
  }

  build_overlay();
  build_tables();

  for (const auto &p : peers) {
    truth.peers.push_back({to_hex(p.record.node_id), p.peer_id, p.record.ip.to_string(),
                           p.record.tcp_port, p.profile.user_agent,
                           to_string(p.profile.strategy), p.profile.link_delay_ms,
                           p.profile.accepts_inbound,
                           std::string(p.network_id.begin(), p.network_id.end())});
  }
  truth.seed = sc.seed;
  truth.start_ms = start;
}

void SimNetwork::State::build_overlay() {
  const auto n = static_cast<std::uint32_t>(peers.size());
  std::vector<std::set<std::uint32_t>> adj(n);
  auto link = [&](std::uint32_t a, std::uint32_t b) {
    if (a == b || adj[a].contains(b)) {
      return false;
    }
    adj[a].insert(b);
    adj[b].insert(a);
    return true;
  };
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    perm[i] = i;
  }
  std::shuffle(perm.begin(), perm.end(), topo_rng.engine());
  for (std::uint32_t k = 1; k < n; ++k) {
    link(perm[k], perm[topo_rng.below(k)]);
  }
  const auto target = scenario.overlay_degree;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::size_t attempt = 0; adj[i].size() < target && attempt < 4 * n; ++attempt) {
      auto j = static_cast<std::uint32_t>(topo_rng.below(n));
      if (adj[j].size() < target) {
        link(i, j);
      }
    }
  }
  for (std::uint32_t a = 0; a < n; ++a) {
    for (auto b : adj[a]) {
      if (a < b) {
        TimeMs d = std::max<TimeMs>(1, (delay(a) + delay(b)) / 2);
        if (scenario.link_delay_jitter_ms > 0) {
          d += static_cast<TimeMs>(
              topo_rng.below(static_cast<std::uint64_t>(scenario.link_delay_jitter_ms) + 1));
        }
        peers[a].neighbours.emplace_back(b, d);
        peers[b].neighbours.emplace_back(a, d);
        truth.links.push_back({a, b, d});
      }
    }
  }
  // All-pairs shortest paths over the overlay.
  constexpr TimeMs kInf = std::numeric_limits<TimeMs>::max() / 4;
  dist.assign(n, std::vector<TimeMs>(n, kInf));
  using Item = std::pair<TimeMs, std::uint32_t>;
  for (std::uint32_t s = 0; s < n; ++s) {
    auto &d = dist[s];
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d[s] = 0;
    pq.emplace(0, s);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du != d[u]) {
        continue;
      }
      for (auto [v, w] : peers[u].neighbours) {
        if (du + w < d[v]) {
          d[v] = du + w;
          pq.emplace(d[v], v);
        }
      }
    }
  }
}

void SimNetwork::State::build_tables() {
  const auto n = static_cast<std::uint32_t>(peers.size());
  auto insert = [&](std::uint32_t owner, std::uint32_t other) {
    if (owner == other) {
      return;
    }
    auto dd = identity::log_distance(peers[owner].record.node_id, peers[other].record.node_id);
    auto &bucket = peers[owner].table[dd];
    if (bucket.size() < discovery::kBucketSize
        && std::find(bucket.begin(), bucket.end(), other) == bucket.end()) {
      bucket.push_back(other);
    }
  };
  std::set<std::uint32_t> boots(scenario.bootnodes.begin(), scenario.bootnodes.end());
  for (std::uint32_t i = 0; i < n; ++i) {
    if (boots.contains(i)) {
      for (std::uint32_t j = 0; j < n; ++j) {
        insert(i, j);
      }
      continue;
    }
    // A peer's own lookups leave it knowing its XOR-nearest nodes.
    std::vector<std::uint32_t> near;
    for (std::uint32_t j = 0; j < n; ++j) {
      if (j != i) near.push_back(j);
    }
    const auto &self = peers[i].record.node_id;
    auto k = std::min(near.size(), discovery::kBucketSize);
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return identity::closer_to(self, peers[a].record.node_id,
                                                   peers[b].record.node_id);
                      });
    for (std::size_t j = 0; j < k; ++j) {
      insert(i, near[j]);
    }
    for (auto b : boots) {
      insert(i, static_cast<std::uint32_t>(b));
    }
    auto neighbours = peers[i].neighbours;
    std::sort(neighbours.begin(), neighbours.end());
    for (auto [j, w] : neighbours) {
      insert(i, j);
    }
    for (std::size_t k = 0; k < scenario.known_peers && n > 1; ++k) {
      insert(i, static_cast<std::uint32_t>(topo_rng.below(n)));
    }
  }
}

void SimNetwork::State::schedule_publishing() {
  struct Planned {
    TimeMs t;
    std::uint32_t topic;
    std::uint32_t origin;
  };
  std::vector<Planned> plan;
  for (std::uint32_t ti = 0; ti < topics.size(); ++ti) {
    const auto &topic = topics[ti];
    std::vector<double> weights;
    double total = 0;
    for (const auto &p : peers) {
      auto it = p.profile.publish_rate_per_min.find(topic);
      double w = it == p.profile.publish_rate_per_min.end() ? 0.0 : it->second;
      weights.push_back(w);
      total += w;
    }
    if (total <= 0) {
      continue;
    }
    if (topic == "BeaconBlock") {
      // One proposal per slot; the proposer is drawn by publish weight.
      for (TimeMs t = start + scenario.slot_interval_ms; t <= end;
           t += scenario.slot_interval_ms) {
        plan.push_back({t, ti, static_cast<std::uint32_t>(pick_weighted(publish_rng, weights, total))});
      }
    } else {
      const double rate_per_ms = total / 60'000.0;
      for (TimeMs t = start + publish_rng.exponential_ms(rate_per_ms); t <= end;
           t += publish_rng.exponential_ms(rate_per_ms)) {
        plan.push_back({t, ti, static_cast<std::uint32_t>(pick_weighted(publish_rng, weights, total))});
      }
    }
  }
  std::stable_sort(plan.begin(), plan.end(),
                   [](const Planned &a, const Planned &b) { return a.t < b.t; });
  msgs.reserve(plan.size());
  for (const auto &pl : plan) {
    auto m = static_cast<std::uint32_t>(msgs.size());
    auto payload = to_bytes(fmt::format("{}/{}/{}/{}", topics[pl.topic], m, pl.origin, pl.t));
    Message msg{gossip::GossipMessage::make(topics[pl.topic], std::move(payload)), pl.origin,
                pl.topic, pl.t};
    msg_index.emplace(msg.msg.id, m);
    truth.publishes.push_back({to_hex(msg.msg.id), pl.origin, topics[pl.topic], pl.t});
    msgs.push_back(std::move(msg));
    loop.post_at(pl.t, [this, m] { publish(m); });
  }
}

void SimNetwork::State::schedule_pruning() {
  for (std::uint32_t p = 0; p < peers.size(); ++p) {
    const auto &prof = peers[p].profile;
    if (prof.strategy != Strategy::Flexible) {
      continue;
    }
    TimeMs first = start + 1 + static_cast<TimeMs>(prune_rng.below(
                                   static_cast<std::uint64_t>(prof.prune_period_ms)));
    if (first <= end) {
      loop.post_at(first, [this, p] { prune_tick(p); });
    }
  }
}

void SimNetwork::State::publish(std::uint32_t m) {
  const auto &msg = msgs[m];
  for (std::uint32_t p = 0; p < peers.size(); ++p) {
    auto sid = peers[p].session;
    if (sid == 0) {
      continue;
    }
    loop.post_at(msg.t_ms + dist[msg.origin][p], [this, m, p] { arrive(m, p); });
  }
}

void SimNetwork::State::arrive(std::uint32_t m, std::uint32_t p) {
  auto sid = peers[p].session;
  auto *s = session(sid);
  if (!s || !established(*s)) {
    return;
  }
  if (s->mesh & (1u << msgs[m].topic)) {
    queue_full(now() + delay(p), FullCopy{sid, p, m, false});
    return;
  }
  const TimeMs hb = next_heartbeat(p, now());
  auto [it, fresh] = ihave.try_emplace({p, hb});
  if (fresh) {
    it->second.session = sid;
    loop.post_at(hb, [this, p, hb] { flush_ihave(p, hb); });
  }
  it->second.msgs.push_back(m);
}

void SimNetwork::State::flush_ihave(std::uint32_t p, TimeMs at) {
  auto node = ihave.extract({p, at});
  if (node.empty()) {
    return;
  }
  auto batch = std::move(node.mapped());
  auto *s = session(batch.session);
  if (!s || !established(*s)) {
    return;
  }
  std::map<std::uint32_t, std::vector<gossip::MessageId>> by_topic;
  for (auto m : batch.msgs) {
    by_topic[msgs[m].topic].push_back(msgs[m].msg.id);
  }
  const auto sid = batch.session;
  for (auto &[topic, ids] : by_topic) {
    loop.post_at(now() + delay(p), [this, sid, topic = topic, ids = std::move(ids)] {
      auto *x = session(sid);
      if (x && x->open && host) {
        host->on_ihave(sid, topics[topic], ids);
      }
    });
  }
}

void SimNetwork::State::queue_full(TimeMs at, FullCopy copy) {
  auto [it, fresh] = due.try_emplace(at);
  if (fresh) {
    loop.post_at(at, [this, at] { flush_full(at); });
  }
  it->second.push_back(copy);
}

void SimNetwork::State::flush_full(TimeMs at) {
  auto node = due.extract(at);
  if (node.empty()) {
    return;
  }
  auto batch = std::move(node.mapped());
  // Copies landing in the same millisecond are handed over in peer_id order.
  std::stable_sort(batch.begin(), batch.end(), [this](const FullCopy &a, const FullCopy &b) {
    return rank[a.peer] < rank[b.peer];
  });
  for (const auto &c : batch) {
    auto *s = session(c.session);
    if (!s || !s->open || !host) {
      continue;
    }
    truth.deliveries.push_back({c.msg, c.peer, at, c.via_iwant});
    host->on_message(c.session, msgs[c.msg].msg);
  }
}

void SimNetwork::State::legacy_events(crawler::SessionId id, TimeMs from,
                                      metrics::EventKind kind) {
  for (int k = 1; k <= kLegacyExtraEvents; ++k) {
    loop.post_at(from + k, [this, id, kind] {
      if (host) {
        host->on_stream_event(id, kind);
      }
    });
  }
}

void SimNetwork::State::on_established(crawler::SessionId id) {
  auto *s = session(id);
  if (!s || !s->open) {
    return;
  }
  const auto &prof = peers[s->peer].profile;
  if (prof.legacy_event_mode) {
    legacy_events(id, now(), metrics::EventKind::Connect);
  }
  if (prof.churn) {
    loop.post_at(now() + prof.churn->disconnect_after_ms, [this, id] { peer_close(id, true); });
  }
}

void SimNetwork::State::peer_close(crawler::SessionId id, bool churn) {
  auto *s = session(id);
  if (!s || !s->open) {
    return;
  }
  const auto p = s->peer;
  s->open = false;
  s->mesh = 0;
  if (s->truth) {
    truth.sessions[*s->truth].end_ms = now();
  }
  if (peers[p].session == id) {
    peers[p].session = 0;
  }
  const TimeMs notice = now() + delay(p);
  loop.post_at(notice, [this, id] {
    if (host) {
      host->on_disconnected(id);
    }
  });
  if (peers[p].profile.legacy_event_mode) {
    legacy_events(id, notice, metrics::EventKind::Disconnect);
  }
  if (churn) {
    const auto &c = *peers[p].profile.churn;
    peers[p].offline_until = now() + c.reconnect_after_ms;
    loop.post_at(peers[p].offline_until, [this, p] { peer_redial(p); });
  }
}

void SimNetwork::State::peer_redial(std::uint32_t p) {
  if (!host || peers[p].session != 0) {
    return;
  }
  const auto id = next_session++;
  sessions[id] = Session{p, true, true, std::nullopt, 0, std::nullopt};
  peers[p].session = id;
  loop.post_at(now() + delay(p), [this, p, id] {
    auto *s = session(id);
    if (s && s->open && host) {
      host->on_inbound(peers[p].record, id);
    }
  });
}

void SimNetwork::State::prune_tick(std::uint32_t p) {
  const auto &prof = peers[p].profile;
  auto *s = session(peers[p].session);
  if (s && established(*s)) {
    const auto total = overlay_degree(p) + prof.background_peers + 1;
    if (total > prof.max_peers) {
      const double excess = static_cast<double>(total - prof.max_peers);
      const double chance = excess / static_cast<double>(prof.background_peers + 1);
      if (prune_rng.uniform() < chance) {
        peer_close(peers[p].session, false);
      }
    }
  }
  if (now() + prof.prune_period_ms <= end) {
    loop.post_at(now() + prof.prune_period_ms, [this, p] { prune_tick(p); });
  }
}

// -- SimNetwork ---------------------------------------------------------------

SimNetwork::SimNetwork(const Scenario &scenario, EventLoop &loop)
    : s_(std::make_unique<State>(scenario, loop)) {
  scenario.validate();
  s_->build(scenario);
}

SimNetwork::~SimNetwork() = default;

std::size_t SimNetwork::peer_count() const { return s_->peers.size(); }

const identity::NodeRecord &SimNetwork::peer_record(std::size_t i) const {
  return s_->peers.at(i).record;
}

const std::string &SimNetwork::peer_id(std::size_t i) const { return s_->peers.at(i).peer_id; }

std::vector<identity::NodeRecord> SimNetwork::bootnode_records() const {
  std::vector<identity::NodeRecord> out;
  for (auto b : s_->scenario.bootnodes) {
    out.push_back(s_->peers.at(b).record);
  }
  return out;
}

std::shared_ptr<crawler::GeoProvider> SimNetwork::geo_provider() const {
  std::vector<crawler::MappingGeoProvider::Entry> entries;
  for (const auto &p : s_->peers) {
    entries.push_back({p.record.ip, 32, crawler::Location{p.profile.country, p.profile.city}});
  }
  return std::make_shared<crawler::MappingGeoProvider>(std::move(entries));
}

void SimNetwork::start(TimeMs end_ms) {
  s_->end = end_ms;
  s_->schedule_publishing();
  s_->schedule_pruning();
}

GroundTruth SimNetwork::truth(TimeMs end_ms) const {
  GroundTruth t = s_->truth;
  t.end_ms = end_ms;
  return t;
}

void SimNetwork::set_crawler(const identity::NodeRecord &record, const std::string &peer_id,
                             std::vector<std::string> topics) {
  s_->truth.crawler_node_id = to_hex(record.node_id);
  s_->truth.crawler_peer_id = peer_id;
  s_->truth.crawler_topics = std::move(topics);
}

std::optional<std::vector<discovery::Nodes>> SimNetwork::find_node(
    const identity::NodeRecord &to, discovery::FindNode request, TimeMs) {
  auto it = s_->by_node.find(to.node_id);
  if (it == s_->by_node.end()) {
    return std::nullopt;
  }
  const auto &peer = s_->peers[it->second];
  if (s_->now() < peer.offline_until) {
    return std::nullopt;
  }
  discovery::Nodes nodes;
  if (request.distance == 0) {
    nodes.records.push_back(peer.record);
  } else if (auto b = peer.table.find(request.distance); b != peer.table.end()) {
    for (auto j : b->second) {
      if (nodes.records.size() == discovery::kMaxNodesPerMessage) {
        break;
      }
      nodes.records.push_back(s_->peers[j].record);
    }
  }
  return std::vector<discovery::Nodes>{std::move(nodes)};
}

void SimNetwork::bind(const crawler::Endpoint &endpoint, crawler::HostEvents &events) {
  if (s_->host) {
    throw crawler::BindFailure("simulated transport already has a host bound");
  }
  for (const auto &p : s_->peers) {
    if (p.record.ip == endpoint.ip
        && (p.record.tcp_port == endpoint.tcp_port || p.record.udp_port == endpoint.udp_port)) {
      throw crawler::BindFailure(fmt::format("address {} port {}/{} already in use",
                                             endpoint.ip.to_string(), endpoint.tcp_port,
                                             endpoint.udp_port));
    }
  }
  s_->host = &events;
}

crawler::DialReply SimNetwork::dial(const identity::NodeRecord &remote, TimeMs timeout_ms) {
  auto &st = *s_;
  auto it = st.by_node.find(remote.node_id);
  if (it == st.by_node.end()) {
    return {crawler::DialOutcome::Timeout, 0, timeout_ms};
  }
  const auto p = it->second;
  auto &peer = st.peers[p];
  const TimeMs rtt = 2 * st.delay(p);
  auto decide = [&](const char *decision) {
    st.truth.dials.push_back({p, st.now(), decision});
  };
  if (st.now() < peer.offline_until) {
    decide("timeout");
    return {crawler::DialOutcome::Timeout, 0, timeout_ms};
  }
  const bool full = peer.profile.strategy == Strategy::Strict
                    && st.overlay_degree(p) + peer.profile.background_peers + 1
                           > peer.profile.max_peers;
  if (peer.session != 0 || !peer.profile.accepts_inbound || full) {
    decide("refused");
    return {crawler::DialOutcome::Refused, 0, rtt};
  }
  decide("accepted");
  const auto id = st.next_session++;
  st.sessions[id] = State::Session{p, true, false, std::nullopt, 0, std::nullopt};
  peer.session = id;
  return {crawler::DialOutcome::Connected, id, rtt};
}

crawler::StatusReply SimNetwork::exchange_status(crawler::SessionId id,
                                                 const crawler::StatusMessage &ours,
                                                 const std::string &, TimeMs timeout_ms) {
  auto &st = *s_;
  auto *s = st.session(id);
  if (!s || !s->open) {
    return {std::nullopt, "", timeout_ms};
  }
  const auto p = s->peer;
  const auto &peer = st.peers[p];
  const TimeMs rtt = 2 * st.delay(p);
  crawler::StatusMessage theirs = crawler::genesis_status(peer.network_id);
  theirs.head_slot = static_cast<std::uint64_t>((st.now() - st.start) / st.scenario.slot_interval_ms);
  theirs.finalized_epoch = theirs.head_slot / 32 > 2 ? theirs.head_slot / 32 - 2 : 0;
  if (theirs.network_id == ours.network_id) {
    const TimeMs at = st.now() + rtt;
    s->established_at = at;
    s->truth = st.truth.sessions.size();
    st.truth.sessions.push_back({p, at, std::nullopt, s->inbound});
    st.loop.post_at(at, [this, id] { s_->on_established(id); });
  }
  return {theirs, peer.profile.user_agent, rtt};
}

crawler::PingReply SimNetwork::ping(crawler::SessionId id, TimeMs timeout_ms) {
  auto *s = s_->session(id);
  if (!s || !s_->established(*s)) {
    return {std::nullopt, timeout_ms};
  }
  const TimeMs rtt = 2 * s_->delay(s->peer);
  return {rtt, rtt};
}

void SimNetwork::close(crawler::SessionId id) {
  auto &st = *s_;
  auto *s = st.session(id);
  if (!s || !s->open) {
    return;
  }
  s->open = false;
  s->mesh = 0;
  if (s->truth) {
    st.truth.sessions[*s->truth].end_ms = st.now();
  }
  if (st.peers[s->peer].session == id) {
    st.peers[s->peer].session = 0;
  }
}

void SimNetwork::send_control(crawler::SessionId id, const gossip::ControlAction &action) {
  auto &st = *s_;
  auto *s = st.session(id);
  if (!s || !s->open || action.kind == gossip::ControlAction::Kind::IHave) {
    return;
  }
  const auto topic = st.topic_index(action.topic);
  if (topic >= st.topics.size()) {
    return;
  }
  const bool graft = action.kind == gossip::ControlAction::Kind::Graft;
  st.loop.post_at(st.now() + st.delay(s->peer), [this, id, topic, graft] {
    auto *x = s_->session(id);
    if (!x || !s_->established(*x)) {
      return;
    }
    if (graft) {
      x->mesh |= 1u << topic;
    } else {
      x->mesh &= ~(1u << topic);
    }
  });
}

void SimNetwork::send_iwant(crawler::SessionId id, const std::vector<gossip::MessageId> &ids) {
  auto &st = *s_;
  auto *s = st.session(id);
  if (!s || !st.established(*s)) {
    return;
  }
  const auto p = s->peer;
  const TimeMs at_peer = st.now() + st.delay(p);
  for (const auto &mid : ids) {
    auto it = st.msg_index.find(mid);
    if (it == st.msg_index.end()) {
      continue;
    }
    const TimeMs a = st.arrival(it->second, p);
    if (a <= at_peer && at_peer - a <= kPeerCacheMs) {
      st.queue_full(at_peer + st.delay(p), State::FullCopy{id, p, it->second, true});
    }
  }
}

void SimNetwork::send_message(crawler::SessionId, const gossip::GossipMessage &) {
  // Every simulated peer already holds every message via the overlay flood.
}

}  // namespace gossipwatch::simnet
