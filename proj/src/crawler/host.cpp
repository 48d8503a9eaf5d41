// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/crawler/host.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gossipwatch/crawler/client.hpp"

namespace gossipwatch::crawler {

namespace {

std::uint64_t derive_seed(const identity::Seed &seed, std::string_view label) {
  Bytes buf(seed.begin(), seed.end());
  buf.insert(buf.end(), label.begin(), label.end());
  auto h = sha256(buf);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v = (v << 8) | h[i];
  }
  return v;
}

std::string multiaddr_of(const identity::NodeRecord &r, const std::string &peer_id) {
  return fmt::format("/{}/{}/tcp/{}/p2p/{}", r.ip.is_v4() ? "ip4" : "ip6",
                     r.ip.to_string(), r.tcp_port, peer_id);
}

std::pair<identity::Keypair, identity::NodeRecord> identity_for(
    const HostConfig &config, const identity::Seed &seed) {
  auto ip = identity::IpAddress::parse(config.listen_ip);
  if (!ip) {
    throw BadConfig("listen_ip: not an IP address");
  }
  return identity::generate_identity(seed, *ip, config.tcp_port, config.udp_port,
                                     to_bytes(config.network_id));
}

}  // namespace

const char *to_string(HandshakeError error) {
  return error == HandshakeError::NetworkMismatch ? "NetworkMismatch"
                                                  : "HandshakeTimeout";
}

TimeMs BackoffPolicy::delay(unsigned failures) const {
  TimeMs d = base_ms;
  for (unsigned i = 1; i < failures && d < cap_ms; ++i) {
    d *= factor;
  }
  return std::min(d, cap_ms);
}

struct Host::PeerState {
  enum class Phase { Idle, Queued, Dialing, Handshaking, Connected, Backoff };

  identity::NodeId id{};
  identity::NodeRecord record;
  gossip::PeerId peer_id;
  Phase phase = Phase::Idle;
  unsigned failures = 0;
  SessionId session = 0;
  bool session_open = false;
  std::uint64_t generation = 0;
  std::optional<metrics::Latency> latency;
};

Host::Host(const HostConfig &config, const identity::Seed &seed,
           HostTransport &transport, Scheduler &scheduler,
           std::shared_ptr<const GeoProvider> geo, HostOptions options)
    : config_(config),
      options_(std::move(options)),
      transport_(transport),
      scheduler_(scheduler),
      geo_(std::move(geo)),
      keypair_(identity_for(config, seed).first),
      record_(identity_for(config, seed).second),
      peer_id_(identity::peer_id_from_pubkey(record_.pubkey)),
      peerstore_(record_.node_id),
      router_(peer_id_, options_.gossip, derive_seed(seed, "router")),
      metrics_(config.topics) {
  discovery_ = std::make_unique<discovery::DiscoveryService>(
      peerstore_, transport_, scheduler_, discovered_,
      discovery::DiscoveryService::Options{options_.discovery_interval_ms,
                                           options_.alpha,
                                           options_.discovery_timeout_ms,
                                           derive_seed(seed, "discovery")});
}

Host::~Host() {
  stop_.request_stop();
}

std::unique_ptr<Host> Host::init(const HostConfig &config, const identity::Seed &seed,
                                 HostTransport &transport, Scheduler &scheduler,
                                 std::shared_ptr<const GeoProvider> geo,
                                 HostOptions options) {
  config.validate();
  std::unique_ptr<Host> host(
      new Host(config, seed, transport, scheduler, std::move(geo), std::move(options)));
  transport.bind(Endpoint{host->record_.ip, config.tcp_port, config.udp_port}, *host);
  for (const auto &t : config.topics) {
    host->router_.subscribe(t);
  }
  auto admitted = discovery::bootstrap(host->peerstore_, config.bootnodes,
                                       scheduler.now());
  spdlog::info("host {} up, {} bootnode(s) admitted", host->peer_id_, admitted);
  host->start();
  return host;
}

void Host::start() {
  router_.set_delivery_hook([this](const gossip::DeliveryRecord &rec) {
    metrics_.increment_counter(rec.first_relayer, rec.topic);
  });
  discovered_.set_notify([this] {
    if (!pump_scheduled_) {
      pump_scheduled_ = true;
      scheduler_.post_after(0, [this] {
        pump_scheduled_ = false;
        for (const auto &id : discovered_.drain()) {
          enqueue(id);
        }
        pump();
      });
    }
  });
  discovery_->start(stop_.get_token());
  scheduler_.post_after(options_.gossip.heartbeat_ms, [this] { heartbeat_loop(); });
  if (!options_.output_dir.empty()) {
    scheduler_.post_after(config_.export_interval_s * 1000, [this] { export_loop(); });
  }
}

void Host::stop() {
  if (stop_.stop_requested()) {
    return;
  }
  stop_.request_stop();
  dial_queue_.clear();
  if (!options_.output_dir.empty()) {
    export_snapshot(options_.output_dir, scheduler_.now());
  }
}

StatusMessage Host::local_status() const {
  return genesis_status(record_.network_id);
}

std::size_t Host::connected_count() const {
  std::size_t n = 0;
  for (const auto &[id, p] : peers_) {
    n += p->phase == PeerState::Phase::Connected;
  }
  return n;
}

std::size_t Host::discovery_rounds() const {
  return discovery_->rounds();
}

Host::PeerState *Host::by_session(SessionId session) {
  auto it = sessions_.find(session);
  if (it == sessions_.end()) {
    return nullptr;
  }
  return peers_.at(it->second).get();
}

SessionId Host::session_of(const gossip::PeerId &peer) const {
  auto it = by_peer_id_.find(peer);
  if (it == by_peer_id_.end()) {
    return 0;
  }
  const auto &p = *peers_.at(it->second);
  return p.phase == PeerState::Phase::Connected && p.session_open ? p.session : 0;
}

Host::PeerState &Host::state_for(const identity::NodeRecord &record) {
  auto &slot = peers_[record.node_id];
  if (!slot) {
    slot = std::make_unique<PeerState>();
    slot->id = record.node_id;
    slot->peer_id = identity::peer_id_from_pubkey(record.pubkey);
    by_peer_id_[slot->peer_id] = record.node_id;
  }
  slot->record = record;
  return *slot;
}

void Host::enqueue(const identity::NodeId &id) {
  if (stopped()) {
    return;
  }
  auto entry = peerstore_.find(id);
  if (!entry) {
    return;
  }
  auto &p = state_for(entry->record);
  if (p.phase != PeerState::Phase::Idle) {
    return;
  }
  p.phase = PeerState::Phase::Queued;
  dial_queue_.push_back(id);
}

void Host::pump() {
  const auto limit = static_cast<std::size_t>(config_.max_outbound_dials_in_flight);
  while (!stopped() && in_flight_ < limit && !dial_queue_.empty()) {
    auto id = dial_queue_.front();
    dial_queue_.pop_front();
    auto &p = *peers_.at(id);
    if (p.phase != PeerState::Phase::Queued) {
      continue;
    }
    if (auto entry = peerstore_.find(id)) {
      p.record = entry->record;
    }
    p.phase = PeerState::Phase::Dialing;
    ++in_flight_;
    auto reply = transport_.dial(p.record, options_.dial_timeout_ms);
    scheduler_.post_after(std::max<TimeMs>(reply.elapsed_ms, 0),
                          [this, id, reply] { dial_done(id, reply); });
  }
}

void Host::dial_done(const identity::NodeId &id, DialReply reply) {
  auto &p = *peers_.at(id);
  if (p.phase != PeerState::Phase::Dialing) {
    // An inbound connection took over while the dial was in flight.
    if (reply.outcome == DialOutcome::Connected) {
      transport_.close(reply.session);
    }
    --in_flight_;
    pump();
    return;
  }
  if (reply.outcome != DialOutcome::Connected) {
    --in_flight_;
    dial_log_.push_back({to_hex(id), reply.outcome, scheduler_.now()});
    fail(p, reply.outcome);
    pump();
    return;
  }
  sessions_[reply.session] = id;
  p.session = reply.session;
  p.session_open = true;
  p.phase = PeerState::Phase::Handshaking;
  auto result = status_handshake(reply.session);
  auto session = reply.session;
  scheduler_.post_after(std::max<TimeMs>(result.elapsed_ms, 0),
                        [this, id, session, result] {
                          handshake_done(id, session, true, result);
                        });
}

HandshakeResult Host::status_handshake(SessionId session) {
  HandshakeResult result;
  auto reply = transport_.exchange_status(session, local_status(), config_.user_agent,
                                          options_.handshake_timeout_ms);
  result.elapsed_ms = reply.elapsed_ms;
  if (!reply.status) {
    result.error = HandshakeError::HandshakeTimeout;
    return result;
  }
  result.remote = *reply.status;
  result.user_agent = reply.user_agent;
  if (result.remote.network_id != record_.network_id) {
    result.error = HandshakeError::NetworkMismatch;
    transport_.close(session);
    if (auto *p = by_session(session); p && p->session == session) {
      p->session_open = false;
    }
  }
  return result;
}

void Host::handshake_done(const identity::NodeId &id, SessionId session,
                          bool outbound, HandshakeResult result) {
  if (outbound) {
    --in_flight_;
  }
  auto &p = *peers_.at(id);
  if (p.session != session || p.phase != PeerState::Phase::Handshaking) {
    pump();
    return;
  }
  if (!result.ok() || !p.session_open) {
    if (p.session_open) {
      transport_.close(session);
    }
    spdlog::debug("handshake with {} failed: {}", p.peer_id,
                  result.error ? to_string(*result.error) : "closed");
    if (outbound) {
      dial_log_.push_back({to_hex(id), DialOutcome::HandshakeFailed, scheduler_.now()});
    }
    fail(p, DialOutcome::HandshakeFailed);
  } else {
    if (outbound) {
      dial_log_.push_back({to_hex(id), DialOutcome::Connected, scheduler_.now()});
    }
    establish(p, result);
  }
  pump();
}

void Host::establish(PeerState &p, const HandshakeResult &result) {
  p.phase = PeerState::Phase::Connected;
  p.failures = 0;
  const auto now = scheduler_.now();

  metrics::PeerInfo info;
  info.peer_id = p.peer_id;
  info.node_id = to_hex(p.record.node_id);
  info.pubkey = to_hex(p.record.pubkey);
  info.multiaddr = multiaddr_of(p.record, p.peer_id);
  info.ip = p.record.ip.to_string();
  auto loc = locate_peer(geo_.get(), p.record.ip);
  info.country = loc.country;
  info.city = loc.city;
  auto [family, version] = classify_client(result.user_agent);
  info.client_family = family;
  info.client_version = version;
  info.user_agent = result.user_agent;
  if (p.latency) {
    info.latency = *p.latency;
  }
  metrics_.update_info(info);
  if (metrics_.record_event(p.peer_id, metrics::EventKind::Connect, now)
      == metrics::RecordStatus::ClockRegression) {
    spdlog::warn("clock regression recording connect for {}", p.peer_id);
  }
  router_.add_peer(p.peer_id, config_.topics);
  ping_loop(p.id, p.session);
}

void Host::fail(PeerState &p, DialOutcome outcome) {
  (void)outcome;
  p.session_open = false;
  p.phase = PeerState::Phase::Backoff;
  ++p.failures;
  schedule_retry(p.id, options_.backoff.delay(p.failures));
}

void Host::schedule_retry(const identity::NodeId &id, TimeMs delay) {
  auto &p = *peers_.at(id);
  const auto generation = ++p.generation;
  scheduler_.post_after(delay, [this, id, generation] {
    if (stopped()) {
      return;
    }
    auto &q = *peers_.at(id);
    if (q.generation != generation || q.phase != PeerState::Phase::Backoff) {
      return;
    }
    q.phase = PeerState::Phase::Idle;
    enqueue(id);
    pump();
  });
}

std::optional<metrics::Latency> Host::measure_latency(const gossip::PeerId &peer) {
  auto session = session_of(peer);
  if (session == 0) {
    return std::nullopt;
  }
  auto &p = *peers_.at(by_peer_id_.at(peer));
  auto reply = transport_.ping(session, options_.ping_timeout_ms);
  if (!reply.rtt_ms) {
    return std::nullopt;
  }
  const double sample = static_cast<double>(*reply.rtt_ms) * 1000.0;
  std::int64_t us;
  if (!p.latency) {
    us = std::llround(sample);
  } else {
    const double a = options_.latency_alpha;
    us = std::llround(a * sample + (1 - a) * static_cast<double>(p.latency->micros()));
  }
  p.latency = metrics::Latency::from_micros(us);
  metrics_.set_latency(peer, *p.latency);
  return p.latency;
}

void Host::ping_loop(const identity::NodeId &id, SessionId session) {
  if (stopped()) {
    return;
  }
  auto &p = *peers_.at(id);
  if (p.session != session || p.phase != PeerState::Phase::Connected) {
    return;
  }
  measure_latency(p.peer_id);
  scheduler_.post_after(options_.ping_interval_ms,
                        [this, id, session] { ping_loop(id, session); });
}

void Host::heartbeat_loop() {
  if (stopped()) {
    return;
  }
  for (const auto &action : router_.heartbeat(scheduler_.now())) {
    if (auto session = session_of(action.peer)) {
      transport_.send_control(session, action);
    }
  }
  scheduler_.post_after(options_.gossip.heartbeat_ms, [this] { heartbeat_loop(); });
}

void Host::export_loop() {
  if (stopped()) {
    return;
  }
  try {
    export_snapshot(options_.output_dir, scheduler_.now());
  } catch (const Error &e) {
    spdlog::error("periodic export failed: {}", e.what());
  }
  scheduler_.post_after(config_.export_interval_s * 1000, [this] { export_loop(); });
}

metrics::MetricsSnapshot Host::snapshot(TimeMs now) const {
  return metrics_.snapshot(now, to_hex(record_.node_id), config_.network_id);
}

std::filesystem::path Host::export_snapshot(const std::filesystem::path &dir,
                                            TimeMs now) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw metrics::IoFailure("cannot create " + dir.string() + ": " + ec.message());
  }
  auto snap_path = dir / fmt::format("snapshot-{}.json", now);
  metrics::write_snapshot(snapshot(now), snap_path);
  auto dump_path = dir / fmt::format("peerstore-{}.jsonl", now);
  std::ofstream out(dump_path, std::ios::trunc);
  if (!out) {
    throw metrics::IoFailure("cannot open " + dump_path.string());
  }
  discovery::write_dump(out, peerstore_.dump());
  auto log_path = dir / fmt::format("deliveries-{}.csv", now);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) {
    throw metrics::IoFailure("cannot open " + log_path.string());
  }
  gossip::write_delivery_log(log, router_.delivery_log());
  return snap_path;
}

void Host::on_inbound(const identity::NodeRecord &remote, SessionId session) {
  const auto now = scheduler_.now();
  if (stopped() || discovery::admit_record(peerstore_, remote, now)
                       == discovery::AdmitOutcome::RejectedInvalid) {
    transport_.close(session);
    return;
  }
  auto &p = state_for(remote);
  using Phase = PeerState::Phase;
  if ((p.phase == Phase::Handshaking || p.phase == Phase::Connected) && p.session_open) {
    transport_.close(session);
    return;
  }
  ++p.generation;  // cancels a pending retry
  sessions_[session] = p.id;
  p.session = session;
  p.session_open = true;
  p.phase = Phase::Handshaking;
  auto id = p.id;
  auto result = status_handshake(session);
  scheduler_.post_after(std::max<TimeMs>(result.elapsed_ms, 0),
                        [this, id, session, result] {
                          handshake_done(id, session, false, result);
                        });
}

void Host::on_disconnected(SessionId session) {
  auto *p = by_session(session);
  if (!p || p->session != session || !p->session_open) {
    return;
  }
  p->session_open = false;
  if (p->phase != PeerState::Phase::Connected) {
    return;  // the pending handshake continuation sees the closed session
  }
  metrics_.record_event(p->peer_id, metrics::EventKind::Disconnect, scheduler_.now());
  router_.remove_peer(p->peer_id);
  p->phase = PeerState::Phase::Backoff;
  p->failures = 0;
  if (!stopped()) {
    schedule_retry(p->id, options_.backoff.base_ms);
  }
}

void Host::on_message(SessionId session, const gossip::GossipMessage &msg) {
  auto *p = by_session(session);
  if (!p || !msg.id_matches()) {
    return;
  }
  if (router_.handle_full_message(p->peer_id, msg, scheduler_.now())
      != gossip::Delivery::DeliveredFirst) {
    return;
  }
  for (const auto &target : router_.forward_targets(msg.topic, p->peer_id)) {
    if (auto s = session_of(target)) {
      transport_.send_message(s, msg);
    }
  }
}

void Host::on_ihave(SessionId session, const std::string &topic,
                    const std::vector<gossip::MessageId> &ids) {
  auto *p = by_session(session);
  if (!p || p->session != session || p->phase != PeerState::Phase::Connected) {
    return;
  }
  auto wanted = router_.handle_ihave(p->peer_id, topic, ids, scheduler_.now());
  if (!wanted.empty()) {
    transport_.send_iwant(session, wanted);
  }
}

void Host::on_graft(SessionId session, const std::string &topic) {
  auto *p = by_session(session);
  if (!p || p->session != session || p->phase != PeerState::Phase::Connected) {
    return;
  }
  if (!router_.handle_graft(p->peer_id, topic)) {
    transport_.send_control(
        session, gossip::ControlAction{gossip::ControlAction::Kind::Prune, p->peer_id,
                                       topic, {}});
  }
}

void Host::on_prune(SessionId session, const std::string &topic) {
  if (auto *p = by_session(session); p && p->session == session) {
    router_.handle_prune(p->peer_id, topic);
  }
}

void Host::on_stream_event(SessionId session, metrics::EventKind kind) {
  // Recorded raw, like any other connection event; batches of these are
  // collapsed by the analyzer's dedup window.
  auto *p = by_session(session);
  if (!p) {
    return;
  }
  ++stream_events_;
  metrics_.record_event(p->peer_id, kind, scheduler_.now());
}

}  // namespace gossipwatch::crawler
