// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "gossipwatch/metrics/metrics.hpp"

namespace gossipwatch::metrics {

const char *to_string(EventKind kind) {
  return kind == EventKind::Connect ? "Connect" : "Disconnect";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  if (text == "Connect") return EventKind::Connect;
  if (text == "Disconnect") return EventKind::Disconnect;
  return std::nullopt;
}

const char *to_string(ClientFamily family) {
  switch (family) {
    case ClientFamily::Lighthouse: return "Lighthouse";
    case ClientFamily::Teku: return "Teku";
    case ClientFamily::Nimbus: return "Nimbus";
    case ClientFamily::Prysm: return "Prysm";
    case ClientFamily::Lodestar: return "Lodestar";
    case ClientFamily::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<ClientFamily> parse_family(std::string_view text) {
  for (auto f : kAllFamilies) {
    if (text == to_string(f)) {
      return f;
    }
  }
  return std::nullopt;
}

Latency Latency::from_seconds(double s) {
  if (!(s > 0)) {
    return Latency(0);
  }
  return Latency(std::llround(s * 1e6));
}

std::optional<Latency> Latency::parse(std::string_view text) {
  auto dot = text.find('.');
  auto whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? "" : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 6
      || (dot != std::string_view::npos && frac.empty())) {
    return std::nullopt;
  }
  auto digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  if (!digits(whole) || !digits(frac)) {
    return std::nullopt;
  }
  std::int64_t w = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (ec != std::errc{} || w > 9'000'000'000'000) {
    return std::nullopt;
  }
  std::int64_t f = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    f = f * 10 + (i < frac.size() ? frac[i] - '0' : 0);
  }
  return Latency(w * 1'000'000 + f);
}

std::string Latency::to_string() const {
  return fmt::format("{}.{:06d}", micros_ / 1'000'000, micros_ % 1'000'000);
}

SchemaViolation::SchemaViolation(std::string field, std::size_t line,
                                 const std::string &what)
    : Error(fmt::format("schema violation at {}{}: {}",
                        field.empty() ? "<document>" : field,
                        line ? fmt::format(" (line {})", line) : "", what)),
      field_(std::move(field)),
      line_(line) {}

MetricsStore::MetricsStore(std::vector<std::string> topics)
    : topics_(std::move(topics)) {}

PeerMetrics &MetricsStore::slot(const PeerId &peer) {
  auto [it, inserted] = peers_.try_emplace(peer);
  if (inserted) {
    it->second.info.peer_id = peer;
    for (const auto &t : topics_) {
      it->second.counters[t] = 0;
    }
  }
  return it->second;
}

RecordStatus MetricsStore::record_event(const PeerId &peer, EventKind kind,
                                        TimeMs t_ms) {
  std::lock_guard lock(mu_);
  auto &events = slot(peer).events;
  auto status = RecordStatus::Ok;
  if (!events.empty() && events.back().t_ms - t_ms > 1000) {
    status = RecordStatus::ClockRegression;
    ++flagged_;
  }
  auto pos = std::upper_bound(
      events.begin(), events.end(), t_ms,
      [](TimeMs t, const ConnectionEvent &e) { return t < e.t_ms; });
  events.insert(pos, ConnectionEvent{kind, t_ms});
  return status;
}

std::uint64_t MetricsStore::increment_counter(const PeerId &peer,
                                              std::string_view topic) {
  if (std::find(topics_.begin(), topics_.end(), topic) == topics_.end()) {
    throw UnknownTopic(std::string(topic));
  }
  std::lock_guard lock(mu_);
  return ++slot(peer).counters[std::string(topic)];
}

void MetricsStore::update_info(const PeerInfo &info) {
  std::lock_guard lock(mu_);
  slot(info.peer_id).info = info;
}

void MetricsStore::set_latency(const PeerId &peer, Latency latency) {
  std::lock_guard lock(mu_);
  slot(peer).info.latency = latency;
}

bool MetricsStore::contains(const PeerId &peer) const {
  std::lock_guard lock(mu_);
  return peers_.contains(peer);
}

std::optional<PeerMetrics> MetricsStore::peer(const PeerId &peer) const {
  std::lock_guard lock(mu_);
  auto it = peers_.find(peer);
  if (it == peers_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t MetricsStore::flagged_events() const {
  std::lock_guard lock(mu_);
  return flagged_;
}

MetricsSnapshot MetricsStore::snapshot(TimeMs captured_at_ms,
                                       std::string host_node_id,
                                       std::string network_id) const {
  MetricsSnapshot snap;
  snap.captured_at_ms = captured_at_ms;
  snap.host_node_id = std::move(host_node_id);
  snap.network_id = std::move(network_id);
  std::lock_guard lock(mu_);
  snap.peers.reserve(peers_.size());
  for (const auto &[id, m] : peers_) {
    snap.peers.push_back(m);
  }
  return snap;
}

}  // namespace gossipwatch::metrics
