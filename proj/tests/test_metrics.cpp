// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "doctest.h"
#include "gossipwatch/gossip/router.hpp"
#include "gossipwatch/metrics/metrics.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace gossipwatch;
using namespace gossipwatch::metrics;

namespace {

MetricsStore default_store() {
  return MetricsStore(gossip::default_topics());
}

MetricsSnapshot random_snapshot(std::mt19937_64 &rng) {
  MetricsSnapshot s;
  s.captured_at_ms = 1'600'000'000'000 + static_cast<TimeMs>(rng() % 1'000'000);
  s.host_node_id = to_hex(sha256(as_bytes(std::to_string(rng()))));
  s.network_id = rng() % 2 ? "mainnet" : "pyrmont";
  const auto n = rng() % 6;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    PeerMetrics p;
    p.info.peer_id = "12D3KooW" + std::to_string(rng() % 100000);
    if (!ids.insert(p.info.peer_id).second) continue;
    p.info.node_id = to_hex(sha256(as_bytes(p.info.peer_id)));
    p.info.pubkey = p.info.node_id;
    p.info.ip = "198.51.100." + std::to_string(rng() % 250);
    p.info.multiaddr = "/ip4/" + p.info.ip + "/tcp/9000/p2p/" + p.info.peer_id;
    p.info.country = rng() % 2 ? "Germany" : "United States";
    p.info.city = "New Jersey, North Bergen";
    p.info.client_family = kAllFamilies[rng() % kAllFamilies.size()];
    p.info.client_version = "v" + std::to_string(rng() % 10);
    p.info.user_agent = rng() % 3 ? "Lighthouse/v1.0.1-5a3b94cb/x86_64-linux" : "";
    p.info.latency = Latency::from_micros(static_cast<std::int64_t>(rng() % 100'000'000));
    TimeMs t = 1'600'000'000'000;
    for (std::size_t k = rng() % 8; k > 0; --k) {
      t += static_cast<TimeMs>(rng() % 5000);
      p.events.push_back({rng() % 2 ? EventKind::Connect : EventKind::Disconnect, t});
    }
    for (const auto &topic : gossip::default_topics()) {
      p.counters[topic] = rng() % 3 ? rng() % 100000 : 0;
    }
    s.peers.push_back(std::move(p));
  }
  std::sort(s.peers.begin(), s.peers.end(),
            [](const auto &a, const auto &b) { return a.info.peer_id < b.info.peer_id; });
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("events stay ordered") {
    auto store = default_store();
    CHECK(store.record_event("A", EventKind::Connect, 100) == RecordStatus::Ok);
    CHECK(store.record_event("A", EventKind::Disconnect, 200) == RecordStatus::Ok);
    auto p = *store.peer("A");
    REQUIRE(p.events.size() == 2);
    CHECK(p.events[0] == ConnectionEvent{EventKind::Connect, 100});
    CHECK(p.events[1] == ConnectionEvent{EventKind::Disconnect, 200});
  }

  TEST_CASE("unseen peer gets a zero-filled stub") {
    auto store = default_store();
    store.record_event("B", EventKind::Connect, 5);
    auto p = *store.peer("B");
    CHECK(p.info.client_family == ClientFamily::Unknown);
    CHECK(p.counters.size() == 5);
    for (const auto &[t, c] : p.counters) CHECK(c == 0);
  }

  TEST_CASE("regression beyond a second is stored and flagged") {
    auto store = default_store();
    store.record_event("C", EventKind::Connect, 10'000);
    CHECK(store.record_event("C", EventKind::Disconnect, 9'500) == RecordStatus::Ok);
    CHECK(store.record_event("C", EventKind::Disconnect, 5'000) == RecordStatus::ClockRegression);
    CHECK(store.flagged_events() == 1);
    auto p = *store.peer("C");
    CHECK(p.events.size() == 3);
    CHECK(std::is_sorted(p.events.begin(), p.events.end(),
                         [](const auto &a, const auto &b) { return a.t_ms < b.t_ms; }));
  }

  TEST_CASE("counters") {
    auto store = default_store();
    CHECK(store.increment_counter("A", "BeaconBlock") == 1);
    for (int i = 0; i < 999; ++i) store.increment_counter("A", "BeaconBlock");
    CHECK(store.peer("A")->counters.at("BeaconBlock") == 1000);
    CHECK_THROWS_AS(store.increment_counter("A", "Bogus"), UnknownTopic);
  }

  TEST_CASE("update_info keeps events and counters") {
    auto store = default_store();
    store.record_event("A", EventKind::Connect, 1);
    store.increment_counter("A", "VoluntaryExit");
    PeerInfo info;
    info.peer_id = "A";
    info.client_family = ClientFamily::Prysm;
    store.update_info(info);
    store.set_latency("A", Latency::from_micros(1500));
    auto p = *store.peer("A");
    CHECK(p.info.client_family == ClientFamily::Prysm);
    CHECK(p.info.latency.to_string() == "0.001500");
    CHECK(p.events.size() == 1);
    CHECK(p.counters.at("VoluntaryExit") == 1);
  }

  TEST_CASE("latency text form") {
    CHECK(Latency::parse("31.509326")->micros() == 31'509'326);
    CHECK(Latency::parse("31.509326")->to_string() == "31.509326");
    CHECK(Latency::parse("0.1")->to_string() == "0.100000");
    CHECK(Latency::parse("7")->to_string() == "7.000000");
    CHECK_FALSE(Latency::parse("-1").has_value());
    CHECK_FALSE(Latency::parse("1.2345678").has_value());
    CHECK_FALSE(Latency::parse("abc").has_value());
    CHECK(Latency::from_seconds(0.1005).to_string() == "0.100500");
  }

  TEST_CASE("microsecond latency survives a file round trip") {
    gwtest::TempDir dir("metrics");
    MetricsSnapshot s;
    s.captured_at_ms = 1'607'000'000'000;
    s.host_node_id = "ab";
    s.network_id = "mainnet";
    PeerMetrics p;
    p.info.peer_id = "P";
    p.info.latency = *Latency::parse("31.509326");
    s.peers.push_back(p);
    write_snapshot(s, dir / "s.json");
    auto back = read_snapshot(dir / "s.json");
    CHECK(back.peers[0].info.latency.to_string() == "31.509326");
    CHECK(back == s);
  }

  TEST_CASE("randomized snapshots round trip and serialize canonically") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 200; ++i) {
      auto s = random_snapshot(rng);
      auto text = serialize_snapshot(s);
      auto back = parse_snapshot(text);
      REQUIRE(back == s);
      CHECK(serialize_snapshot(back) == text);
    }
  }

  TEST_CASE("keys are sorted and the schema is versioned") {
    MetricsSnapshot s;
    s.captured_at_ms = 1;
    auto j = nlohmann::json::parse(serialize_snapshot(s));
    CHECK(j.at("schema") == 1);
    std::vector<std::string> keys;
    for (auto &[k, v] : j.items()) keys.push_back(k);
    CHECK(std::is_sorted(keys.begin(), keys.end()));
  }

  TEST_CASE("schema violations name the field") {
    auto field_of = [](const std::string &text) {
      try {
        parse_snapshot(text);
      } catch (const SchemaViolation &e) {
        return e.field();
      }
      return std::string("<none>");
    };
    CHECK(field_of(R"({"schema":1,"host_node_id":"","network_id":"","peers":[]})")
          == "captured_at_ms");
    CHECK(field_of(R"({"schema":2,"captured_at_ms":1,"host_node_id":"","network_id":"","peers":[]})")
          == "schema");
    const std::string peer_head =
        R"({"schema":1,"captured_at_ms":1,"host_node_id":"","network_id":"","peers":[{"peer_id":"a","node_id":"","pubkey":"","multiaddr":"","ip":"","country":"","city":"","client_family":"Prysm","client_version":"",)";
    CHECK(field_of(peer_head + R"("latency_s":"x","events":[],"counters":{}}]})")
          == "peers[0].latency_s");
    CHECK(field_of(peer_head
                   + R"("latency_s":"1.000000","events":[{"kind":"Connect","t_ms":5},{"kind":"Connect","t_ms":4}],"counters":{}}]})")
          == "peers[0].events[1].t_ms");
    CHECK(field_of(peer_head + R"("latency_s":"1.000000","events":[],"counters":{"BeaconBlock":-1}}]})")
          == "peers[0].counters.BeaconBlock");
  }

  TEST_CASE("malformed json reports a line") {
    try {
      parse_snapshot("{\n\"schema\": 1,\n oops");
      FAIL("expected SchemaViolation");
    } catch (const SchemaViolation &e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("missing file is an io failure") {
    CHECK_THROWS_AS(read_snapshot("/nonexistent/snap.json"), IoFailure);
  }

  TEST_CASE("family names") {
    for (auto f : kAllFamilies) {
      CHECK(parse_family(to_string(f)) == f);
    }
    CHECK_FALSE(parse_family("Geth").has_value());
  }
}
