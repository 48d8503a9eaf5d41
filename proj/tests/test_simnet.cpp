// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "doctest.h"
#include "gossipwatch/simnet/simnet.hpp"
#include "support.hpp"

using namespace gossipwatch;
using namespace gossipwatch::simnet;
namespace fs = std::filesystem;

namespace {

Scenario small(std::uint64_t seed, TimeMs duration = 20 * 60'000) {
  Scenario s;
  s.seed = seed;
  s.duration_ms = duration;
  s.link_delay_jitter_ms = 10;
  PeerProfile a;
  a.user_agent = "Prysm/v1.0.5/x";
  a.publish_rate_per_min = {{"BeaconBlock", 2}, {"VoluntaryExit", 0.5}};
  PeerProfile b = a;
  b.user_agent = "teku/v20.12.0/y";
  b.strategy = Strategy::Flexible;
  b.max_peers = 10;
  b.background_peers = 15;
  b.prune_period_ms = 120'000;
  b.link_delay_ms = 90;
  s.peers = {{8, a}, {6, b}};
  return s;
}

std::string scenario_error(const std::string &text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioInvalid &e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("simnet.loop") {
  TEST_CASE("tasks run in time order, FIFO within an instant") {
    EventLoop loop(0);
    std::string order;
    loop.post_at(20, [&] { order += 'c'; });
    loop.post_at(10, [&] { order += 'a'; });
    loop.post_at(10, [&] { order += 'b'; });
    loop.post_at(10, [&] {
      loop.post_at(5, [&] { order += 'd'; });  // in the past: runs now, after b
    });
    CHECK(loop.run_until(100));
    CHECK(order == "abdc");
    CHECK(loop.now() == 100);
    CHECK(loop.executed() == 5);
  }

  TEST_CASE("interruption leaves the clock at the last task") {
    EventLoop loop(0);
    int n = 0;
    for (TimeMs t = 1; t <= 10; ++t) loop.post_at(t, [&] { ++n; });
    CHECK_FALSE(loop.run_until(100, [&] { return n == 3; }));
    CHECK(loop.now() == 3);
    CHECK(loop.pending() == 7);
  }
}

TEST_SUITE("simnet.scenario") {
  TEST_CASE("bundled scenario parses") {
    auto s = load_scenario(fs::path(GW_SOURCE_DIR) / "scenarios/basic_50.json");
    CHECK(s.peer_count() == 50);
    CHECK(s.seed == 7);
    CHECK(s.duration_ms == 48 * 3'600'000);
  }

  TEST_CASE("invalid scenarios name the field") {
    CHECK(scenario_error(R"({"duration_ms": 0, "peers": [{"count": 1}]})").find("duration_ms")
          == 0);
    CHECK(scenario_error(R"({"duration_ms": 1, "peers": []})").find("peers") == 0);
    CHECK(scenario_error(R"({"duration_ms": 1, "peers": [{"count": 0}]})")
              .find("peers[0].count") == 0);
    CHECK(scenario_error(
              R"({"duration_ms": 1, "peers": [{"count": 1, "profile": {"strategy": "Lazy"}}]})")
              .find("peers[0].profile.strategy") == 0);
    CHECK(scenario_error(
              R"({"duration_ms": 1, "peers": [{"count": 1, "profile": {"max_peers": -3}}]})")
              .find("peers[0].profile.max_peers") == 0);
    CHECK(scenario_error(R"({"duration_ms": 1, "bootnodes": [4], "peers": [{"count": 1}]})")
              .find("bootnodes") == 0);
    CHECK(scenario_error(R"({"duration_ms": 1, "crawler": 3, "peers": [{"count": 1}]})")
              .find("crawler") == 0);
    CHECK_FALSE(scenario_error("{").empty());
    CHECK_THROWS_AS(load_scenario("/no/such/scenario.json"), ScenarioInvalid);
  }

  TEST_CASE("crawler overrides are checked up front") {
    auto s = small(1);
    s.crawler_json = R"({"export_interval_s": 0})";
    CHECK_THROWS_AS(run_scenario(s), ScenarioInvalid);
  }
}

TEST_SUITE("simnet.run") {
  TEST_CASE("counters and sessions verify against the ground truth") {
    auto res = run_scenario(small(3));
    CHECK(res.truth.publishes.size() > 100);
    CHECK_FALSE(res.snapshot.peers.empty());
    auto counters = verify_counters(res.snapshot, res.truth);
    for (const auto &m : counters) FAIL_CHECK(to_string(m));
    auto sessions = verify_durations(res.snapshot, res.truth);
    for (const auto &m : sessions) FAIL_CHECK(to_string(m));
  }

  TEST_CASE("a tampered counter is reported") {
    auto res = run_scenario(small(4));
    auto snap = res.snapshot;
    REQUIRE_FALSE(snap.peers.empty());
    snap.peers[0].counters["BeaconBlock"] += 1;
    auto m = verify_counters(snap, res.truth);
    REQUIRE(m.size() == 1);
    CHECK(m[0].kind == "counter");
    CHECK(m[0].peer_id == snap.peers[0].info.peer_id);
  }

  TEST_CASE("a stray peer is reported") {
    auto res = run_scenario(small(4, 60'000));
    auto snap = res.snapshot;
    metrics::PeerMetrics ghost;
    ghost.info.peer_id = "12D3KooWghost";
    snap.peers.push_back(ghost);
    auto m = verify_durations(snap, res.truth);
    REQUIRE(m.size() == 1);
    CHECK(m[0].kind == "unknown_peer");
  }

  TEST_CASE("equal seeds give identical output, other seeds do not") {
    auto a = run_scenario(small(9));
    auto b = run_scenario(small(9));
    auto c = run_scenario(small(10));
    CHECK(metrics::serialize_snapshot(a.snapshot) == metrics::serialize_snapshot(b.snapshot));
    CHECK(serialize_truth(a.truth) == serialize_truth(b.truth));
    CHECK(serialize_truth(a.truth) != serialize_truth(c.truth));
  }

  TEST_CASE("truth survives a file round trip") {
    auto res = run_scenario(small(5, 5 * 60'000));
    gwtest::TempDir dir("truth");
    write_truth(res.truth, dir / "truth.json");
    auto back = read_truth(dir / "truth.json");
    CHECK(serialize_truth(back) == serialize_truth(res.truth));
    CHECK(back.membership().size() == 14);
    CHECK_THROWS_AS(parse_truth("{}"), Error);
  }

  TEST_CASE("foreign network peers never complete a handshake") {
    auto s = small(6, 5 * 60'000);
    PeerProfile other;
    other.network_id = "medalla";
    s.peers.push_back({3, other});
    auto res = run_scenario(s);
    std::set<std::string> foreign;
    for (const auto &p : res.truth.peers) {
      if (p.network_id == "medalla") foreign.insert(p.peer_id);
    }
    CHECK(foreign.size() == 3);
    for (const auto &p : res.snapshot.peers) {
      CHECK_FALSE(foreign.contains(p.info.peer_id));
    }
  }

  TEST_CASE("churned peers produce the scheduled sessions, legacy mode or not") {
    auto churn = [](bool legacy) {
      Scenario s;
      s.seed = 12;
      s.duration_ms = 60 * 60'000;
      PeerProfile p;
      p.churn = Churn{15 * 60'000, 5 * 60'000};
      p.legacy_event_mode = legacy;
      s.peers = {{6, p}};
      return run_scenario(s);
    };
    auto plain = churn(false);
    auto legacy = churn(true);
    for (const auto &m : verify_durations(plain.snapshot, plain.truth)) FAIL_CHECK(to_string(m));
    for (const auto &m : verify_durations(legacy.snapshot, legacy.truth))
      FAIL_CHECK(to_string(m));
    std::size_t raw_plain = 0, raw_legacy = 0;
    for (const auto &p : plain.snapshot.peers) raw_plain += p.events.size();
    for (const auto &p : legacy.snapshot.peers) raw_legacy += p.events.size();
    CHECK(raw_legacy == 5 * raw_plain);
    CHECK(plain.truth.sessions.size() >= 6 * 3);
  }
}
