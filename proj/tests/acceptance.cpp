// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gossipwatch/analyzer/analyzer.hpp"
#include "gossipwatch/cli/cli.hpp"
#include "gossipwatch/log.hpp"
#include "gossipwatch/simnet/simnet.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gossipwatch;
namespace fs = std::filesystem;

namespace {

/// Result of one criterion: empty `failure` means pass.
struct Verdict {
  std::string detail;
  std::string failure;
};

struct Criterion {
  const char *id;
  const char *name;
  double limit_s;  // 0: no runtime bound
  std::function<Verdict()> body;
};

int run_cli(std::vector<std::string> args, std::string *out_text = nullptr) {
  args.insert(args.begin(), "gossipwatch");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::map<std::string, std::string> tree(const fs::path &dir) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = gwtest::slurp(e.path());
  }
  return out;
}

Verdict dedup_equivalence() {
  std::mt19937_64 rng(20201201);
  std::size_t lists = 0, mismatches = 0;
  for (; lists < 10'000; ++lists) {
    auto ev = gwtest::random_events(rng, 12, 5'000);
    auto want = gwtest::dedup_by_search(ev, 500);
    if (!want || analyzer::dedup_events(ev) != *want) ++mismatches;
  }
  auto snap = metrics::read_snapshot(gwtest::fixture("burst5_snapshot.json"));
  const auto &raw = snap.peers.at(0).events;
  auto kept = analyzer::dedup_events(raw);
  std::size_t raw_connects = 0, kept_connects = 0;
  for (const auto &e : raw) raw_connects += e.kind == metrics::EventKind::Connect;
  for (const auto &e : kept) kept_connects += e.kind == metrics::EventKind::Connect;
  Verdict v{fmt::format("{} lists, {} mismatches; burst {}->{}", lists, mismatches,
                        raw_connects, kept_connects)};
  if (mismatches || raw_connects != 5 || kept_connects != 1) v.failure = "dedup disagrees";
  return v;
}

simnet::RunResult churn_run(bool legacy) {
  simnet::Scenario s;
  s.seed = 42;
  s.duration_ms = 60 * 60'000;
  simnet::PeerProfile p;
  p.churn = simnet::Churn{15 * 60'000, 5 * 60'000};
  p.legacy_event_mode = legacy;
  s.peers = {{20, p}};
  return simnet::run_scenario(s);
}

Verdict duration_correctness() {
  auto plain = churn_run(false);
  auto legacy = churn_run(true);
  std::map<std::uint32_t, std::size_t> per_peer;
  for (const auto &s : plain.truth.sessions) ++per_peer[s.peer];
  std::size_t with_three = 0;
  for (const auto &[p, n] : per_peer) with_three += n == 3;

  auto m1 = simnet::verify_durations(plain.snapshot, plain.truth, 500);
  auto m2 = simnet::verify_durations(legacy.snapshot, legacy.truth, 500);
  // Analyzer durations must not depend on the legacy notices.
  std::map<std::string, std::vector<analyzer::Session>> a, b;
  for (const auto &p : plain.snapshot.peers) {
    a[p.info.peer_id] = analyzer::connection_sessions(analyzer::dedup_events(p.events),
                                                      plain.snapshot.captured_at_ms)
                            .sessions;
  }
  for (const auto &p : legacy.snapshot.peers) {
    b[p.info.peer_id] = analyzer::connection_sessions(analyzer::dedup_events(p.events),
                                                      legacy.snapshot.captured_at_ms)
                            .sessions;
  }
  Verdict v{fmt::format("{} peers, {} with 3 sessions, {} sessions; mismatches {}/{}; "
                        "legacy identical={}",
                        per_peer.size(), with_three, plain.truth.sessions.size(), m1.size(),
                        m2.size(), a == b ? "yes" : "no")};
  if (per_peer.size() != 20 || with_three != 20) v.failure = "scenario did not give 3 sessions each";
  else if (!m1.empty() || !m2.empty()) v.failure = simnet::to_string(m1.empty() ? m2[0] : m1[0]);
  else if (a != b) v.failure = "legacy mode changed durations";
  return v;
}

Verdict counter_conservation(const fs::path &work) {
  const auto scenario = (fs::path(GW_SOURCE_DIR) / "scenarios/basic_50.json").string();
  std::string sim_out, verify_out;
  const int sim = run_cli({"simulate", "--scenario", scenario, "--seed", "7", "--out",
                           (work / "basic_50").string()},
                          &sim_out);
  const int ver = run_cli({"verify", "--snapshot", (work / "basic_50/snapshot.json").string(),
                           "--truth", (work / "basic_50/truth.json").string()},
                          &verify_out);
  auto snap = metrics::read_snapshot(work / "basic_50/snapshot.json");
  auto truth = simnet::read_truth(work / "basic_50/truth.json");
  // Independent replay: earliest (t, peer_id) copy of each message.
  std::map<std::uint32_t, std::pair<TimeMs, std::string>> first;
  for (const auto &d : truth.deliveries) {
    std::pair<TimeMs, std::string> k{d.t_ms, truth.peers[d.peer].peer_id};
    auto it = first.find(d.msg);
    if (it == first.end() || k < it->second) first[d.msg] = k;
  }
  std::map<std::string, std::uint64_t> oracle, totals;
  for (const auto &[m, k] : first) ++oracle[truth.publishes[m].topic];
  for (const auto &p : snap.peers) {
    for (const auto &[t, n] : p.counters) {
      if (n) totals[t] += n;
    }
  }
  std::uint64_t credited = 0;
  for (const auto &[t, n] : totals) credited += n;
  Verdict v{fmt::format("simulate exit {}, verify exit {}, published {}, credited {}", sim, ver,
                        truth.publishes.size(), credited)};
  if (sim != 0 || ver != 0) v.failure = "simulate/verify failed";
  else if (truth.publishes.size() < 10'000) v.failure = "fewer than 10000 messages published";
  else if (oracle != totals) v.failure = "per-topic totals differ from replay";
  return v;
}

Verdict exactly_once() {
  std::size_t worst = 0, overlaps = 0, runs = 0, delivered = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed, ++runs) {
    auto o = gwtest::random_gossip_schedule(seed, 200, 30);
    worst = std::max(worst, o.max_credits);
    overlaps += o.ihave_overlaps;
    delivered += o.delivered;
  }
  Verdict v{fmt::format("{} schedules, {} deliveries, max credits per id {}, ihave overlaps {}",
                        runs, delivered, worst, overlaps)};
  if (worst > 1 || overlaps > 0) v.failure = "duplicate credit or stale IWANT";
  return v;
}

Verdict top_k() {
  metrics::MetricsSnapshot snap;
  snap.captured_at_ms = 1;
  // 10 peers with 300 blocks each (3000) and 40 with 25 each (1000): 3000 / 4000.
  for (int i = 0; i < 50; ++i) {
    metrics::PeerMetrics p;
    p.info.peer_id = fmt::format("peer{:02d}", i);
    p.counters["BeaconBlock"] = i < 10 ? 300 : 25;
    snap.peers.push_back(p);
  }
  auto r = analyzer::aggregate(snap, {.top_k = 10});
  const double share = r.summary.top_k.at(0).share;
  Verdict v{fmt::format("top-10 BeaconBlock share {:.6f}", share)};
  if (std::abs(share - 0.75) > 1e-4) v.failure = "share outside 0.7500 +- 0.0001";
  return v;
}

Verdict single_peer_row(const fs::path &work) {
  auto snap = metrics::read_snapshot(gwtest::fixture("lighthouse_peer_snapshot.json"));
  analyzer::emit_report(analyzer::aggregate(snap), work / "single_peer");
  auto rows = gwtest::read_csv(work / "single_peer/per_peer.csv");
  std::map<std::string, std::string> f;
  if (rows.size() == 2) {
    for (std::size_t i = 0; i < rows[0].size() && i < rows[1].size(); ++i) f[rows[0][i]] = rows[1][i];
  }
  const std::map<std::string, std::string> want = {
      {"client_type", "Lighthouse/v1.0.1-5a3b94cb/x86_64-linux"},
      {"country", "United States"},
      {"city", "New Jersey, North Bergen"},
      {"latency_s", "31.509326"},
      {"connections", "10"},
      {"disconnections", "10"},
      {"connected_time_min", "24.600416"},
      {"BeaconBlock", "0"},
      {"BeaconAggregateAndProof", "0"},
      {"VoluntaryExit", "0"},
      {"ProposerSlashing", "0"},
      {"AttesterSlashing", "0"}};
  std::string bad;
  for (const auto &[k, val] : want) {
    if (f[k] != val) bad += fmt::format(" {}='{}'", k, f[k]);
  }
  Verdict v{fmt::format("{} rows; latency {} connections {}/{} time {}", rows.size(),
                        f["latency_s"], f["connections"], f["disconnections"],
                        f["connected_time_min"])};
  if (rows.size() != 2 || !bad.empty()) v.failure = "differs:" + bad;
  return v;
}

Verdict version_row(const fs::path &work) {
  auto r = analyzer::aggregate(metrics::read_snapshot(gwtest::fixture("client_versions_snapshot.json")));
  analyzer::emit_report(r, work / "versions");
  auto rows = gwtest::read_csv(work / "versions/client_versions.csv");
  std::string row;
  for (const auto &c : rows.at(1)) row += (row.empty() ? "" : " & ") + c;
  Verdict v{fmt::format("{} -> {}", fmt::join(rows.at(0), " & "), row)};
  if (row != "5 & 5 & 2 & 5 & 0 & 1") v.failure = "version row differs";
  return v;
}

Verdict discovery_convergence() {
  simnet::Scenario s;
  s.seed = 2020;
  s.duration_ms = 3'600'000;
  s.bootnodes = {0};
  s.peers = {{100, {}}};
  simnet::EventLoop loop;
  simnet::SimNetwork net(s, loop);
  auto self = gwtest::make_identity(4242).second;
  discovery::Peerstore store(self.node_id);
  discovery::bootstrap(store, net.bootnode_records(), loop.now());
  discovery::SubscriberQueue queue;
  discovery::DiscoveryService svc(store, net, loop, queue, {.interval_ms = 1000, .seed = 7});
  std::stop_source stop;
  svc.start(stop.get_token());
  std::vector<identity::NodeId> emitted;
  std::optional<std::size_t> converged_at;
  while (svc.rounds() < 200) {
    loop.run_until(loop.now() + 1000);
    for (const auto &id : queue.drain()) emitted.push_back(id);
    if (!converged_at && store.size() == 100) converged_at = svc.rounds();
  }
  stop.request_stop();
  std::set<identity::NodeId> unique(emitted.begin(), emitted.end());
  std::size_t members = 0;
  for (std::size_t i = 0; i < net.peer_count(); ++i) members += store.contains(net.peer_record(i).node_id);
  Verdict v{fmt::format("{}/100 members, converged at round {}, {} emitted, {} unique", members,
                        converged_at ? std::to_string(*converged_at) : "-", emitted.size(),
                        unique.size())};
  if (!converged_at || members != 100) v.failure = "did not reach full membership in 200 rounds";
  else if (unique.size() != emitted.size()) v.failure = "node id emitted twice";
  return v;
}

Verdict determinism(const fs::path &work) {
  const auto scenario = (fs::path(GW_SOURCE_DIR) / "scenarios/basic_50.json").string();
  // The first run is the one left behind by the conservation check.
  const int sim = run_cli({"simulate", "--scenario", scenario, "--seed", "7", "--out",
                           (work / "basic_50_again").string()});
  const bool snap_same = gwtest::slurp(work / "basic_50/snapshot.json")
                         == gwtest::slurp(work / "basic_50_again/snapshot.json");
  const bool truth_same = gwtest::slurp(work / "basic_50/truth.json")
                          == gwtest::slurp(work / "basic_50_again/truth.json");
  const int a1 = run_cli({"analyze", "--input", (work / "basic_50/snapshot.json").string(),
                          "--peerstore", (work / "basic_50/peerstore.jsonl").string(), "--out",
                          (work / "report_a").string()});
  const int a2 = run_cli({"analyze", "--input", (work / "basic_50/snapshot.json").string(),
                          "--peerstore", (work / "basic_50/peerstore.jsonl").string(), "--out",
                          (work / "report_b").string()});
  const bool reports_same = a1 == 0 && a2 == 0 && tree(work / "report_a") == tree(work / "report_b");
  Verdict v{fmt::format("snapshot identical={} truth identical={} report identical={} ({} files)",
                        snap_same, truth_same, reports_same,
                        a1 == 0 ? tree(work / "report_a").size() : 0)};
  if (sim != 0 || !snap_same || !truth_same || !reports_same) v.failure = "outputs differ";
  return v;
}

Verdict strategy_contrast() {
  simnet::Scenario s;
  s.seed = 11;
  s.duration_ms = 12 * 3'600'000;
  s.discovery_interval_ms = 5'000;
  simnet::PeerProfile strict;
  strict.user_agent = "Prysm/v1.0.5/2f49f3b0";
  strict.max_peers = 30;
  strict.background_peers = 15;
  simnet::PeerProfile flexible;
  flexible.user_agent = "teku/v20.12.0/linux-x86_64";
  flexible.strategy = simnet::Strategy::Flexible;
  flexible.max_peers = 80;
  flexible.background_peers = 80;
  flexible.prune_period_ms = 5 * 60'000;
  s.peers = {{15, strict}, {15, flexible}};
  auto res = simnet::run_scenario(s);
  auto r = analyzer::aggregate(res.snapshot);
  const analyzer::ClientRow *prysm = nullptr, *teku = nullptr;
  for (const auto &c : r.per_client) {
    if (c.family == metrics::ClientFamily::Prysm) prysm = &c;
    if (c.family == metrics::ClientFamily::Teku) teku = &c;
  }
  if (!prysm || !teku) return {"", "a family is missing from per_client"};
  Verdict v{fmt::format("Strict avg_connections {:.2f} time {:.1f} min; Flexible avg_connections "
                        "{:.2f} time {:.1f} min",
                        prysm->avg_connections, prysm->avg_connected_time_min,
                        teku->avg_connections, teku->avg_connected_time_min)};
  if (!(prysm->avg_connections < teku->avg_connections)) v.failure = "Strict has more connections";
  else if (!(prysm->avg_connected_time_min > teku->avg_connected_time_min))
    v.failure = "Strict is connected for less time";
  return v;
}

}  // namespace

int main() {
  init_logging_from_env();
  gwtest::TempDir work("acceptance");
  const std::vector<Criterion> criteria = {
      {"AC1", "dedup oracle equivalence", 10, dedup_equivalence},
      {"AC2", "session durations vs ground truth", 30, duration_correctness},
      {"AC3", "counter conservation and first relayer", 60,
       [&] { return counter_conservation(work.path()); }},
      {"AC4", "exactly-once delivery", 10, exactly_once},
      {"AC5", "top-k share", 0, top_k},
      {"AC6", "per-peer table fixture", 0, [&] { return single_peer_row(work.path()); }},
      {"AC7", "client version fixture", 0, [&] { return version_row(work.path()); }},
      {"AC8", "discovery convergence", 20, discovery_convergence},
      {"AC9", "determinism", 0, [&] { return determinism(work.path()); }},
      {"AC10", "strategy contrast", 0, strategy_contrast},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception &e) {
      v.failure = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (v.failure.empty() && c.limit_s > 0 && secs >= c.limit_s) {
      v.failure = fmt::format("took {:.1f} s, limit {:.0f} s", secs, c.limit_s);
    }
    const bool pass = v.failure.empty();
    failures += !pass;
    std::cout << fmt::format("{:<4} {} {} ({:.2f} s): {}{}\n", c.id, pass ? "PASS" : "FAIL",
                             c.name, secs, v.detail, pass ? "" : " -- " + v.failure)
              << std::flush;
  }
  std::cout << fmt::format("acceptance: {} of {} passed\n", criteria.size() - failures,
                           criteria.size());
  return failures == 0 ? 0 : 1;
}
