// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/cli/cli.hpp"

#include <atomic>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "gossipwatch/analyzer/analyzer.hpp"
#include "gossipwatch/log.hpp"
#include "gossipwatch/simnet/simnet.hpp"

namespace gossipwatch::cli {

namespace {

std::atomic<bool> g_interrupted{false};

// Used by `crawl --transport sim` when no scenario file is given.
constexpr const char *kDefaultScenario = R"({
  "seed": 1,
  "duration_ms": 600000,
  "discovery_interval_ms": 1000,
  "peers": [
    {"count": 6, "profile": {"user_agent": "Lighthouse/v1.0.3-65dcdc36/x86_64-linux",
      "publish_rate_per_min": {"BeaconBlock": 1, "BeaconAggregateAndProof": 2}}},
    {"count": 6, "profile": {"user_agent": "Prysm/v1.0.5/2f49f3b0", "max_peers": 45,
      "publish_rate_per_min": {"BeaconBlock": 1, "BeaconAggregateAndProof": 2}}},
    {"count": 4, "profile": {"user_agent": "teku/v20.12.0/linux-x86_64/oracle_openjdk-java-11",
      "strategy": "Flexible", "max_peers": 74, "background_peers": 80,
      "publish_rate_per_min": {"BeaconBlock": 1, "BeaconAggregateAndProof": 2}}},
    {"count": 4, "profile": {"user_agent": "nimbus", "link_delay_ms": 30,
      "publish_rate_per_min": {"BeaconBlock": 1, "BeaconAggregateAndProof": 2}}}
  ]
})";

std::string sha256_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  auto text = buf.str();
  return to_hex(sha256(as_bytes(text)));
}

struct CrawlArgs {
  std::string config;
  std::string out;
  std::optional<double> duration_s;
  std::string transport = "sim";
  std::string scenario;
  std::optional<std::uint64_t> seed;
};

int crawl(const CrawlArgs &a, std::ostream &out, std::ostream &err) {
  crawler::HostConfig config;
  try {
    config = crawler::load_config(a.config);
  } catch (const crawler::BadConfig &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  if (a.duration_s && !(*a.duration_s > 0)) {
    err << "error: --duration must be positive\n";
    return kBadInput;
  }
  if (a.transport == "live") {
    crawler::LiveTransport live;
    simnet::EventLoop loop;
    try {
      auto host = crawler::Host::init(config, identity::Seed{}, live, loop, nullptr);
    } catch (const crawler::Unsupported &e) {
      err << "error: " << e.what() << '\n';
      return kUnsupported;
    } catch (const crawler::BindFailure &e) {
      err << "error: " << e.what() << '\n';
      return kBindFailure;
    }
    return kUnsupported;
  }

  simnet::Scenario scenario;
  try {
    scenario = a.scenario.empty() ? simnet::parse_scenario(kDefaultScenario)
                                  : simnet::load_scenario(a.scenario);
  } catch (const simnet::ScenarioInvalid &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  if (a.seed) {
    scenario.seed = *a.seed;
  }
  simnet::RunOptions options;
  options.crawler_config = config;
  if (a.duration_s) {
    options.duration_ms = static_cast<TimeMs>(*a.duration_s * 1000.0);
  }
  options.output_dir = a.out;
  options.interrupted = [] { return g_interrupted.load(); };
  try {
    auto result = simnet::run_scenario(scenario, options);
    std::size_t connected = 0;
    for (const auto &p : result.snapshot.peers) {
      connected += !p.events.empty();
    }
    out << fmt::format("crawl: captured_at_ms={} peers={} peerstore_size={} interrupted={}\n",
                       result.snapshot.captured_at_ms, connected, result.peerstore.size(),
                       result.interrupted ? "yes" : "no");
    out << fmt::format("snapshot: {}\n",
                       (std::filesystem::path(a.out)
                        / fmt::format("snapshot-{}.json", result.snapshot.captured_at_ms))
                           .string());
  } catch (const crawler::BindFailure &e) {
    err << "error: " << e.what() << '\n';
    return kBindFailure;
  } catch (const crawler::BadConfig &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const simnet::ScenarioInvalid &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const crawler::ProviderUnavailable &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}

struct AnalyzeArgs {
  std::string input;
  std::string out;
  std::int64_t window_ms = 500;
  std::size_t top_k = 10;
  std::string peerstore;
};

int analyze(const AnalyzeArgs &a, std::ostream &out, std::ostream &err) {
  if (a.window_ms <= 0 || a.top_k < 1) {
    err << "error: --window-ms and --top-k must be positive\n";
    return kBadInput;
  }
  metrics::MetricsSnapshot snapshot;
  analyzer::AggregateOptions options;
  options.dedup.window_ms = a.window_ms;
  options.top_k = a.top_k;
  try {
    snapshot = metrics::read_snapshot(a.input);
    if (!a.peerstore.empty()) {
      std::ifstream in(a.peerstore);
      if (!in) {
        throw metrics::IoFailure("cannot open " + a.peerstore);
      }
      options.peerstore_size = discovery::read_dump(in).size();
    }
  } catch (const metrics::SchemaViolation &e) {
    err << "error: " << a.input << ": " << e.what() << '\n';
    return kBadInput;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  analyzer::AnalysisReport report;
  try {
    report = analyzer::aggregate(snapshot, options);
    analyzer::emit_report(report, a.out);
  } catch (const analyzer::UnsortedInput &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const metrics::IoFailure &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  const auto &s = report.summary;
  out << fmt::format("analyze: peers={} connected={} peerstore_size={}\n", s.peers,
                     s.connected_count,
                     s.peerstore_size ? std::to_string(*s.peerstore_size) : "unknown");
  for (const auto &c : report.per_client) {
    out << fmt::format("client family={} peers={} avg_connections={:.6f} "
                       "avg_connected_time_min={:.6f}\n",
                       metrics::to_string(c.family), c.peer_count, c.avg_connections,
                       c.avg_connected_time_min);
  }
  for (const auto &t : s.top_k) {
    out << fmt::format("top_k_share topic={} k={} share={:.6f}\n", t.topic, t.k, t.share);
  }
  for (const auto &o : s.outliers) {
    out << fmt::format("outlier peer={} flag={}\n", o.peer_id, analyzer::to_string(o.flag));
  }
  out << fmt::format("report: {}\n", a.out);
  return kOk;
}

struct SimulateArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int simulate(const SimulateArgs &a, std::ostream &out, std::ostream &err) {
  simnet::Scenario scenario;
  try {
    scenario = simnet::load_scenario(a.scenario);
  } catch (const simnet::ScenarioInvalid &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  if (a.seed) {
    scenario.seed = *a.seed;
  }
  simnet::RunResult result;
  try {
    result = simnet::run_scenario(scenario);
  } catch (const simnet::ScenarioInvalid &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const crawler::BindFailure &e) {
    err << "error: " << e.what() << '\n';
    return kBindFailure;
  } catch (const crawler::ProviderUnavailable &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  const std::filesystem::path dir(a.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  try {
    metrics::write_snapshot(result.snapshot, dir / "snapshot.json");
    simnet::write_truth(result.truth, dir / "truth.json");
    std::ofstream dump(dir / "peerstore.jsonl", std::ios::trunc);
    if (!dump) {
      throw metrics::IoFailure("cannot open " + (dir / "peerstore.jsonl").string());
    }
    discovery::write_dump(dump, result.peerstore);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  out << fmt::format("simulate: seed={} peers={} connected={} peerstore_size={} "
                     "published={} delivered={}\n",
                     scenario.seed, result.truth.peers.size(), result.snapshot.peers.size(),
                     result.peerstore.size(), result.truth.publishes.size(),
                     result.truth.deliveries.size());
  out << "snapshot_sha256 " << sha256_file(dir / "snapshot.json") << '\n';
  out << "truth_sha256 " << sha256_file(dir / "truth.json") << '\n';
  return kOk;
}

struct VerifyArgs {
  std::string snapshot;
  std::string truth;
  std::int64_t tolerance_ms = 500;
};

int verify(const VerifyArgs &a, std::ostream &out, std::ostream &err) {
  metrics::MetricsSnapshot snapshot;
  simnet::GroundTruth truth;
  try {
    snapshot = metrics::read_snapshot(a.snapshot);
    truth = simnet::read_truth(a.truth);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  if (a.tolerance_ms < 0) {
    err << "error: --tolerance-ms must be nonnegative\n";
    return kBadInput;
  }
  auto counters = simnet::verify_counters(snapshot, truth);
  std::vector<simnet::Mismatch> durations;
  try {
    durations = simnet::verify_durations(snapshot, truth, a.tolerance_ms);
  } catch (const analyzer::UnsortedInput &e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  for (const auto &m : counters) {
    out << "mismatch " << simnet::to_string(m) << '\n';
  }
  for (const auto &m : durations) {
    out << "mismatch " << simnet::to_string(m) << '\n';
  }
  out << fmt::format("verify: counter_mismatches={} duration_mismatches={} result={}\n",
                     counters.size(), durations.size(),
                     counters.empty() && durations.empty() ? "pass" : "fail");
  return counters.empty() && durations.empty() ? kOk : kMismatch;
}

}  // namespace

void request_interrupt() {
  g_interrupted.store(true);
}

void reset_interrupt() {
  g_interrupted.store(false);
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  init_logging_from_env();
  CLI::App app{"Gossip network crawler, analyzer and simulator"};
  app.require_subcommand(1);

  CrawlArgs crawl_args;
  auto *c = app.add_subcommand("crawl", "Run the monitoring host and export snapshots");
  c->add_option("--config", crawl_args.config, "Host config (JSON)")->required();
  c->add_option("--out", crawl_args.out, "Snapshot directory")->required();
  c->add_option("--duration", crawl_args.duration_s, "Seconds to run");
  c->add_option("--transport", crawl_args.transport, "sim or live")
      ->check(CLI::IsMember({"sim", "live"}));
  c->add_option("--scenario", crawl_args.scenario, "Scenario for the sim transport");
  c->add_option("--seed", crawl_args.seed, "Overrides the scenario seed");

  AnalyzeArgs analyze_args;
  auto *an = app.add_subcommand("analyze", "Derive tables and charts from a snapshot");
  an->add_option("--input", analyze_args.input, "Snapshot JSON")->required();
  an->add_option("--out", analyze_args.out, "Report directory")->required();
  an->add_option("--window-ms", analyze_args.window_ms, "Dedup window");
  an->add_option("--top-k", analyze_args.top_k, "Peers in the top-k share");
  an->add_option("--peerstore", analyze_args.peerstore, "Peerstore dump (JSON lines)");

  SimulateArgs sim_args;
  auto *s = app.add_subcommand("simulate", "Run a scenario in virtual time");
  s->add_option("--scenario", sim_args.scenario, "Scenario JSON")->required();
  s->add_option("--seed", sim_args.seed, "Overrides the scenario seed");
  s->add_option("--out", sim_args.out, "Output directory")->required();

  VerifyArgs verify_args;
  auto *v = app.add_subcommand("verify", "Check a simulated snapshot against ground truth");
  v->add_option("--snapshot", verify_args.snapshot, "Snapshot JSON")->required();
  v->add_option("--truth", verify_args.truth, "Ground truth JSON")->required();
  v->add_option("--tolerance-ms", verify_args.tolerance_ms, "Session tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kOk : kBadInput;
  }
  if (c->parsed()) return crawl(crawl_args, out, err);
  if (an->parsed()) return analyze(analyze_args, out, err);
  if (s->parsed()) return simulate(sim_args, out, err);
  return verify(verify_args, out, err);
}

}  // namespace gossipwatch::cli
