// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <sstream>

#include "doctest.h"
#include "gossipwatch/cli/cli.hpp"
#include "gossipwatch/simnet/simnet.hpp"
#include "support.hpp"

using namespace gossipwatch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "gossipwatch");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char *kSmallScenario = R"({
  "seed": 3, "duration_ms": 600000,
  "peers": [
    {"count": 6, "profile": {"user_agent": "Prysm/v1.0.5/x",
                             "publish_rate_per_min": {"BeaconBlock": 2}}},
    {"count": 4, "profile": {"user_agent": "teku/v20.12.0/y", "strategy": "Flexible",
                             "max_peers": 8, "background_peers": 10,
                             "publish_rate_per_min": {"BeaconBlock": 1}}}
  ]
})";

std::map<std::string, std::string> directory_contents(const fs::path &dir) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::directory_iterator(dir)) {
    out[e.path().filename().string()] = gwtest::slurp(e.path());
  }
  return out;
}

std::string line_with(const std::string &text, const std::string &prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line;
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::kBadInput);
    CHECK(run({"frobnicate"}).code == cli::kBadInput);
    CHECK(run({"analyze", "--input", "x.json"}).code == cli::kBadInput);
    CHECK(run({"--help"}).code == cli::kOk);
  }

  TEST_CASE("crawl reports bad config, bind failure and live transport") {
    gwtest::TempDir dir("cli-crawl");
    gwtest::spit(dir / "bad.json", R"({"export_interval_s": 0})");
    auto bad = run({"crawl", "--config", (dir / "bad.json").string(), "--out",
                    (dir / "o").string()});
    CHECK(bad.code == cli::kBadInput);
    CHECK(bad.err.find("export_interval_s") != std::string::npos);
    CHECK(run({"crawl", "--config", (dir / "missing.json").string(), "--out",
               (dir / "o").string()})
              .code == cli::kBadInput);

    gwtest::spit(dir / "ok.json", "{}");
    CHECK(run({"crawl", "--config", (dir / "ok.json").string(), "--out", (dir / "o").string(),
               "--transport", "live"})
              .code == cli::kUnsupported);
    CHECK(run({"crawl", "--config", (dir / "ok.json").string(), "--out", (dir / "o").string(),
               "--duration", "0"})
              .code == cli::kBadInput);

    // Listening on a simulated peer's address collides with it.
    gwtest::spit(dir / "scenario.json", kSmallScenario);
    auto sc = simnet::load_scenario(dir / "scenario.json");
    simnet::EventLoop loop;
    simnet::SimNetwork net(sc, loop);
    gwtest::spit(dir / "taken.json",
                 R"({"listen_ip": ")" + net.peer_record(2).ip.to_string() + R"("})");
    CHECK(run({"crawl", "--config", (dir / "taken.json").string(), "--out",
               (dir / "o").string(), "--scenario", (dir / "scenario.json").string()})
              .code == cli::kBindFailure);
  }

  TEST_CASE("a short simulated crawl writes a snapshot") {
    gwtest::TempDir dir("cli-crawl-sim");
    gwtest::spit(dir / "ok.json", "{}");
    auto r = run({"crawl", "--config", (dir / "ok.json").string(), "--out",
                  (dir / "snaps").string(), "--duration", "5"});
    REQUIRE(r.code == cli::kOk);
    std::size_t snapshots = 0;
    for (const auto &e : fs::directory_iterator(dir / "snaps")) {
      if (e.path().filename().string().rfind("snapshot-", 0) == 0) {
        ++snapshots;
        CHECK_NOTHROW(metrics::read_snapshot(e.path()));
      }
    }
    CHECK(snapshots >= 1);
  }

  TEST_CASE("analyze renders the Lighthouse peer fixture") {
    gwtest::TempDir dir("cli-analyze");
    auto r = run({"analyze", "--input", gwtest::fixture("lighthouse_peer_snapshot.json").string(),
                  "--out", (dir / "report").string()});
    REQUIRE(r.code == cli::kOk);
    auto rows = gwtest::read_csv(dir / "report" / "per_peer.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "Lighthouse/v1.0.1-5a3b94cb/x86_64-linux");
    CHECK(rows[1][6] == "31.509326");
    CHECK(rows[1][9] == "24.600416");
  }

  TEST_CASE("dedup window flag") {
    gwtest::TempDir dir("cli-window");
    const auto input = gwtest::fixture("burst5_snapshot.json").string();
    REQUIRE(run({"analyze", "--input", input, "--out", (dir / "a").string()}).code == 0);
    REQUIRE(run({"analyze", "--input", input, "--out", (dir / "b").string(), "--window-ms", "1"})
                .code == 0);
    CHECK(gwtest::read_csv(dir / "a" / "per_peer.csv")[1][7] == "1");
    CHECK(gwtest::read_csv(dir / "b" / "per_peer.csv")[1][7] == "5");
    CHECK(run({"analyze", "--input", input, "--out", (dir / "c").string(), "--window-ms", "0"})
              .code == cli::kBadInput);
  }

  TEST_CASE("analyze rejects broken snapshots") {
    gwtest::TempDir dir("cli-broken");
    gwtest::spit(dir / "bad.json", R"({"schema": 1})");
    auto r = run({"analyze", "--input", (dir / "bad.json").string(), "--out",
                  (dir / "o").string()});
    CHECK(r.code == cli::kBadInput);
    CHECK(r.err.find("captured_at_ms") != std::string::npos);
  }

  TEST_CASE("analyze is reproducible") {
    gwtest::TempDir dir("cli-repro");
    const auto input = gwtest::fixture("client_versions_snapshot.json").string();
    REQUIRE(run({"analyze", "--input", input, "--out", (dir / "a").string()}).code == 0);
    REQUIRE(run({"analyze", "--input", input, "--out", (dir / "b").string()}).code == 0);
    CHECK(directory_contents(dir / "a") == directory_contents(dir / "b"));
  }

  TEST_CASE("simulate then verify") {
    gwtest::TempDir dir("cli-sim");
    gwtest::spit(dir / "scenario.json", kSmallScenario);
    auto a = run({"simulate", "--scenario", (dir / "scenario.json").string(), "--out",
                  (dir / "a").string()});
    auto b = run({"simulate", "--scenario", (dir / "scenario.json").string(), "--out",
                  (dir / "b").string()});
    REQUIRE(a.code == cli::kOk);
    CHECK(line_with(a.out, "snapshot_sha256") == line_with(b.out, "snapshot_sha256"));
    CHECK(line_with(a.out, "truth_sha256") == line_with(b.out, "truth_sha256"));
    CHECK(gwtest::slurp(dir / "a" / "snapshot.json") == gwtest::slurp(dir / "b" / "snapshot.json"));

    auto other = run({"simulate", "--scenario", (dir / "scenario.json").string(), "--seed", "4",
                      "--out", (dir / "c").string()});
    CHECK(line_with(other.out, "truth_sha256") != line_with(a.out, "truth_sha256"));

    auto ok = run({"verify", "--snapshot", (dir / "a" / "snapshot.json").string(), "--truth",
                   (dir / "a" / "truth.json").string()});
    CHECK(ok.code == cli::kOk);
    CHECK(ok.out.find("result=pass") != std::string::npos);

    auto snap = metrics::read_snapshot(dir / "a" / "snapshot.json");
    REQUIRE_FALSE(snap.peers.empty());
    snap.peers[0].counters["BeaconBlock"] += 3;
    metrics::write_snapshot(snap, dir / "tampered.json");
    auto bad = run({"verify", "--snapshot", (dir / "tampered.json").string(), "--truth",
                    (dir / "a" / "truth.json").string()});
    CHECK(bad.code == cli::kMismatch);
    CHECK(bad.out.find("mismatch counter") != std::string::npos);

    gwtest::spit(dir / "junk.json", "[]");
    CHECK(run({"verify", "--snapshot", (dir / "a" / "snapshot.json").string(), "--truth",
               (dir / "junk.json").string()})
              .code == cli::kBadInput);
  }
}
