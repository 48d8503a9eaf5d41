// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gossipwatch/gossip/router.hpp"

using namespace gossipwatch;
using namespace gossipwatch::gossip;

namespace {

Router subscribed_router(std::uint64_t seed = 1) {
  Router r("self", Params{}, seed);
  for (const auto &t : default_topics()) {
    r.subscribe(t);
  }
  return r;
}

GossipMessage msg(const std::string &topic, const std::string &body) {
  return GossipMessage::make(topic, to_bytes(body));
}

std::vector<PeerId> peers(std::size_t n) {
  std::vector<PeerId> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back("p" + std::to_string(100 + i));
  }
  return out;
}

std::size_t count(const std::vector<ControlAction> &acts, ControlAction::Kind k,
                  const std::string &topic) {
  return static_cast<std::size_t>(std::count_if(acts.begin(), acts.end(), [&](const auto &a) {
    return a.kind == k && a.topic == topic;
  }));
}

}  // namespace

TEST_SUITE("gossip") {
  TEST_CASE("five default topics") {
    auto r = subscribed_router();
    CHECK(r.subscriptions().size() == 5);
    CHECK_THROWS_AS(r.subscribe("BeaconBlock"), AlreadySubscribed);
  }

  TEST_CASE("message id is the digest of length-prefixed topic and payload") {
    auto m = msg("BeaconBlock", "abc");
    Bytes pre = {0, 0, 0, 11};
    for (char c : std::string("BeaconBlockabc")) pre.push_back(static_cast<std::uint8_t>(c));
    CHECK(m.id == sha256(pre));
    CHECK(m.id_matches());
    // The length prefix separates topic from payload.
    CHECK(msg("ab", "c").id != msg("a", "bc").id);
    auto bad = m;
    bad.payload.push_back(1);
    CHECK_FALSE(bad.id_matches());
  }

  TEST_CASE("first copy credits its sender once") {
    auto r = subscribed_router();
    std::vector<DeliveryRecord> hooked;
    r.set_delivery_hook([&](const DeliveryRecord &d) { hooked.push_back(d); });
    auto m = msg("BeaconBlock", "block-1");
    CHECK(r.handle_full_message("A", m, 10) == Delivery::DeliveredFirst);
    CHECK(r.handle_full_message("B", m, 11) == Delivery::Duplicate);
    CHECK(r.handle_full_message("A", m, 12) == Delivery::Duplicate);
    REQUIRE(hooked.size() == 1);
    CHECK(hooked[0].first_relayer == "A");
    CHECK(hooked[0].t_ms == 10);
    CHECK(r.delivery_log().size() == 1);
  }

  TEST_CASE("unsubscribed topic is ignored") {
    Router r("self", Params{}, 1);
    CHECK(r.handle_full_message("A", msg("X", "1"), 0) == Delivery::Ignored);
    CHECK(r.delivery_log().empty());
  }

  TEST_CASE("duplicates stay duplicates after the seen TTL") {
    auto r = subscribed_router();
    auto m = msg("VoluntaryExit", "e");
    r.handle_full_message("A", m, 0);
    r.heartbeat(200'000);
    CHECK(r.seen_cache_size() == 0);
    CHECK(r.handle_full_message("B", m, 200'001) == Delivery::Duplicate);
    CHECK(r.delivery_log().size() == 1);
  }

  TEST_CASE("ihave returns the unseen subset and tracks pending") {
    auto r = subscribed_router();
    auto seen = msg("BeaconBlock", "seen");
    auto fresh = msg("BeaconBlock", "fresh");
    r.handle_full_message("A", seen, 0);
    CHECK(r.handle_ihave("B", "BeaconBlock", {seen.id, fresh.id}, 5)
          == std::vector<MessageId>{fresh.id});
    CHECK(r.handle_ihave("C", "BeaconBlock", {seen.id}, 6).empty());
    CHECK(r.handle_ihave("C", "Other", {msg("Other", "z").id}, 6).empty());
  }

  TEST_CASE("two announcers do not trigger a double iwant") {
    auto r = subscribed_router();
    std::vector<MessageId> ids = {msg("BeaconBlock", "1").id, msg("BeaconBlock", "2").id,
                                  msg("BeaconBlock", "3").id};
    auto first = r.handle_ihave("A", "BeaconBlock", {ids[0], ids[1]}, 0);
    auto second = r.handle_ihave("B", "BeaconBlock", ids, 1);
    // Oracle: the pending set after A is {0, 1}, so B may only ask for 2.
    std::set<MessageId> pending(first.begin(), first.end());
    std::vector<MessageId> want;
    for (const auto &id : ids) {
      if (!pending.contains(id)) want.push_back(id);
    }
    CHECK(second == want);
  }

  TEST_CASE("pending requests expire so another announcer can be asked") {
    auto r = subscribed_router();
    auto id = msg("BeaconBlock", "slow").id;
    CHECK(r.handle_ihave("A", "BeaconBlock", {id}, 0).size() == 1);
    CHECK(r.pending(id, 100));
    const TimeMs expiry = 3 * 700;
    CHECK_FALSE(r.pending(id, expiry));
    CHECK(r.handle_ihave("B", "BeaconBlock", {id}, expiry).size() == 1);
  }

  TEST_CASE("iwant serves cached messages within the TTL") {
    auto r = subscribed_router();
    auto m = msg("BeaconBlock", "cached");
    r.handle_full_message("A", m, 1'000);
    CHECK(r.handle_iwant("B", {m.id}, 2'000) == std::vector<GossipMessage>{m});
    CHECK(r.handle_iwant("B", {msg("BeaconBlock", "nope").id}, 2'000).empty());
    CHECK(r.handle_iwant("B", {m.id}, 1'000 + 120'001).empty());
  }

  TEST_CASE("heartbeat grafts from 2 up to D") {
    auto r = subscribed_router();
    for (const auto &p : peers(10)) r.add_peer(p, {"BeaconBlock"});
    r.join_mesh("p100", "BeaconBlock");
    r.join_mesh("p101", "BeaconBlock");
    auto acts = r.heartbeat(0);
    CHECK(count(acts, ControlAction::Kind::Graft, "BeaconBlock") == 4);
    CHECK(r.mesh("BeaconBlock").size() == 6);
  }

  TEST_CASE("heartbeat prunes from 14 down to D") {
    auto r = subscribed_router();
    for (const auto &p : peers(14)) {
      r.add_peer(p, {"BeaconBlock"});
      r.join_mesh(p, "BeaconBlock");
    }
    auto acts = r.heartbeat(0);
    CHECK(count(acts, ControlAction::Kind::Prune, "BeaconBlock") == 8);
    CHECK(r.mesh("BeaconBlock").size() == 6);
  }

  TEST_CASE("steady mesh emits no graft or prune") {
    auto r = subscribed_router();
    for (const auto &p : peers(6)) {
      r.add_peer(p, {"BeaconBlock"});
      r.join_mesh(p, "BeaconBlock");
    }
    auto acts = r.heartbeat(0);
    CHECK(count(acts, ControlAction::Kind::Graft, "BeaconBlock") == 0);
    CHECK(count(acts, ControlAction::Kind::Prune, "BeaconBlock") == 0);
  }

  TEST_CASE("ihave gossip goes to non-mesh peers with recent ids") {
    auto r = subscribed_router();
    auto ps = peers(20);
    for (const auto &p : ps) r.add_peer(p, {"BeaconBlock"});
    r.heartbeat(0);
    auto mesh = r.mesh("BeaconBlock");
    auto m = msg("BeaconBlock", "gossip-me");
    r.handle_full_message(ps[0], m, 10);
    auto acts = r.heartbeat(700);
    std::size_t ihaves = 0;
    for (const auto &a : acts) {
      if (a.kind == ControlAction::Kind::IHave) {
        ++ihaves;
        CHECK_FALSE(mesh.contains(a.peer));
        CHECK(a.ids == std::vector<MessageId>{m.id});
      }
    }
    CHECK(ihaves == Params{}.gossip_sample);
    // Advertised for three heartbeats, then dropped.
    r.heartbeat(1400);
    r.heartbeat(2100);
    auto later = r.heartbeat(2800);
    CHECK(count(later, ControlAction::Kind::IHave, "BeaconBlock") == 0);
  }

  TEST_CASE("graft is refused at D_high") {
    auto r = subscribed_router();
    for (const auto &p : peers(12)) {
      CHECK(r.handle_graft(p, "BeaconBlock"));
    }
    CHECK_FALSE(r.handle_graft("late", "BeaconBlock"));
    CHECK_FALSE(r.handle_graft("x", "NotATopic"));
    r.handle_prune("p100", "BeaconBlock");
    CHECK(r.mesh("BeaconBlock").size() == 11);
  }

  TEST_CASE("publish forwards to the mesh without crediting anyone") {
    auto r = subscribed_router();
    for (const auto &p : peers(6)) {
      r.add_peer(p, {"BeaconBlock"});
      r.join_mesh(p, "BeaconBlock");
    }
    int credits = 0;
    r.set_delivery_hook([&](const DeliveryRecord &) { ++credits; });
    auto res = r.publish("BeaconBlock", to_bytes("mine"), 0);
    CHECK(res.forwards.size() == 6);
    CHECK(r.handle_full_message("p100", res.message, 1) == Delivery::Duplicate);
    CHECK(credits == 0);
    CHECK(r.delivery_log().empty());
    CHECK_THROWS_AS(r.publish("Nope", {}, 0), NotSubscribed);
  }

  TEST_CASE("forward targets exclude the sender") {
    auto r = subscribed_router();
    for (const auto &p : peers(3)) r.join_mesh(p, "BeaconBlock");
    auto t = r.forward_targets("BeaconBlock", "p101");
    CHECK(t == std::vector<PeerId>{"p100", "p102"});
  }

  TEST_CASE("delivery log csv") {
    auto r = subscribed_router();
    auto m = msg("BeaconBlock", "x");
    r.handle_full_message("A", m, 42);
    std::ostringstream out;
    write_delivery_log(out, r.delivery_log());
    CHECK(out.str() == "msg_id_hex,topic,first_relayer_peer_id,t_ms\n" + to_hex(m.id)
                           + ",BeaconBlock,A,42\n");
  }
}
