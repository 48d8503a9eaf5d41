// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/simnet/truth.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gossipwatch::simnet {

using nlohmann::json;

std::vector<std::string> GroundTruth::membership() const {
  std::vector<std::string> ids;
  ids.reserve(peers.size());
  for (const auto &p : peers) {
    ids.push_back(p.node_id);
  }
  return ids;
}

std::string serialize_truth(const GroundTruth &t) {
  json peers = json::array();
  for (const auto &p : t.peers) {
    peers.push_back({{"node_id", p.node_id},
                     {"peer_id", p.peer_id},
                     {"ip", p.ip},
                     {"tcp_port", p.tcp_port},
                     {"user_agent", p.user_agent},
                     {"strategy", p.strategy},
                     {"link_delay_ms", p.link_delay_ms},
                     {"accepts_inbound", p.accepts_inbound},
                     {"network_id", p.network_id}});
  }
  json links = json::array();
  for (const auto &l : t.links) {
    links.push_back(json::array({l.a, l.b, l.delay_ms}));
  }
  json publishes = json::array();
  for (const auto &p : t.publishes) {
    publishes.push_back(
        {{"msg_id", p.msg_id}, {"origin", p.origin}, {"topic", p.topic}, {"t_ms", p.t_ms}});
  }
  json sessions = json::array();
  for (const auto &s : t.sessions) {
    sessions.push_back({{"peer", s.peer},
                        {"start_ms", s.start_ms},
                        {"end_ms", s.end_ms ? json(*s.end_ms) : json(nullptr)},
                        {"inbound", s.inbound}});
  }
  json dials = json::array();
  for (const auto &d : t.dials) {
    dials.push_back({{"peer", d.peer}, {"t_ms", d.t_ms}, {"decision", d.decision}});
  }
  // Column arrays keep large delivery logs compact.
  json msg = json::array(), peer = json::array(), tms = json::array(),
       iwant = json::array();
  for (const auto &d : t.deliveries) {
    msg.push_back(d.msg);
    peer.push_back(d.peer);
    tms.push_back(d.t_ms);
    iwant.push_back(d.via_iwant ? 1 : 0);
  }
  json doc = {{"seed", t.seed},
              {"start_ms", t.start_ms},
              {"end_ms", t.end_ms},
              {"crawler_node_id", t.crawler_node_id},
              {"crawler_peer_id", t.crawler_peer_id},
              {"crawler_topics", t.crawler_topics},
              {"membership", t.membership()},
              {"peers", std::move(peers)},
              {"links", std::move(links)},
              {"publishes", std::move(publishes)},
              {"sessions", std::move(sessions)},
              {"dials", std::move(dials)},
              {"deliveries",
               {{"msg", std::move(msg)},
                {"peer", std::move(peer)},
                {"t_ms", std::move(tms)},
                {"via_iwant", std::move(iwant)}}}};
  return doc.dump(1) + "\n";
}

GroundTruth parse_truth(std::string_view text) {
  GroundTruth t;
  try {
    auto j = json::parse(text.begin(), text.end());
    t.seed = j.at("seed").get<std::uint64_t>();
    t.start_ms = j.at("start_ms").get<TimeMs>();
    t.end_ms = j.at("end_ms").get<TimeMs>();
    t.crawler_node_id = j.at("crawler_node_id").get<std::string>();
    t.crawler_peer_id = j.at("crawler_peer_id").get<std::string>();
    t.crawler_topics = j.at("crawler_topics").get<std::vector<std::string>>();
    for (const auto &p : j.at("peers")) {
      GroundTruth::Peer x;
      x.node_id = p.at("node_id").get<std::string>();
      x.peer_id = p.at("peer_id").get<std::string>();
      x.ip = p.at("ip").get<std::string>();
      x.tcp_port = p.at("tcp_port").get<std::uint16_t>();
      x.user_agent = p.at("user_agent").get<std::string>();
      x.strategy = p.at("strategy").get<std::string>();
      x.link_delay_ms = p.at("link_delay_ms").get<TimeMs>();
      x.accepts_inbound = p.at("accepts_inbound").get<bool>();
      x.network_id = p.at("network_id").get<std::string>();
      t.peers.push_back(std::move(x));
    }
    for (const auto &l : j.at("links")) {
      t.links.push_back({l.at(0).get<std::uint32_t>(), l.at(1).get<std::uint32_t>(),
                         l.at(2).get<TimeMs>()});
    }
    for (const auto &p : j.at("publishes")) {
      t.publishes.push_back({p.at("msg_id").get<std::string>(),
                             p.at("origin").get<std::uint32_t>(),
                             p.at("topic").get<std::string>(), p.at("t_ms").get<TimeMs>()});
    }
    for (const auto &s : j.at("sessions")) {
      GroundTruth::Session x;
      x.peer = s.at("peer").get<std::uint32_t>();
      x.start_ms = s.at("start_ms").get<TimeMs>();
      if (!s.at("end_ms").is_null()) {
        x.end_ms = s.at("end_ms").get<TimeMs>();
      }
      x.inbound = s.at("inbound").get<bool>();
      t.sessions.push_back(x);
    }
    for (const auto &d : j.at("dials")) {
      t.dials.push_back({d.at("peer").get<std::uint32_t>(), d.at("t_ms").get<TimeMs>(),
                         d.at("decision").get<std::string>()});
    }
    const auto &d = j.at("deliveries");
    const auto &msg = d.at("msg");
    const auto &peer = d.at("peer");
    const auto &tms = d.at("t_ms");
    const auto &iwant = d.at("via_iwant");
    if (peer.size() != msg.size() || tms.size() != msg.size() || iwant.size() != msg.size()) {
      throw Error("ground truth: delivery columns differ in length");
    }
    for (std::size_t i = 0; i < msg.size(); ++i) {
      t.deliveries.push_back({msg[i].get<std::uint32_t>(), peer[i].get<std::uint32_t>(),
                              tms[i].get<TimeMs>(), iwant[i].get<int>() != 0});
    }
  } catch (const json::exception &e) {
    throw Error(std::string("ground truth: ") + e.what());
  }
  for (const auto &d : t.deliveries) {
    if (d.msg >= t.publishes.size() || d.peer >= t.peers.size()) {
      throw Error("ground truth: delivery refers to an unknown message or peer");
    }
  }
  for (const auto &s : t.sessions) {
    if (s.peer >= t.peers.size()) {
      throw Error("ground truth: session refers to an unknown peer");
    }
  }
  return t;
}

void write_truth(const GroundTruth &truth, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  out << serialize_truth(truth);
  if (!out.flush()) {
    throw Error("write failed: " + path.string());
  }
}

GroundTruth read_truth(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_truth(buf.str());
}

}  // namespace gossipwatch::simnet
