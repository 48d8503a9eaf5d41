// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/crawler/transport.hpp"

namespace gossipwatch::crawler {

const char *to_string(DialOutcome outcome) {
  switch (outcome) {
    case DialOutcome::Connected: return "Connected";
    case DialOutcome::Refused: return "Refused";
    case DialOutcome::Timeout: return "Timeout";
    case DialOutcome::HandshakeFailed: return "HandshakeFailed";
  }
  return "Timeout";
}

StatusMessage genesis_status(Bytes network_id) {
  StatusMessage s;
  s.network_id = std::move(network_id);
  return s;
}

namespace {

[[noreturn]] void unsupported() {
  throw Unsupported("live networking is not available in this build; use the sim transport");
}

}  // namespace

std::optional<std::vector<discovery::Nodes>> LiveTransport::find_node(
    const identity::NodeRecord &, discovery::FindNode, TimeMs) {
  unsupported();
}
void LiveTransport::bind(const Endpoint &, HostEvents &) { unsupported(); }
DialReply LiveTransport::dial(const identity::NodeRecord &, TimeMs) { unsupported(); }
StatusReply LiveTransport::exchange_status(SessionId, const StatusMessage &,
                                           const std::string &, TimeMs) {
  unsupported();
}
PingReply LiveTransport::ping(SessionId, TimeMs) { unsupported(); }
void LiveTransport::close(SessionId) { unsupported(); }
void LiveTransport::send_control(SessionId, const gossip::ControlAction &) { unsupported(); }
void LiveTransport::send_iwant(SessionId, const std::vector<gossip::MessageId> &) {
  unsupported();
}
void LiveTransport::send_message(SessionId, const gossip::GossipMessage &) { unsupported(); }

}  // namespace gossipwatch::crawler
