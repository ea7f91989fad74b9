// Copyright 2026 The mcquic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include "mcquic/client.hpp"
#include "mcquic/server.hpp"

using namespace mcquic;

namespace {

ChannelDescriptor make_descriptor(const std::string& cid_hex, uint64_t rate_kbps,
                                  HashAlgorithmId hash = HashAlgorithmId::Sha256,
                                  uint8_t family = 4) {
  ChannelDescriptor d;
  d.channel_id = ChannelId::from_hex(cid_hex);
  d.family = family;
  if (family == 4) {
    d.source_ip = from_hex("0a000001");
    d.group_ip = from_hex("e8010101");
    d.group_ip[3] = static_cast<uint8_t>(d.channel_id.bytes()[0]);
  } else {
    d.source_ip = from_hex("20010db8000000000000000000000001");
    d.group_ip = from_hex("ff3e0000000000000000000000000001");
  }
  d.udp_port = 5001;
  d.aead_id = AeadAlgorithmId::Aes128Gcm;
  d.hash_id = hash;
  d.header_secret = Bytes(32, 0x77);
  d.max_rate_kbps = rate_kbps;
  return d;
}

// Drives a ClientSession with a hand-controlled server endpoint, so every
// frame the client sees is chosen by the test.
struct Rig {
  SimNetwork sim{17};
  NodeId server_node;
  NodeId client_node;
  UnicastEndpoint server;
  ClientSession client;
  std::vector<AnyFrame> from_client;

  explicit Rig(ClientConfig cfg = default_config())
      : server_node(sim.add_node(NodeCaps{}, LinkParams{2000, 0.0, 0})),
        client_node(sim.add_node(NodeCaps{}, LinkParams{5000, 0.0, 0})),
        server(sim, server_node, client_node, Side::Server, Bytes(32, 0x99)),
        client(sim, client_node, server_node, cfg, Bytes(32, 0x99)) {
    sim.set_handler(server_node, [this](const Datagram& d) { server.on_datagram(d); });
    server.set_payload_handler([this](ByteSpan p) {
      auto frames = parse_payload(p);
      REQUIRE(frames.has_value());
      for (auto& f : *frames) from_client.push_back(std::move(f));
    });
    TransportParams sp;
    sp.server_multicast_supported = true;
    server.start_handshake(sp);
    client.start();
    run(200);
  }

  static ClientConfig default_config() {
    ClientConfig cfg;
    cfg.limits.max_aggregate_rate_kbps = 50000;
    cfg.limits.max_channels_announced = 8;
    cfg.limits.max_channels_joined = 4;
    return cfg;
  }

  void run(uint64_t ms) { sim.run_until(sim.now() + ms * 1000); }

  void announce(const ChannelDescriptor& d) { server.send_frame(to_any(McFrame{d.to_announce()})); }
  void join(const ChannelDescriptor& d) {
    server.send_frame(to_any(McFrame{JoinFrame{d.channel_id}}));
  }

  template <typename T>
  std::vector<T> collected() {
    std::vector<T> out;
    for (const auto& f : from_client)
      if (const T* t = std::get_if<T>(&f)) out.push_back(*t);
    return out;
  }

  ChannelState state(const ChannelDescriptor& d) {
    return client.channels().at(d.channel_id).machine.state();
  }
};

}  // namespace

TEST_CASE("announce then join reaches join-pending and joins the group") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.run(50);
  REQUIRE(rig.client.channels().count(d.channel_id) == 1);
  CHECK(rig.state(d) == ChannelState::Announced);

  rig.join(d);
  rig.run(50);
  CHECK(rig.state(d) == ChannelState::JoinPending);
  SsmKey key{ip_to_string(4, d.source_ip), ip_to_string(4, d.group_ip)};
  CHECK(rig.sim.is_member(rig.client_node, key));

  auto states = rig.collected<StateFrame>();
  REQUIRE(states.size() == 1);
  CHECK(states[0].new_state == static_cast<uint64_t>(ChannelState::JoinPending));
}

TEST_CASE("join decisions enforce rate, family, algorithms and counts") {
  ClientConfig cfg = Rig::default_config();
  cfg.limits.max_aggregate_rate_kbps = 30000;
  cfg.limits.allow_ipv6 = false;
  Rig rig(cfg);

  // Rate budget 30000 admits an 8000 kbps channel but not a 40000 one.
  auto hd = make_descriptor("0b", 8000);
  rig.announce(hd);
  rig.run(50);
  CHECK(rig.client.decide_join(hd).accept);

  auto uhd = make_descriptor("0c", 40000);
  auto decision = rig.client.decide_join(uhd);
  CHECK_FALSE(decision.accept);
  CHECK(decision.reason == ReasonCode::RateExceeded);

  auto v6 = make_descriptor("0d", 1000, HashAlgorithmId::Sha256, 6);
  decision = rig.client.decide_join(v6);
  CHECK_FALSE(decision.accept);
  CHECK(decision.reason == ReasonCode::FamilyUnsupported);

  auto sha1ch = make_descriptor("0e", 1000, HashAlgorithmId::Sha1);
  decision = rig.client.decide_join(sha1ch);
  CHECK_FALSE(decision.accept);
  CHECK(decision.reason == ReasonCode::AlgorithmUnsupported);
}

TEST_CASE("declined join is reported with its reason") {
  ClientConfig cfg = Rig::default_config();
  cfg.limits.max_aggregate_rate_kbps = 30000;
  Rig rig(cfg);
  auto d = make_descriptor("0c", 40000);
  rig.announce(d);
  rig.join(d);
  rig.run(50);
  CHECK(rig.state(d) == ChannelState::DeclinedJoin);
  auto states = rig.collected<StateFrame>();
  REQUIRE(states.size() == 1);
  CHECK(states[0].new_state == static_cast<uint64_t>(ChannelState::DeclinedJoin));
  CHECK(states[0].reason_code == static_cast<uint64_t>(ReasonCode::RateExceeded));
}

TEST_CASE("full multicast pipeline verifies, delivers, acks and joins") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(50);  // membership latency passes

  Bytes payload(5000, 0xab);
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));
  for (const Bytes& dg : out.datagrams) rig.sim.send_multicast(rig.server_node, pub.group(), dg);
  rig.run(100);

  CHECK(rig.state(d) == ChannelState::Joined);
  const StreamBuffer* sb = rig.client.streams().find(3);
  REQUIRE(sb);
  CHECK(sb->content() == payload);
  CHECK(sb->multicast_bytes() == payload.size());
  CHECK(rig.client.drops().total() == 0);

  auto acks = rig.collected<AckFrame>();
  REQUIRE_FALSE(acks.empty());
  uint64_t acked = 0;
  for (const auto& a : acks)
    for (const auto& r : a.ranges) acked += r.count;
  CHECK(acked == out.datagrams.size());

  auto states = rig.collected<StateFrame>();
  REQUIRE(states.size() == 2);
  CHECK(states[1].new_state == static_cast<uint64_t>(ChannelState::Joined));
}

TEST_CASE("acks bundle into ranges per the received pattern") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(50);

  Bytes payload(1076 * 9, 0x5e);
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));
  REQUIRE(out.datagrams.size() >= 9);
  // Deliver pns {0,1,2,3} and {7,8}; withhold {4,5,6}.
  for (size_t i : {0, 1, 2, 3, 7, 8})
    rig.sim.send_multicast(rig.server_node, pub.group(), out.datagrams[i]);
  rig.run(100);

  auto acks = rig.collected<AckFrame>();
  REQUIRE(acks.size() == 1);  // bundled into one frame
  REQUIRE(acks[0].ranges.size() == 2);
  CHECK(acks[0].ranges[0].largest == 8);
  CHECK(acks[0].ranges[0].count == 2);
  CHECK(acks[0].ranges[1].largest == 3);
  CHECK(acks[0].ranges[1].count == 4);
}

TEST_CASE("data arriving before its digest is buffered then delivered") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(50);

  Bytes payload(2000, 0x17);
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  // Datagrams first: everything buffers as unknown.
  for (const Bytes& dg : out.datagrams) rig.sim.send_multicast(rig.server_node, pub.group(), dg);
  rig.run(50);
  CHECK(rig.client.streams().total_delivered() == 0);
  // Root digests arrive: the buffer drains.
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));
  rig.run(100);
  const StreamBuffer* sb = rig.client.streams().find(3);
  REQUIRE(sb);
  CHECK(sb->content() == payload);
}

TEST_CASE("packets without a key wait for the key frame") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  rig.run(50);  // note: no MC_KEY sent yet

  Bytes payload(2000, 0x29);
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));
  for (const Bytes& dg : out.datagrams) rig.sim.send_multicast(rig.server_node, pub.group(), dg);
  rig.run(50);
  CHECK(rig.client.streams().total_delivered() == 0);

  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(100);
  const StreamBuffer* sb = rig.client.streams().find(3);
  REQUIRE(sb);
  CHECK(sb->content() == payload);
}

TEST_CASE("spoofed datagrams are dropped and counted, never delivered") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(50);

  Bytes payload(1000, 0x61);
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));

  // A spoofed datagram with a believable header but fabricated body: its
  // digest is unknown, so it parks in the buffer and never dispatches.
  Bytes spoof = out.datagrams[0];
  for (size_t i = 8; i < spoof.size(); ++i) spoof[i] = static_cast<uint8_t>(i * 31);
  rig.sim.send_multicast(rig.server_node, pub.group(), spoof);
  rig.run(50);
  CHECK(rig.client.streams().total_delivered() == 0);

  // A corrupted copy of a real packet hits a digest mismatch.
  Bytes flipped = out.datagrams[0];
  flipped.back() ^= 0x01;
  rig.sim.send_multicast(rig.server_node, pub.group(), flipped);
  rig.run(50);
  CHECK(rig.client.drops().mismatch >= 1);
  CHECK(rig.client.streams().total_delivered() == 0);

  // The authentic packets still deliver fine afterwards.
  for (const Bytes& dg : out.datagrams) rig.sim.send_multicast(rig.server_node, pub.group(), dg);
  rig.run(100);
  CHECK(rig.client.streams().find(3)->content() == payload);
}

TEST_CASE("lowering limits sheds the highest-rate channels first") {
  Rig rig;
  auto big = make_descriptor("0b", 20000);
  auto small = make_descriptor("0c", 5000);
  for (const auto& d : {big, small}) {
    rig.announce(d);
    rig.join(d);
  }
  rig.run(50);
  CHECK(rig.state(big) == ChannelState::JoinPending);
  CHECK(rig.state(small) == ChannelState::JoinPending);
  CHECK(rig.client.joined_rate_kbps() == 25000);

  ClientLimits lower = Rig::default_config().limits;
  lower.max_aggregate_rate_kbps = 10000;
  rig.client.update_limits(lower);
  rig.run(50);
  CHECK(rig.state(big) == ChannelState::Left);
  CHECK(rig.state(small) == ChannelState::JoinPending);
  CHECK(rig.client.joined_rate_kbps() == 5000);

  auto limit_frames = rig.collected<LimitsFrame>();
  REQUIRE(limit_frames.size() == 1);
  CHECK(limit_frames[0].limits.max_aggregate_rate_kbps == 10000);

  // Identical update: frame still sent, nothing leaves.
  rig.client.update_limits(lower);
  rig.run(50);
  CHECK(rig.collected<LimitsFrame>().size() == 2);
  CHECK(rig.state(small) == ChannelState::JoinPending);
}

TEST_CASE("raising limits causes no leaves") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.join(d);
  rig.run(50);
  ClientLimits higher = Rig::default_config().limits;
  higher.max_aggregate_rate_kbps = 60000;
  rig.client.update_limits(higher);
  rig.run(50);
  CHECK(rig.state(d) == ChannelState::JoinPending);
}

TEST_CASE("flow policy leave abandons the channel on overflow") {
  ClientConfig cfg = Rig::default_config();
  cfg.flow_policy = ClientConfig::FlowPolicy::Leave;
  cfg.initial_max_data = 1500;
  cfg.max_data_increment = 1500;
  Rig rig(cfg);
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(50);

  Bytes payload(6000, 0x44);  // exceeds the 1500-byte window
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));
  for (const Bytes& dg : out.datagrams) rig.sim.send_multicast(rig.server_node, pub.group(), dg);
  rig.run(100);

  CHECK(rig.state(d) == ChannelState::Left);
  auto states = rig.collected<StateFrame>();
  REQUIRE_FALSE(states.empty());
  CHECK(states.back().new_state == static_cast<uint64_t>(ChannelState::Left));
  CHECK(states.back().reason_code == static_cast<uint64_t>(ReasonCode::FlowControl));
  CHECK(rig.client.drops().flow_control >= 1);
}

TEST_CASE("flow policy extend grows the window and notifies the server") {
  ClientConfig cfg = Rig::default_config();
  cfg.initial_max_data = 1500;
  cfg.max_data_increment = 1500;
  Rig rig(cfg);
  auto d = make_descriptor("0a", 8000);
  ServerConfig scfg;
  ChannelPublisher pub(d, scfg, 5);
  rig.announce(d);
  rig.join(d);
  const ChannelSecret& s = pub.active_secret();
  rig.server.send_frame(to_any(McFrame{KeyFrame{d.channel_id, s.from_packet_number, s.secret}}));
  rig.run(50);

  Bytes payload(6000, 0x45);
  uint64_t off = pub.append_stream(3, payload);
  auto out = pub.publish_ranges({ChannelPublisher::StreamRange{3, off, payload.size()}});
  for (const McFrame& f : out.unicast_control) rig.server.send_frame(to_any(f));
  for (const Bytes& dg : out.datagrams) rig.sim.send_multicast(rig.server_node, pub.group(), dg);
  rig.run(100);

  CHECK(rig.client.streams().find(3)->content() == payload);  // no loss
  CHECK_FALSE(rig.collected<MaxDataFrame>().empty());
}

TEST_CASE("retire drops channel state entirely") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.run(50);
  rig.server.send_frame(to_any(McFrame{RetireFrame{d.channel_id}}));
  rig.run(50);
  CHECK(rig.client.channels().count(d.channel_id) == 0);
  auto states = rig.collected<StateFrame>();
  REQUIRE(states.size() == 1);
  CHECK(states[0].new_state == static_cast<uint64_t>(ChannelState::Retired));
}

TEST_CASE("retiring a joined channel is a protocol violation") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.join(d);
  rig.run(50);
  rig.server.send_frame(to_any(McFrame{RetireFrame{d.channel_id}}));
  CHECK_THROWS_AS(rig.run(50), ProtocolError);
}

TEST_CASE("server leave instruction moves the channel to left") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.join(d);
  rig.run(50);
  rig.server.send_frame(
      to_any(McFrame{LeaveFrame{d.channel_id, static_cast<uint64_t>(ReasonCode::HighLoss)}}));
  rig.run(50);
  CHECK(rig.state(d) == ChannelState::Left);
  SsmKey key{ip_to_string(4, d.source_ip), ip_to_string(4, d.group_ip)};
  CHECK_FALSE(rig.sim.is_member(rig.client_node, key));
}

TEST_CASE("frames for unknown channels are protocol violations") {
  Rig rig;
  rig.server.send_frame(to_any(McFrame{JoinFrame{ChannelId::from_hex("ff")}}));
  CHECK_THROWS_AS(rig.run(50), ProtocolError);
}

TEST_CASE("changing an announced descriptor is rejected") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.run(50);
  auto changed = d;
  changed.max_rate_kbps = 9000;
  rig.announce(changed);
  CHECK_THROWS_AS(rig.run(50), ProtocolError);
}

TEST_CASE("duplicate announce of the same descriptor is idempotent") {
  Rig rig;
  auto d = make_descriptor("0a", 8000);
  rig.announce(d);
  rig.announce(d);
  rig.run(50);
  CHECK(rig.client.channels().count(d.channel_id) == 1);
  CHECK(rig.state(d) == ChannelState::Announced);
}
