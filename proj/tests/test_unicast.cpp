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

#include "mcquic/unicast.hpp"

using namespace mcquic;

namespace {

struct Pair {
  SimNetwork sim;
  NodeId a, b;
  UnicastEndpoint client;
  UnicastEndpoint server;
  std::vector<AnyFrame> client_rx, server_rx;

  explicit Pair(double loss = 0.0, uint64_t seed = 3)
      : sim(seed),
        a(sim.add_node(NodeCaps{}, LinkParams{2000, 0.0, 0})),
        b(sim.add_node(NodeCaps{}, LinkParams{5000, loss, 0})),
        client(sim, b, a, Side::Client, from_hex("aaaabbbbccccddddeeeeffff000011112222333344445555")),
        server(sim, a, b, Side::Server, from_hex("aaaabbbbccccddddeeeeffff000011112222333344445555")) {
    sim.set_handler(a, [this](const Datagram& d) { server.on_datagram(d); });
    sim.set_handler(b, [this](const Datagram& d) { client.on_datagram(d); });
    client.set_payload_handler([this](ByteSpan p) { collect(p, client_rx); });
    server.set_payload_handler([this](ByteSpan p) { collect(p, server_rx); });
  }

  static void collect(ByteSpan payload, std::vector<AnyFrame>& out) {
    auto frames = parse_payload(payload);
    REQUIRE(frames.has_value());
    for (auto& f : *frames) out.push_back(std::move(f));
  }

  void handshake() {
    TransportParams cp;
    cp.client_params_present = true;
    cp.client_limits.max_aggregate_rate_kbps = 1000;
    cp.client_limits.max_channels_announced = 4;
    cp.client_limits.max_channels_joined = 2;
    client.start_handshake(cp);
    TransportParams sp;
    sp.server_multicast_supported = true;
    server.start_handshake(sp);
    sim.run_until(sim.now() + 1000000);
  }
};

}  // namespace

TEST_CASE("two-message handshake exchanges transport parameters") {
  Pair p;
  p.handshake();
  CHECK(p.client.established());
  CHECK(p.server.established());
  CHECK(p.client.peer_params().server_multicast_supported);
  CHECK(p.server.peer_params().client_params_present);
  CHECK(p.server.peer_params().client_limits.max_aggregate_rate_kbps == 1000);
}

TEST_CASE("frames flow both ways after the handshake") {
  Pair p;
  p.handshake();
  p.server.send_frame(JoinFrame{ChannelId::from_hex("0a")});
  p.client.send_frame(StateFrame{ChannelId::from_hex("0a"),
                                 static_cast<uint64_t>(ChannelState::JoinPending), 0});
  p.sim.run_until(p.sim.now() + 1000000);
  REQUIRE(p.client_rx.size() == 1);
  REQUIRE(p.server_rx.size() == 1);
  CHECK(std::holds_alternative<JoinFrame>(p.client_rx[0]));
  CHECK(std::holds_alternative<StateFrame>(p.server_rx[0]));
}

TEST_CASE("frames queued before the handshake flush afterwards") {
  Pair p;
  TransportParams cp;
  cp.client_params_present = true;
  p.client.start_handshake(cp);
  p.client.send_frame(MaxDataFrame{123456});
  TransportParams sp;
  sp.server_multicast_supported = true;
  p.server.start_handshake(sp);
  p.sim.run_until(1000000);
  REQUIRE(p.server_rx.size() == 1);
  CHECK(std::get<MaxDataFrame>(p.server_rx[0]).max_data == 123456);
}

TEST_CASE("delivery is reliable and in order under heavy loss") {
  Pair p(0.3, 99);
  p.handshake();
  REQUIRE(p.client.established());
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    StreamFrame f;
    f.stream_id = 3;
    f.offset = static_cast<uint64_t>(i) * 100;
    f.data = Bytes(100, static_cast<uint8_t>(i));
    p.server.send_frame(f);
  }
  p.sim.run_until(p.sim.now() + 60000000);
  REQUIRE(p.client_rx.size() == n);
  for (int i = 0; i < n; ++i) {
    const auto* sf = std::get_if<StreamFrame>(&p.client_rx[i]);
    REQUIRE(sf);
    CHECK(sf->offset == static_cast<uint64_t>(i) * 100);  // in-order delivery
  }
  CHECK(p.server.retransmits() > 0);
}

TEST_CASE("handshake retries survive loss") {
  Pair p(0.6, 1234);
  p.handshake();
  p.sim.run_until(p.sim.now() + 30000000);
  CHECK(p.client.established());
  CHECK(p.server.established());
}

TEST_CASE("payloads are encrypted on the wire") {
  SimNetwork sim(5);
  NodeId a = sim.add_node(NodeCaps{}, LinkParams{1000, 0.0, 0});
  NodeId b = sim.add_node(NodeCaps{}, LinkParams{1000, 0.0, 0});
  UnicastEndpoint client(sim, b, a, Side::Client, Bytes(32, 0x42));
  UnicastEndpoint server(sim, a, b, Side::Server, Bytes(32, 0x42));
  std::vector<Bytes> wire;
  sim.set_handler(a, [&](const Datagram& d) {
    wire.push_back(d.bytes);
    server.on_datagram(d);
  });
  sim.set_handler(b, [&](const Datagram& d) { client.on_datagram(d); });
  TransportParams cp;
  cp.client_params_present = true;
  client.start_handshake(cp);
  TransportParams sp;
  server.start_handshake(sp);
  sim.run_all();

  Bytes marker(64, 0x5c);
  StreamFrame f;
  f.stream_id = 1;
  f.data = marker;
  client.send_frame(f);
  sim.run_all();

  bool found_plaintext = false;
  for (const Bytes& dg : wire) {
    auto it = std::search(dg.begin(), dg.end(), marker.begin(), marker.end());
    if (it != dg.end()) found_plaintext = true;
  }
  CHECK_FALSE(found_plaintext);
}

TEST_CASE("wrong connection secret cannot read or forge") {
  SimNetwork sim(6);
  NodeId a = sim.add_node(NodeCaps{}, LinkParams{1000, 0.0, 0});
  NodeId b = sim.add_node(NodeCaps{}, LinkParams{1000, 0.0, 0});
  UnicastEndpoint client(sim, b, a, Side::Client, Bytes(32, 0x42));
  UnicastEndpoint server(sim, a, b, Side::Server, Bytes(32, 0x43));  // mismatched
  size_t delivered = 0;
  server.set_payload_handler([&](ByteSpan) { ++delivered; });
  sim.set_handler(a, [&](const Datagram& d) { server.on_datagram(d); });
  sim.set_handler(b, [&](const Datagram& d) { client.on_datagram(d); });
  TransportParams cp;
  cp.client_params_present = true;
  client.start_handshake(cp);
  TransportParams sp;
  server.start_handshake(sp);
  sim.run_until(300000);
  client.send_frame(MaxDataFrame{1});
  sim.run_until(400000);  // bounded: retransmissions would run forever
  CHECK(delivered == 0);
}
