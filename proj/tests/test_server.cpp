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
                                  HashAlgorithmId hash = HashAlgorithmId::Sha256) {
  ChannelDescriptor d;
  d.channel_id = ChannelId::from_hex(cid_hex);
  d.family = 4;
  d.source_ip = from_hex("0a000001");
  d.group_ip = from_hex("e8010100");
  d.group_ip[3] = static_cast<uint8_t>(d.channel_id.bytes()[0]);
  d.udp_port = 5001;
  d.aead_id = AeadAlgorithmId::Aes128Gcm;
  d.hash_id = hash;
  d.header_secret = Bytes(32, 0x31);
  d.max_rate_kbps = rate_kbps;
  return d;
}

// Full server + real clients over the simulator.
struct Cluster {
  SimNetwork sim;
  NodeId server_node;
  ServerSession server;
  std::vector<std::unique_ptr<ClientSession>> clients;

  explicit Cluster(ServerConfig cfg = {}, uint64_t seed = 21)
      : sim(seed),
        server_node(sim.add_node(NodeCaps{}, LinkParams{2000, 0.0, 0})),
        server(sim, server_node, cfg, seed) {}

  ClientSession& add_client(ClientConfig cfg, bool multicast_capable = true, double loss = 0.0) {
    NodeId node = sim.add_node(NodeCaps{multicast_capable, true, true}, LinkParams{5000, loss, 0});
    Bytes secret = hkdf_expand(Bytes(8, static_cast<uint8_t>(node)), "conn", 32);
    server.add_client(node, secret);
    clients.push_back(std::make_unique<ClientSession>(sim, node, server_node, cfg, secret));
    clients.back()->start();
    return *clients.back();
  }

  static ClientConfig client_config(uint64_t rate_kbps) {
    ClientConfig cfg;
    cfg.limits.max_aggregate_rate_kbps = rate_kbps;
    cfg.limits.max_channels_announced = 16;
    cfg.limits.max_channels_joined = 8;
    return cfg;
  }

  void run(uint64_t ms) { sim.run_until(sim.now() + ms * 1000); }
};

}  // namespace

TEST_CASE("select_channel picks the best quality that fits") {
  Cluster c;
  auto uhd = make_descriptor("4b", 40000);
  auto hd = make_descriptor("8d", 8000);
  auto ld = make_descriptor("2c", 2000);
  c.server.add_channel(uhd);
  c.server.add_channel(hd);
  c.server.add_channel(ld);
  std::vector<const ChannelDescriptor*> candidates = {&uhd, &hd, &ld};

  ClientLimits limits;
  limits.max_aggregate_rate_kbps = 50000;
  const ChannelDescriptor* pick = c.server.select_channel(limits, 0, candidates);
  REQUIRE(pick);
  CHECK(pick->max_rate_kbps == 40000);

  limits.max_aggregate_rate_kbps = 30000;
  pick = c.server.select_channel(limits, 0, candidates);
  REQUIRE(pick);
  CHECK(pick->max_rate_kbps == 8000);

  limits.max_aggregate_rate_kbps = 1000;
  CHECK(c.server.select_channel(limits, 0, candidates) == nullptr);

  // Budget already partly used shifts the pick downwards.
  limits.max_aggregate_rate_kbps = 50000;
  pick = c.server.select_channel(limits, 45000, candidates);
  REQUIRE(pick);
  CHECK(pick->max_rate_kbps == 2000);
}

TEST_CASE("announce respects client algorithm support") {
  Cluster c;
  c.server.add_channel(make_descriptor("aa", 8000, HashAlgorithmId::Sha1));
  c.server.add_channel(make_descriptor("bb", 8000, HashAlgorithmId::Sha256));
  ClientConfig cfg = Cluster::client_config(50000);
  cfg.limits.supported_hash_ids = {static_cast<uint16_t>(HashAlgorithmId::Sha256)};
  ClientSession& client = c.add_client(cfg);
  c.run(300);
  // The sha1-only channel is not announced to this client.
  CHECK(client.channels().count(ChannelId::from_hex("aa")) == 0);
  CHECK(client.channels().count(ChannelId::from_hex("bb")) == 1);
}

TEST_CASE("steering joins each client to its best quality and serves data") {
  Cluster c;
  auto uhd = make_descriptor("4b", 40000);
  auto hd = make_descriptor("8d", 8000);
  auto ld = make_descriptor("2c", 2000);
  c.server.add_channel(uhd);
  c.server.add_channel(hd);
  c.server.add_channel(ld);
  c.server.add_content_group({"stream", {uhd.channel_id, hd.channel_id, ld.channel_id}});

  ClientSession& rich = c.add_client(Cluster::client_config(50000));
  ClientSession& mid = c.add_client(Cluster::client_config(30000));
  ClientSession& poor = c.add_client(Cluster::client_config(1000));
  c.run(300);
  c.server.start_serving("stream");
  c.run(200);

  CHECK(rich.channels().at(uhd.channel_id).machine.state() == ChannelState::JoinPending);
  CHECK(mid.channels().at(hd.channel_id).machine.state() == ChannelState::JoinPending);
  CHECK(poor.joined_count() == 0);

  Bytes payload(100000, 0x3c);
  c.server.publish_content("stream", 3, payload);
  c.run(3000);
  // Fallback for the smallest client is detected by the join timeout path;
  // publish again afterwards and let the catch-up finish.
  c.run(2000);

  CHECK(rich.streams().find(3)->content() == payload);
  CHECK(mid.streams().find(3)->content() == payload);
  REQUIRE(poor.streams().find(3));
  CHECK(poor.streams().find(3)->content() == payload);
  CHECK(poor.streams().find(3)->unicast_bytes() == payload.size());
  CHECK(rich.streams().find(3)->multicast_bytes() == payload.size());

  // Budget respected from the server's view at all times.
  const auto& view = c.server.views().at(mid.node());
  CHECK(view->serving.at("stream")->max_rate_kbps == 8000);
}

TEST_CASE("join timeout on a non-multicast network triggers unicast fallback") {
  ServerConfig cfg;
  cfg.join_timeout_us = 3000000;
  Cluster c(cfg);
  auto d = make_descriptor("0a", 8000);
  c.server.add_channel(d);
  c.server.add_content_group({"tv", {d.channel_id}});
  ClientSession& client = c.add_client(Cluster::client_config(50000), /*multicast_capable=*/false);
  c.run(300);

  c.server.start_serving("tv");
  Bytes payload(50000, 0x9d);
  c.server.publish_content("tv", 3, payload);
  c.run(2500);
  // Before the timeout there is no fallback and nothing delivered.
  CHECK(client.streams().total_delivered() == 0);
  CHECK(c.server.views().at(client.node())->fallback_contents.empty());

  c.run(1500);  // crosses join_sent + 3 s
  CHECK(c.server.views().at(client.node())->fallback_contents.count("tv") == 1);
  c.run(3000);
  REQUIRE(client.streams().find(3));
  CHECK(client.streams().find(3)->content() == payload);
  CHECK(client.streams().find(3)->unicast_bytes() == payload.size());
}

TEST_CASE("declined join steers the client to a lower quality") {
  Cluster c;
  auto uhd = make_descriptor("4b", 40000);
  auto hd = make_descriptor("8d", 8000);
  c.server.add_channel(uhd);
  c.server.add_channel(hd);
  c.server.add_content_group({"stream", {uhd.channel_id, hd.channel_id}});

  // The client advertises a large budget but then shrinks it before the
  // join instruction arrives, so the join gets declined.
  ClientConfig cfg = Cluster::client_config(50000);
  ClientSession& client = c.add_client(cfg);
  c.run(300);
  ClientLimits lower = cfg.limits;
  lower.max_aggregate_rate_kbps = 30000;
  client.update_limits(lower);
  c.run(100);
  c.server.start_serving("stream");
  c.run(500);

  // Declined 40000, re-steered to 8000.
  CHECK(client.channels().at(uhd.channel_id).machine.state() == ChannelState::DeclinedJoin);
  CHECK(client.channels().at(hd.channel_id).machine.state() == ChannelState::JoinPending);
}

TEST_CASE("loss triggers stream-level retransmission until delivery completes") {
  ServerConfig cfg;
  cfg.housekeeping_us = 20000;
  Cluster c(cfg, 77);
  auto d = make_descriptor("0a", 40000);
  c.server.add_channel(d);
  c.server.add_content_group({"tv", {d.channel_id}});
  ClientSession& lossy = c.add_client(Cluster::client_config(50000), true, 0.10);
  ClientSession& clean = c.add_client(Cluster::client_config(50000), true, 0.0);
  c.run(300);
  c.server.start_serving("tv");
  c.run(300);

  Bytes payload(300000, 0x2e);
  c.server.publish_content("tv", 3, payload);
  c.run(15000);

  REQUIRE(lossy.streams().find(3));
  CHECK(lossy.streams().find(3)->content() == payload);
  CHECK(clean.streams().find(3)->content() == payload);
  // The lossy client needed retransmitted ranges; multicast re-send needs
  // half the audience lost, so with one lossy client of two it stays unicast
  // unless both lost the same packet.
  uint64_t retx_total = 0;
  for (const auto& [cid, st] : c.server.retx_stats())
    retx_total += st.unicast_ranges + st.multicast_packets;
  CHECK(retx_total > 0);
}

TEST_CASE("widespread loss of the same packet re-sends once on the channel") {
  // Both clients share an extremely lossy uplink moment: force it by a
  // 40% loss on the server link, so most losses hit everyone at once.
  ServerConfig cfg;
  cfg.housekeeping_us = 20000;
  Cluster c(cfg, 31);
  // Raise uplink loss after construction is not possible; use client loss
  // instead with matching seeds: accept either retransmission path, but a
  // shared upstream drop must produce multicast re-sends.
  auto d = make_descriptor("0a", 40000);
  c.server.add_channel(d);
  c.server.add_content_group({"tv", {d.channel_id}});
  // Recreate the uplink-lossy topology: a dedicated cluster with uplink loss.
  SimNetwork sim(13);
  NodeId server_node = sim.add_node(NodeCaps{}, LinkParams{2000, 0.15, 0});
  ServerSession server(sim, server_node, cfg, 13);
  server.add_channel(d);
  server.add_content_group({"tv", {d.channel_id}});
  std::vector<std::unique_ptr<ClientSession>> clients;
  for (int i = 0; i < 3; ++i) {
    NodeId node = sim.add_node(NodeCaps{}, LinkParams{5000, 0.0, 0});
    Bytes secret = hkdf_expand(Bytes(8, static_cast<uint8_t>(node)), "conn", 32);
    server.add_client(node, secret);
    clients.push_back(
        std::make_unique<ClientSession>(sim, node, server_node, Cluster::client_config(50000), secret));
    clients.back()->start();
  }
  sim.run_until(300000);
  server.start_serving("tv");
  sim.run_until(600000);
  Bytes payload(200000, 0x6f);
  server.publish_content("tv", 3, payload);
  sim.run_until(30000000);

  for (auto& cl : clients) {
    REQUIRE(cl->streams().find(3));
    CHECK(cl->streams().find(3)->content() == payload);
  }
  uint64_t mc_retx = 0;
  for (const auto& [cid, st] : server.retx_stats()) mc_retx += st.multicast_packets;
  CHECK(mc_retx > 0);
}

TEST_CASE("key rotation happens on schedule and clients keep decrypting") {
  ServerConfig cfg;
  cfg.rotation_interval_packets = 32;
  cfg.unicast_only_every = 4;
  Cluster c(cfg);
  auto d = make_descriptor("0a", 40000);
  c.server.add_channel(d);
  c.server.add_content_group({"tv", {d.channel_id}});
  ClientSession& client = c.add_client(Cluster::client_config(50000));
  c.run(300);
  c.server.start_serving("tv");
  c.run(300);

  Bytes payload(300000, 0x55);  // ~280 packets => several rotations
  for (size_t off = 0; off < payload.size(); off += 50000) {
    size_t len = std::min<size_t>(50000, payload.size() - off);
    c.server.publish_content("tv", 3, ByteSpan(payload.data() + off, len));
    c.run(300);
  }
  c.run(5000);

  CHECK(c.server.publisher(d.channel_id).rotation_count() >= 4);
  REQUIRE(client.streams().find(3));
  CHECK(client.streams().find(3)->content() == payload);
  // The client accumulated the rotated secrets.
  CHECK(client.channels().at(d.channel_id).secrets.size() >= 4);
}

TEST_CASE("an ack for a channel the client never joined is a violation") {
  Cluster c;
  auto d = make_descriptor("0a", 8000);
  c.server.add_channel(d);
  ClientSession& client = c.add_client(Cluster::client_config(50000));
  c.run(300);
  // Bypass the session and inject a rogue ack on the raw endpoint.
  AckFrame rogue;
  rogue.channel_id = d.channel_id;
  rogue.ranges = {AckRange{5, 1}};
  client.endpoint().send_frame(to_any(McFrame{rogue}));
  CHECK_THROWS_AS(c.run(300), ProtocolError);
}

TEST_CASE("server view tracks client states only from frames") {
  Cluster c;
  auto d = make_descriptor("0a", 8000);
  c.server.add_channel(d);
  c.server.add_content_group({"tv", {d.channel_id}});
  ClientSession& client = c.add_client(Cluster::client_config(50000));
  c.run(300);
  c.server.start_serving("tv");
  c.run(100);
  const auto& view = c.server.views().at(client.node());
  // Join instructed but no packets yet: client reported JoinPending.
  CHECK(view->channels.at(d.channel_id).reported_state == ChannelState::JoinPending);
  Bytes payload(20000, 0x11);
  c.server.publish_content("tv", 3, payload);
  c.run(2000);
  CHECK(view->channels.at(d.channel_id).reported_state == ChannelState::Joined);
}
