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

#pragma once

#include "mcquic/report.hpp"
#include "mcquic/scenario.hpp"

namespace mcquic {

// Wires one scenario into the simulator: server, clients, workload timers,
// attacker; runs it to the configured horizon; verifies end-state
// invariants and produces the run report.
class SimulationHarness {
 public:
  explicit SimulationHarness(Scenario sc, std::ostream* trace_os = nullptr)
      : sc_(std::move(sc)), trace_(trace_os), sim_(sc_.seed, &trace_) {
    build();
  }

  void run() {
    schedule_all();
    try {
      sim_.run_until(sc_.duration_ms * 1000);
    } catch (const ProtocolError& e) {
      violations_.push_back(std::string("protocol error: ") + e.what());
    } catch (const InvariantViolation& e) {
      violations_.push_back(std::string("invariant violation: ") + e.what());
    }
    finalize();
  }

  const RunReport& report() const { return report_; }
  SimNetwork& sim() { return sim_; }
  ServerSession& server() { return *server_; }
  std::vector<std::unique_ptr<ClientSession>>& clients() { return clients_; }
  ClientSession& client(size_t i) { return *clients_.at(i); }
  const Scenario& scenario() const { return sc_; }
  NodeId server_node() const { return server_node_; }

  // Published bytes per content group and stream.
  const std::map<std::string, std::map<uint64_t, Bytes>>& published() const { return published_; }

  // Multicast datagrams observed on the wire (captured at send time).
  const std::vector<std::pair<SimTime, Bytes>>& multicast_captures() const { return captures_; }
  void enable_multicast_capture() {
    sim_.set_multicast_capture(
        [this](const Bytes& b) { captures_.emplace_back(sim_.now(), b); });
  }

 private:
  void build() {
    server_node_ = sim_.add_node(NodeCaps{true, true, true}, sc_.uplink);
    sim_.membership_latency_us = sc_.membership_latency_us;
    server_ = std::make_unique<ServerSession>(sim_, server_node_, sc_.server, sc_.seed);

    for (const auto& c : sc_.channels) server_->add_channel(c.to_descriptor(sc_.seed));
    for (const auto& g : sc_.contents) {
      ServerSession::ContentGroup cg;
      cg.name = g.name;
      for (const auto& id : g.channel_ids) cg.channels.push_back(ChannelId::from_hex(id));
      server_->add_content_group(cg);
    }

    for (const auto& g : sc_.client_groups) {
      for (size_t i = 0; i < g.count; ++i) {
        NodeCaps caps;
        caps.multicast_capable = g.multicast_capable;
        NodeId node = sim_.add_node(caps, g.link);
        Bytes secret = connection_secret(node);
        server_->add_client(node, secret);
        ClientConfig cc = g.client;
        auto client = std::make_unique<ClientSession>(sim_, node, server_node_, cc, secret);
        client->start();
        if (g.disconnect_unicast_at_ms) {
          SimTime at = *g.disconnect_unicast_at_ms * 1000;
          sim_.schedule(at, [this, node]() { sim_.sever_unicast(node); });
        }
        clients_.push_back(std::move(client));
      }
    }

    if (sc_.attacker) {
      NodeId atk_node = sim_.add_node(NodeCaps{false, true, true}, LinkParams{0, 0.0, 0});
      AttackerConfig cfg = *sc_.attacker;
      const ChannelDescriptor d =
          find_channel(sc_.attacker_target_channel).to_descriptor(sc_.seed);
      cfg.target = SsmKey{ip_to_string(d.family, d.source_ip), ip_to_string(d.family, d.group_ip)};
      cfg.max_len = sc_.server.max_datagram;
      attacker_ = std::make_unique<Attacker>(sim_, cfg, atk_node);
    }
  }

  const ScenarioChannel& find_channel(const std::string& id_hex) const {
    for (const auto& c : sc_.channels)
      if (c.id_hex == id_hex) return c;
    throw ConfigError("unknown channel " + id_hex);
  }

  Bytes connection_secret(NodeId node) const {
    Bytes seed_bytes(8);
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<uint8_t>(sc_.seed >> (8 * i));
    return hkdf_expand(seed_bytes, "conn secret " + std::to_string(node), 32);
  }

  // Deterministic workload payload, a pure function of (seed, content, stream).
  Bytes make_payload(const std::string& content, uint64_t stream_id, uint64_t bytes) const {
    uint64_t h = 1469598103934665603ull;
    for (char c : content) h = (h ^ static_cast<uint8_t>(c)) * 1099511628211ull;
    std::mt19937_64 rng(sc_.seed ^ h ^ (stream_id * 0x9e3779b97f4a7c15ull));
    Bytes out(bytes);
    for (auto& b : out) b = static_cast<uint8_t>(rng());
    return out;
  }

  void schedule_all() {
    std::set<std::string> served;
    for (const auto& w : sc_.workloads) {
      // Join instructions go out ahead of the data.
      if (!served.count(w.content)) {
        served.insert(w.content);
        SimTime serve_at =
            w.serve_ms ? *w.serve_ms * 1000
                       : (w.start_ms > 300 ? (w.start_ms - 300) * 1000 : w.start_ms * 500);
        std::string content = w.content;
        sim_.schedule(serve_at, [this, content]() { server_->start_serving(content); });
      }
      Bytes payload = make_payload(w.content, w.stream_id, w.bytes);
      published_[w.content][w.stream_id] = payload;
      uint64_t nseg = (w.bytes + w.segment_bytes - 1) / w.segment_bytes;
      for (uint64_t k = 0; k < nseg; ++k) {
        uint64_t off = k * w.segment_bytes;
        uint64_t len = std::min<uint64_t>(w.segment_bytes, w.bytes - off);
        SimTime at = (w.start_ms + k * w.interval_ms) * 1000;
        std::string content = w.content;
        uint64_t stream = w.stream_id;
        sim_.schedule(at, [this, content, stream, off, len]() {
          const Bytes& p = published_.at(content).at(stream);
          server_->publish_content(content, stream, ByteSpan(p.data() + off, len));
        });
      }
    }
    for (const auto& u : sc_.limit_updates) {
      if (u.client_index >= clients_.size()) throw ConfigError("limit update client out of range");
      sim_.schedule(u.at_ms * 1000, [this, u]() { clients_[u.client_index]->update_limits(u.limits); });
    }
    if (attacker_) attacker_->start();
  }

  void finalize() {
    // Final link counters into the trace, then freeze the hash.
    for (const auto& [name, s] : sim_.link_stats()) {
      trace_.record(sim_.now(), "linkstats",
                    {{"link", name},
                     {"sent", std::to_string(s.sent_pkts)},
                     {"sentb", std::to_string(s.sent_bytes)},
                     {"delivered", std::to_string(s.delivered_pkts)},
                     {"deliveredb", std::to_string(s.delivered_bytes)},
                     {"dropped", std::to_string(s.dropped_pkts)},
                     {"droppedb", std::to_string(s.dropped_bytes)}});
      if (s.sent_pkts != s.delivered_pkts + s.dropped_pkts)
        violations_.push_back("link conservation failed on " + name);
    }

    report_.scenario = sc_.name;
    report_.seed = sc_.seed;
    report_.duration_us = sim_.now();
    report_.events = sim_.events_processed();

    const OriginStats& so = sim_.origin_stats(server_node_);
    report_.server_unicast_bytes = so.unicast_bytes;
    report_.server_multicast_bytes = so.multicast_bytes;
    report_.server_egress_bytes = so.unicast_bytes + so.multicast_bytes;

    for (const auto& [cid, pub] : server_->publishers()) {
      ChannelReport cr;
      cr.id = cid.hex();
      auto eit = server_->egress().find(cid);
      if (eit != server_->egress().end()) {
        cr.egress_packets = eit->second.packets;
        cr.egress_bytes = eit->second.bytes;
      }
      auto rit = server_->retx_stats().find(cid);
      if (rit != server_->retx_stats().end()) {
        cr.retx_multicast_packets = rit->second.multicast_packets;
        cr.retx_unicast_ranges = rit->second.unicast_ranges;
        cr.retx_unicast_bytes = rit->second.unicast_bytes;
      }
      cr.rotations = pub->rotation_count();
      cr.packets_published = pub->next_pn();
      report_.channels.push_back(std::move(cr));
    }

    uint64_t equivalent = 0;
    for (auto& c : clients_) {
      ClientReport cr;
      cr.node = c->node();
      cr.multicast_bytes = c->streams().total_multicast_bytes();
      cr.unicast_bytes = c->streams().total_unicast_bytes();
      cr.delivered_bytes = c->streams().total_delivered();
      if (cr.multicast_bytes + cr.unicast_bytes != cr.delivered_bytes)
        violations_.push_back("client " + std::to_string(cr.node) +
                              ": delivered bytes do not partition by origin");
      const ClientDropCounters& d = c->drops();
      cr.drops["mismatch"] = d.mismatch;
      cr.drops["decrypt_fail"] = d.decrypt_fail;
      cr.drops["duplicate"] = d.duplicate;
      cr.drops["expired"] = d.expired;
      cr.drops["malformed"] = d.malformed;
      cr.drops["unknown_channel"] = d.unknown_channel;
      cr.drops["inactive"] = d.inactive;
      cr.drops["flow_control"] = d.flow_control;
      cr.attacker_bytes = c->attacker_bytes_delivered();
      for (const auto& [cid, ctx] : c->channels())
        cr.channel_states[cid.hex()] = to_string(ctx.machine.state());

      const auto& view = server_->views().at(c->node());
      cr.fallback = !view->fallback_contents.empty();
      for (const auto& [cid, cv] : view->channels)
        if (cv.fallback) cr.fallback = true;

      // What full-unicast delivery of this client's content would have cost.
      std::set<std::string> contents_served;
      for (const auto& [content, desc] : view->serving) contents_served.insert(content);
      for (const auto& content : view->fallback_contents) contents_served.insert(content);
      for (const auto& content : contents_served) {
        auto sit = view->serving.find(content);
        ChannelId src = sit != view->serving.end()
                            ? sit->second->channel_id
                            : ChannelId::from_hex(lowest_rate_channel(content));
        auto eit = server_->egress().find(src);
        if (eit != server_->egress().end()) equivalent += eit->second.bytes;
      }

      check_completeness(*c, *view, cr);
      report_.clients.push_back(std::move(cr));
    }

    report_.unicast_equivalent_bytes = equivalent;
    report_.savings_ratio =
        equivalent == 0 ? 0.0
                        : 1.0 - static_cast<double>(report_.server_egress_bytes) /
                                    static_cast<double>(equivalent);

    report_.trace_lines = trace_.lines();
    report_.trace_hash = trace_.hash_hex();
    report_.violations = violations_;
  }

  std::string lowest_rate_channel(const std::string& content) const {
    const ScenarioContent* g = nullptr;
    for (const auto& c : sc_.contents)
      if (c.name == content) g = &c;
    if (!g) throw ConfigError("unknown content " + content);
    std::string best;
    uint64_t best_rate = UINT64_MAX;
    for (const auto& id : g->channel_ids) {
      const ScenarioChannel& c = find_channel(id);
      if (c.rate_kbps < best_rate) {
        best_rate = c.rate_kbps;
        best = id;
      }
    }
    return best;
  }

  void check_completeness(ClientSession& c, const ServerSession::ClientView& view,
                          ClientReport& cr) {
    if (!sc_.expect_complete_delivery) return;
    std::set<std::string> contents_served;
    for (const auto& [content, desc] : view.serving) contents_served.insert(content);
    for (const auto& content : view.fallback_contents) contents_served.insert(content);
    for (const auto& content : contents_served) {
      auto pit = published_.find(content);
      if (pit == published_.end()) continue;
      for (const auto& [stream_id, bytes] : pit->second) {
        const StreamBuffer* sb = c.streams().find(stream_id);
        if (!sb || sb->content() != bytes) {
          violations_.push_back("client " + std::to_string(c.node()) +
                                ": incomplete delivery of content '" + content + "' stream " +
                                std::to_string(stream_id) + " (" +
                                std::to_string(sb ? sb->delivered() : 0) + "/" +
                                std::to_string(bytes.size()) + " bytes)");
        }
      }
    }
  }

  Scenario sc_;
  TraceWriter trace_;
  SimNetwork sim_;
  NodeId server_node_ = 0;
  std::unique_ptr<ServerSession> server_;
  std::vector<std::unique_ptr<ClientSession>> clients_;
  std::unique_ptr<Attacker> attacker_;
  std::map<std::string, std::map<uint64_t, Bytes>> published_;
  std::vector<std::pair<SimTime, Bytes>> captures_;
  std::vector<std::string> violations_;
  RunReport report_;
};

}  // namespace mcquic
