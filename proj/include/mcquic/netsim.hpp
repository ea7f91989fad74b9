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

#include <arpa/inet.h>

#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>

#include "mcquic/trace.hpp"
#include "mcquic/types.hpp"

// Deterministic discrete-event network. Star topology: every node hangs off
// one router; a datagram traverses the sender's link and the receiver's
// link, each with its own delay/jitter/loss. Multicast crosses the source
// link once and fans out per member, which is what makes the egress-savings
// metric measurable. Identical (config, seed) gives an identical event
// trace: time is integer microseconds, ties break on insertion order, and
// RNG streams are split per concern so enabling an attacker or jitter never
// perturbs the loss pattern of legitimate traffic.

namespace mcquic {

using SimTime = uint64_t;  // microseconds
using NodeId = uint32_t;

struct SsmKey {
  std::string source;
  std::string group;
  auto operator<=>(const SsmKey&) const = default;
  std::string str() const { return source + ">" + group; }
};

struct LinkParams {
  SimTime delay_us = 1000;
  double loss = 0.0;
  SimTime jitter_us = 0;
};

struct NodeCaps {
  bool multicast_capable = true;
  bool v4 = true;
  bool v6 = true;
};

struct Datagram {
  Bytes bytes;
  NodeId from = 0;
  NodeId to = 0;
  bool is_multicast = false;
  SsmKey group;
  bool injected = false;
  uint64_t id = 0;
};

struct LinkStats {
  uint64_t sent_pkts = 0, sent_bytes = 0;
  uint64_t delivered_pkts = 0, delivered_bytes = 0;
  uint64_t dropped_pkts = 0, dropped_bytes = 0;
};

// Egress accounting per sending node, independent of loss.
struct OriginStats {
  uint64_t unicast_pkts = 0, unicast_bytes = 0;
  uint64_t multicast_pkts = 0, multicast_bytes = 0;
};

inline std::pair<uint8_t, Bytes> parse_ip(const std::string& s) {
  Bytes out(16);
  if (inet_pton(AF_INET, s.c_str(), out.data()) == 1) {
    out.resize(4);
    return {4, out};
  }
  if (inet_pton(AF_INET6, s.c_str(), out.data()) == 1) return {6, out};
  throw ConfigError("invalid IP address: " + s);
}

inline std::string ip_to_string(uint8_t family, ByteSpan addr) {
  char buf[INET6_ADDRSTRLEN] = {0};
  int af = family == 4 ? AF_INET : AF_INET6;
  if (!inet_ntop(af, addr.data(), buf, sizeof(buf))) throw ConfigError("bad address bytes");
  return buf;
}

class SimNetwork {
 public:
  explicit SimNetwork(uint64_t seed, TraceWriter* trace = nullptr)
      : trace_(trace),
        loss_rng_(seed ^ 0x9e3779b97f4a7c15ull),
        jitter_rng_(seed ^ 0x2545f4914f6cdd1dull),
        attacker_rng_(seed ^ 0xa77acce5a77acce5ull) {}

  SimTime now() const { return now_; }
  TraceWriter* trace() { return trace_; }
  std::mt19937_64& attacker_rng() { return attacker_rng_; }

  NodeId add_node(const NodeCaps& caps, const LinkParams& link) {
    nodes_.push_back(Node{caps, link, nullptr, false});
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void set_handler(NodeId node, std::function<void(const Datagram&)> handler) {
    nodes_.at(node).handler = std::move(handler);
  }

  const NodeCaps& caps(NodeId node) const { return nodes_.at(node).caps; }
  const LinkParams& link(NodeId node) const { return nodes_.at(node).link; }
  size_t node_count() const { return nodes_.size(); }

  // Models pulling the unicast path out from under a client while it stays
  // subscribed to groups (used by the forward-secrecy scenarios).
  void sever_unicast(NodeId node) { nodes_.at(node).unicast_severed = true; }

  void schedule(SimTime at, std::function<void()> fn) {
    queue_.push(Event{std::max(at, now_), seq_++, std::move(fn)});
  }

  void send_unicast(NodeId from, NodeId to, Bytes bytes) {
    size_t len = bytes.size();
    origin_stats_[from].unicast_pkts++;
    origin_stats_[from].unicast_bytes += len;
    std::string fl = link_name(from), tl = link_name(to);
    if (nodes_.at(from).unicast_severed || nodes_.at(to).unicast_severed) {
      count_send(fl, len);
      count_drop(fl, len);
      rec("ucdrop", {{"from", std::to_string(from)}, {"to", std::to_string(to)},
                     {"reason", "severed"}});
      return;
    }
    count_send(fl, len);
    if (draw_loss(nodes_.at(from).link)) {
      count_drop(fl, len);
      rec("ucdrop", {{"from", std::to_string(from)}, {"to", std::to_string(to)}, {"link", fl}});
      return;
    }
    count_deliver(fl, len);
    count_send(tl, len);
    if (draw_loss(nodes_.at(to).link)) {
      count_drop(tl, len);
      rec("ucdrop", {{"from", std::to_string(from)}, {"to", std::to_string(to)}, {"link", tl}});
      return;
    }
    count_deliver(tl, len);
    SimTime at = now_ + link_delay(nodes_.at(from).link) + link_delay(nodes_.at(to).link);
    Datagram d{std::move(bytes), from, to, false, {}, false, next_dgram_id_++};
    rec("ucsend", {{"from", std::to_string(from)}, {"to", std::to_string(to)},
                   {"bytes", std::to_string(len)}, {"id", std::to_string(d.id)}});
    schedule(at, [this, d = std::move(d)]() { deliver(d); });
  }

  void send_multicast(NodeId from, const SsmKey& key, Bytes bytes) {
    size_t len = bytes.size();
    origin_stats_[from].multicast_pkts++;
    origin_stats_[from].multicast_bytes += len;
    std::string fl = link_name(from);
    uint64_t id = next_dgram_id_++;
    rec("mcsend", {{"from", std::to_string(from)}, {"grp", key.str()},
                   {"bytes", std::to_string(len)}, {"id", std::to_string(id)}});
    if (capture_) capture_(bytes);
    count_send(fl, len);
    if (draw_loss(nodes_.at(from).link)) {
      count_drop(fl, len);
      rec("mcdrop", {{"link", fl}, {"id", std::to_string(id)}, {"where", "upstream"}});
      return;
    }
    count_deliver(fl, len);
    SimTime base = now_ + link_delay(nodes_.at(from).link);
    fan_out(key, bytes, from, false, id, base);
  }

  // Attacker-origin traffic enters at the router, so only member links apply.
  void inject_multicast(const SsmKey& key, Bytes bytes, NodeId attacker_node) {
    uint64_t id = next_dgram_id_++;
    rec("inject", {{"grp", key.str()}, {"bytes", std::to_string(bytes.size())},
                   {"id", std::to_string(id)}});
    LinkStats& atk = stats_["atk"];
    atk.sent_pkts++;
    atk.sent_bytes += bytes.size();
    atk.delivered_pkts++;
    atk.delivered_bytes += bytes.size();
    fan_out(key, bytes, attacker_node, true, id, now_);
  }

  void join_group(NodeId node, const SsmKey& key) {
    schedule(now_ + membership_latency_us, [this, node, key]() {
      if (!nodes_.at(node).caps.multicast_capable) return;  // silently no-op
      members_[key].insert(node);
      rec("joingrp", {{"node", std::to_string(node)}, {"grp", key.str()}});
    });
  }

  void leave_group(NodeId node, const SsmKey& key) {
    schedule(now_ + membership_latency_us, [this, node, key]() {
      auto it = members_.find(key);
      if (it == members_.end() || it->second.erase(node) == 0) return;
      rec("leavegrp", {{"node", std::to_string(node)}, {"grp", key.str()}});
    });
  }

  bool is_member(NodeId node, const SsmKey& key) const {
    auto it = members_.find(key);
    return it != members_.end() && it->second.count(node) != 0;
  }

  // Attacker snoop point: observes every multicast send.
  void set_multicast_capture(std::function<void(const Bytes&)> cb) { capture_ = std::move(cb); }

  bool step() {
    if (queue_.empty()) return false;
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    ev.fn();
    ++events_processed_;
    return true;
  }

  void run_until(SimTime t) {
    while (!queue_.empty() && queue_.top().at <= t) step();
    now_ = std::max(now_, t);
  }

  void run_all(uint64_t max_events = UINT64_MAX) {
    while (events_processed_ < max_events && step()) {
    }
  }

  uint64_t events_processed() const { return events_processed_; }
  const std::map<std::string, LinkStats>& link_stats() const { return stats_; }
  const OriginStats& origin_stats(NodeId node) { return origin_stats_[node]; }

  SimTime membership_latency_us = 10000;

 private:
  struct Node {
    NodeCaps caps;
    LinkParams link;
    std::function<void(const Datagram&)> handler;
    bool unicast_severed = false;
  };

  struct Event {
    SimTime at;
    uint64_t seq;
    std::function<void()> fn;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  void fan_out(const SsmKey& key, const Bytes& bytes, NodeId from, bool injected, uint64_t id,
               SimTime base) {
    auto it = members_.find(key);
    if (it == members_.end()) return;
    for (NodeId member : it->second) {  // std::set: deterministic order
      std::string ml = link_name(member);
      count_send(ml, bytes.size());
      if (draw_loss(nodes_.at(member).link)) {
        count_drop(ml, bytes.size());
        rec("mcdrop", {{"link", ml}, {"id", std::to_string(id)}, {"node", std::to_string(member)}});
        continue;
      }
      count_deliver(ml, bytes.size());
      SimTime at = base + link_delay(nodes_.at(member).link);
      Datagram d{bytes, from, member, true, key, injected, id};
      schedule(at, [this, d = std::move(d)]() { deliver(d); });
    }
  }

  void deliver(const Datagram& d) {
    rec(d.is_multicast ? "mcdeliver" : "ucdeliver",
        {{"node", std::to_string(d.to)},
         {"bytes", std::to_string(d.bytes.size())},
         {"id", std::to_string(d.id)},
         {"atk", d.injected ? "1" : "0"}});
    auto& handler = nodes_.at(d.to).handler;
    if (handler) handler(d);
  }

  bool draw_loss(const LinkParams& l) {
    if (l.loss <= 0.0) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(loss_rng_) < l.loss;
  }

  SimTime link_delay(const LinkParams& l) {
    SimTime d = l.delay_us;
    if (l.jitter_us > 0)
      d += std::uniform_int_distribution<SimTime>(0, l.jitter_us)(jitter_rng_);
    return d;
  }

  std::string link_name(NodeId n) const { return "n" + std::to_string(n); }

  void count_send(const std::string& l, size_t bytes) {
    LinkStats& s = stats_[l];
    s.sent_pkts++;
    s.sent_bytes += bytes;
  }
  void count_deliver(const std::string& l, size_t bytes) {
    LinkStats& s = stats_[l];
    s.delivered_pkts++;
    s.delivered_bytes += bytes;
  }
  void count_drop(const std::string& l, size_t bytes) {
    LinkStats& s = stats_[l];
    s.dropped_pkts++;
    s.dropped_bytes += bytes;
  }

  void rec(std::string_view kind, std::initializer_list<TraceWriter::Field> fields) {
    if (trace_) trace_->record(now_, kind, fields);
  }

  TraceWriter* trace_;
  std::vector<Node> nodes_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::map<SsmKey, std::set<NodeId>> members_;
  std::map<std::string, LinkStats> stats_;
  std::map<NodeId, OriginStats> origin_stats_;
  std::function<void(const Bytes&)> capture_;
  SimTime now_ = 0;
  uint64_t seq_ = 0;
  uint64_t next_dgram_id_ = 1;
  uint64_t events_processed_ = 0;
  std::mt19937_64 loss_rng_;
  std::mt19937_64 jitter_rng_;
  std::mt19937_64 attacker_rng_;
};

// Spoofed-datagram source. Captures authentic channel traffic and injects
// either pure noise (optionally with a mimicked header so it reaches the
// verification stage), replayed copies, or single-bit corruptions.
struct AttackerConfig {
  double rate_per_s = 0;
  std::vector<std::string> generators;  // "random", "bitflip", "replay"
  SsmKey target;
  SimTime start_us = 0;
  size_t max_len = 1200;
};

class Attacker {
 public:
  Attacker(SimNetwork& sim, AttackerConfig cfg, NodeId node)
      : sim_(sim), cfg_(std::move(cfg)), node_(node) {
    if (cfg_.generators.empty()) cfg_.generators = {"random"};
  }

  void start() {
    if (cfg_.rate_per_s <= 0) return;
    sim_.set_multicast_capture([this](const Bytes& b) {
      if (captured_.size() >= 1024) captured_.pop_front();
      captured_.push_back(b);
    });
    interval_us_ = static_cast<SimTime>(1e6 / cfg_.rate_per_s);
    if (interval_us_ == 0) interval_us_ = 1;
    sim_.schedule(cfg_.start_us + interval_us_, [this]() { tick(); });
  }

  uint64_t injected_count() const { return injected_; }

 private:
  void tick() {
    inject_once();
    sim_.schedule(sim_.now() + interval_us_, [this]() { tick(); });
  }

  void inject_once() {
    const std::string& gen = cfg_.generators[next_gen_++ % cfg_.generators.size()];
    auto& rng = sim_.attacker_rng();
    Bytes payload;
    if (gen == "replay" && !captured_.empty()) {
      payload = captured_[std::uniform_int_distribution<size_t>(0, captured_.size() - 1)(rng)];
    } else if (gen == "bitflip" && !captured_.empty()) {
      payload = captured_[std::uniform_int_distribution<size_t>(0, captured_.size() - 1)(rng)];
      size_t bit = std::uniform_int_distribution<size_t>(0, payload.size() * 8 - 1)(rng);
      payload[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    } else {
      size_t len = std::uniform_int_distribution<size_t>(40, cfg_.max_len)(rng);
      payload.resize(len);
      for (auto& b : payload) b = static_cast<uint8_t>(rng());
      // Half the noise mimics a real header prefix so it exercises the
      // integrity path instead of dying at channel-id matching.
      if (!captured_.empty() && (rng() & 1)) {
        const Bytes& ref = captured_.front();
        size_t prefix = std::min<size_t>(ref.size(), 8);
        std::copy(ref.begin(), ref.begin() + prefix, payload.begin());
      }
    }
    ++injected_;
    sim_.inject_multicast(cfg_.target, std::move(payload), node_);
  }

  SimNetwork& sim_;
  AttackerConfig cfg_;
  NodeId node_;
  std::deque<Bytes> captured_;
  SimTime interval_us_ = 0;
  uint64_t next_gen_ = 0;
  uint64_t injected_ = 0;
};

}  // namespace mcquic
