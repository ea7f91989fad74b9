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

#include "mcquic/channel.hpp"
#include "mcquic/integrity.hpp"
#include "mcquic/packet.hpp"
#include "mcquic/stream.hpp"
#include "mcquic/unicast.hpp"

namespace mcquic {

// Receive-pipeline outcome for one multicast datagram.
enum class ReceiveVerdict {
  Verified,
  Unknown,       // digest not yet available; buffered
  Mismatch,      // digest conflict; dropped and counted as spurious
  NoKey,         // no secret covers this packet number; buffered
  DecryptFail,   // AEAD authentication failed; dropped
  Duplicate,
  Malformed,
  UnknownChannel,
  Inactive,      // channel not in a receiving state
};

inline const char* to_string(ReceiveVerdict v) {
  switch (v) {
    case ReceiveVerdict::Verified: return "verified";
    case ReceiveVerdict::Unknown: return "unknown";
    case ReceiveVerdict::Mismatch: return "mismatch";
    case ReceiveVerdict::NoKey: return "nokey";
    case ReceiveVerdict::DecryptFail: return "decryptfail";
    case ReceiveVerdict::Duplicate: return "duplicate";
    case ReceiveVerdict::Malformed: return "malformed";
    case ReceiveVerdict::UnknownChannel: return "unknownchannel";
    case ReceiveVerdict::Inactive: return "inactive";
  }
  return "?";
}

struct ClientConfig {
  ClientLimits limits;
  enum class FlowPolicy { Extend, Leave };
  FlowPolicy flow_policy = FlowPolicy::Extend;
  SimTime bundling_delay_us = 25000;
  uint64_t initial_max_data = 8 << 20;
  uint64_t max_data_increment = 8 << 20;
  size_t unknown_buffer_packets = 64;   // shared bound for unknown + no-key
  SimTime unknown_buffer_us = 2000000;
  double spurious_leave_per_s = 50.0;   // leave threshold, events/second
};

struct ClientDropCounters {
  uint64_t mismatch = 0;
  uint64_t decrypt_fail = 0;
  uint64_t duplicate = 0;
  uint64_t expired = 0;  // unknown/no-key buffer timeouts and evictions
  uint64_t malformed = 0;
  uint64_t unknown_channel = 0;
  uint64_t inactive = 0;
  uint64_t flow_control = 0;
  uint64_t total() const {
    return mismatch + decrypt_fail + duplicate + expired + malformed + unknown_channel +
           inactive + flow_control;
  }
};

class ClientSession {
 public:
  struct ChannelCtx {
    ChannelDescriptor desc;
    ChannelStateMachine machine;
    PacketNumberSpace pn_space;
    SecretStore secrets;
    Bytes header_key;
    SsmKey group_key;
    // Ack bundling.
    IntervalSet pending_ack;
    bool ack_timer_armed = false;
    SimTime first_pending_at = 0;
    // Packets waiting for a digest or a key.
    struct Buffered {
      Bytes datagram;
      SimTime at;
    };
    std::map<uint64_t, Buffered> buffer;
    uint64_t verified_packets = 0;
    uint64_t attacker_dispatched = 0;
  };

  ClientSession(SimNetwork& sim, NodeId self, NodeId server, ClientConfig cfg,
                ByteSpan connection_secret)
      : sim_(sim),
        self_(self),
        cfg_(std::move(cfg)),
        endpoint_(sim, self, server, Side::Client, connection_secret),
        max_data_(cfg_.initial_max_data) {
    cfg_.limits.validate();
    endpoint_.set_payload_handler([this](ByteSpan p) { on_unicast_payload(p); });
    endpoint_.set_peer_params_handler([this](const TransportParams& p) {
      multicast_enabled_ = p.server_multicast_supported;
    });
    sim_.set_handler(self, [this](const Datagram& d) { on_datagram(d); });
    // Two locally issued connection ids, visible for the collision rule.
    local_cids_.push_back(ChannelId(Bytes{static_cast<uint8_t>(0xc0 + (self & 0x0f)),
                                          static_cast<uint8_t>(self >> 4), 0x01}));
    local_cids_.push_back(ChannelId(Bytes{static_cast<uint8_t>(0xc0 + (self & 0x0f)),
                                          static_cast<uint8_t>(self >> 4), 0x02}));
  }

  void start() {
    TransportParams p;
    p.client_params_present = true;
    p.client_limits = cfg_.limits;
    endpoint_.start_handshake(p);
    arm_buffer_sweep();
    arm_spurious_window();
  }

  // ---- Inspection ----
  const std::map<ChannelId, ChannelCtx>& channels() const { return channels_; }
  const StreamSpaceMap& streams() const { return streams_; }
  const ClientDropCounters& drops() const { return drops_; }
  const ClientLimits& limits() const { return limits_ ? *limits_ : cfg_.limits; }
  const IntegrityStore& integrity() const { return integrity_; }
  UnicastEndpoint& endpoint() { return endpoint_; }
  NodeId node() const { return self_; }
  bool multicast_enabled() const { return multicast_enabled_; }
  uint64_t attacker_bytes_delivered() const { return attacker_bytes_delivered_; }

  uint64_t joined_rate_kbps() const {
    uint64_t sum = 0;
    for (const auto& [cid, ctx] : channels_) {
      ChannelState s = ctx.machine.state();
      if (s == ChannelState::Joined || s == ChannelState::JoinPending)
        sum += ctx.desc.max_rate_kbps;
    }
    return sum;
  }

  size_t joined_count() const {
    size_t n = 0;
    for (const auto& [cid, ctx] : channels_) {
      ChannelState s = ctx.machine.state();
      if (s == ChannelState::Joined || s == ChannelState::JoinPending) ++n;
    }
    return n;
  }

  // ---- Limit updates (MC_LIMITS) ----
  void update_limits(const ClientLimits& new_limits) {
    new_limits.validate();
    limits_ = new_limits;
    endpoint_.send_frame(LimitsFrame{new_limits});
    // Shed channels, highest rate first, until the new budget holds.
    while (joined_rate_kbps() > limits().max_aggregate_rate_kbps ||
           joined_count() > limits().max_channels_joined) {
      ChannelCtx* worst = nullptr;
      for (auto& [cid, ctx] : channels_) {
        ChannelState s = ctx.machine.state();
        if (s != ChannelState::Joined && s != ChannelState::JoinPending) continue;
        if (!worst || ctx.desc.max_rate_kbps > worst->desc.max_rate_kbps) worst = &ctx;
      }
      if (!worst) break;
      leave_channel(*worst, ChannelEvent::Left, ReasonCode::RateExceeded);
    }
    trace_budget();
    assert_budget();
  }

  // ---- Join policy ----
  struct JoinDecision {
    bool accept;
    ReasonCode reason;
  };

  JoinDecision decide_join(const ChannelDescriptor& desc) const {
    if ((desc.family == 4 && !limits().allow_ipv4) || (desc.family == 6 && !limits().allow_ipv6))
      return {false, ReasonCode::FamilyUnsupported};
    auto has = [](const std::vector<uint16_t>& v, uint16_t x) {
      return std::find(v.begin(), v.end(), x) != v.end();
    };
    if (!has(limits().supported_hash_ids, static_cast<uint16_t>(desc.hash_id)) ||
        !has(limits().supported_aead_ids, static_cast<uint16_t>(desc.aead_id)))
      return {false, ReasonCode::AlgorithmUnsupported};
    if (joined_rate_kbps() + desc.max_rate_kbps > limits().max_aggregate_rate_kbps)
      return {false, ReasonCode::RateExceeded};
    if (joined_count() + 1 > limits().max_channels_joined)
      return {false, ReasonCode::ChannelLimit};
    return {true, ReasonCode::None};
  }

  // ---- Multicast receive pipeline ----
  ReceiveVerdict on_multicast_datagram(const Datagram& d) {
    ChannelCtx* ctx = match_channel(d.bytes);
    if (!ctx) {
      drops_.unknown_channel++;
      return ReceiveVerdict::UnknownChannel;
    }
    ReceiveVerdict v = process_channel_datagram(*ctx, d.bytes, d.injected);
    trace_verdict(*ctx, v, d);
    if (v == ReceiveVerdict::Mismatch || v == ReceiveVerdict::DecryptFail) note_spurious(*ctx);
    return v;
  }

  // ---- Ack flushing; normally timer-driven, exposed for tests ----
  std::vector<AckFrame> flush_acks(SimTime now) {
    std::vector<AckFrame> out;
    for (auto& [cid, ctx] : channels_) {
      if (ctx.pending_ack.empty()) continue;
      if (ctx.first_pending_at + cfg_.bundling_delay_us > now) continue;
      AckFrame ack;
      ack.channel_id = cid;
      ack.ack_delay_us = now - ctx.first_pending_at;
      auto ranges = ctx.pending_ack.ranges();
      for (auto it = ranges.rbegin(); it != ranges.rend(); ++it)
        ack.ranges.push_back(AckRange{it->second - 1, it->second - it->first});
      ctx.pending_ack.clear();
      ctx.ack_timer_armed = false;
      out.push_back(std::move(ack));
    }
    for (const auto& ack : out) {
      if (trace()) {
        std::string rs;
        for (const auto& r : ack.ranges) {
          if (!rs.empty()) rs += ',';
          rs += std::to_string(r.smallest()) + "-" + std::to_string(r.largest);
        }
        trace()->record(sim_.now(), "ackemit",
                        {{"node", std::to_string(self_)},
                         {"ch", ack.channel_id.hex()},
                         {"ranges", rs}});
      }
      endpoint_.send_frame(ack);
    }
    return out;
  }

 private:
  friend class SimulationHarness;

  TraceWriter* trace() { return sim_.trace(); }

  void on_datagram(const Datagram& d) {
    if (d.is_multicast) {
      on_multicast_datagram(d);
    } else {
      endpoint_.on_datagram(d);
    }
  }

  // ---- Unicast frame dispatch ----
  void on_unicast_payload(ByteSpan payload) {
    auto frames = parse_payload(payload);
    if (!frames) throw ProtocolError("malformed unicast payload");
    for (const AnyFrame& f : *frames) std::visit([this](const auto& v) { handle_unicast(v); }, f);
  }

  void handle_unicast(const AnnounceFrame& f) {
    if (!multicast_enabled_) throw ProtocolError("announce on a connection without multicast");
    ChannelDescriptor desc = ChannelDescriptor::from_announce(f);
    desc.validate();
    // Channel ids share space with connection ids; clear a collision by
    // retiring the local connection id before acknowledging the announce.
    for (auto it = local_cids_.begin(); it != local_cids_.end(); ++it) {
      if (*it == desc.channel_id) {
        if (trace())
          trace()->record(sim_.now(), "cidretire",
                          {{"node", std::to_string(self_)}, {"cid", it->hex()}});
        local_cids_.erase(it);
        break;
      }
    }
    auto it = channels_.find(desc.channel_id);
    if (it != channels_.end()) {
      if (!(it->second.desc == desc))
        throw ProtocolError("announce changed an immutable channel descriptor");
      if (it->second.machine.can_apply(ChannelEvent::Announce))
        it->second.machine.apply(ChannelEvent::Announce);  // idempotent re-announce
      return;
    }
    if (channels_.size() + 1 > limits().max_channels_announced)
      throw ProtocolError("server exceeded max_channels_announced");
    ChannelCtx ctx;
    ctx.desc = desc;
    ctx.header_key = derive_header_key(desc.header_secret);
    ctx.group_key = SsmKey{ip_to_string(desc.family, desc.source_ip),
                           ip_to_string(desc.family, desc.group_ip)};
    integrity_.open_channel(desc.channel_id, desc.hash_id);
    channels_.emplace(desc.channel_id, std::move(ctx));
    trace_state(desc.channel_id, "none", ChannelEvent::Announce, ChannelState::Announced);
  }

  void handle_unicast(const JoinFrame& f) {
    ChannelCtx& ctx = require_channel(f.channel_id);
    ChannelState s = ctx.machine.state();
    if (s == ChannelState::JoinPending || s == ChannelState::Joined) return;  // idempotent
    JoinDecision d = decide_join(ctx.desc);
    if (d.accept) {
      apply_transition(ctx, ChannelEvent::JoinRequested, ReasonCode::None);
      sim_.join_group(self_, ctx.group_key);
      trace_budget();
    } else {
      apply_transition(ctx, ChannelEvent::JoinDeclined, d.reason);
    }
    assert_budget();
  }

  void handle_unicast(const LeaveFrame& f) {
    ChannelCtx& ctx = require_channel(f.channel_id);
    ChannelState s = ctx.machine.state();
    if (s != ChannelState::Joined && s != ChannelState::JoinPending) return;
    leave_channel(ctx, ChannelEvent::LeaveRequested,
                  static_cast<ReasonCode>(f.reason_code) == ReasonCode::None
                      ? ReasonCode::ServerInstructed
                      : static_cast<ReasonCode>(f.reason_code));
  }

  void handle_unicast(const RetireFrame& f) {
    ChannelCtx& ctx = require_channel(f.channel_id);
    apply_transition(ctx, ChannelEvent::Retire, ReasonCode::ServerInstructed);
    integrity_.drop_channel(f.channel_id);
    channels_.erase(f.channel_id);  // drop all stored state
  }

  void handle_unicast(const KeyFrame& f) {
    ChannelCtx& ctx = require_channel(f.channel_id);
    ctx.secrets.add(ChannelSecret{f.secret, f.from_packet_number}, ctx.desc.aead_id);
    if (trace())
      trace()->record(sim_.now(), "keyadd",
                      {{"node", std::to_string(self_)},
                       {"ch", f.channel_id.hex()},
                       {"from", std::to_string(f.from_packet_number)},
                       {"src", "uc"}});
    retry_buffered(ctx);
  }

  void handle_unicast(const IntegrityFrame& f) {
    ChannelCtx& ctx = require_channel(f.channel_id);
    integrity_.add(f, /*trusted_context=*/true);
    if (trace())
      trace()->record(sim_.now(), "trust",
                      {{"node", std::to_string(self_)},
                       {"ch", f.channel_id.hex()},
                       {"start", std::to_string(f.start_packet_number)},
                       {"n", std::to_string(f.digests.size())},
                       {"src", "uc"}});
    retry_buffered(ctx);
  }

  void handle_unicast(const StreamFrame& f) {
    deliver_stream(f, DeliveryOrigin::Unicast, nullptr);
  }

  void handle_unicast(const MaxDataFrame&) {}  // server-side concept; ignored

  void handle_unicast(const StateFrame&) { throw ProtocolError("STATE frame from server"); }
  void handle_unicast(const AckFrame&) { throw ProtocolError("MC_ACK frame from server"); }
  void handle_unicast(const LimitsFrame&) { throw ProtocolError("MC_LIMITS frame from server"); }

  ChannelCtx& require_channel(const ChannelId& cid) {
    auto it = channels_.find(cid);
    if (it == channels_.end()) throw ProtocolError("frame references unknown channel");
    return it->second;
  }

  // ---- Multicast pipeline internals ----
  ChannelCtx* match_channel(const Bytes& datagram) {
    if (!looks_like_multicast_packet(datagram)) return nullptr;
    ChannelCtx* best = nullptr;
    for (auto& [cid, ctx] : channels_) {
      const Bytes& b = cid.bytes();
      if (datagram.size() < 1 + b.size()) continue;
      if (std::equal(b.begin(), b.end(), datagram.begin() + 1)) {
        if (!best || b.size() > best->desc.channel_id.size()) best = &ctx;
      }
    }
    return best;
  }

  ReceiveVerdict process_channel_datagram(ChannelCtx& ctx, const Bytes& datagram, bool injected) {
    ChannelState s = ctx.machine.state();
    if (s != ChannelState::Joined && s != ChannelState::JoinPending) {
      drops_.inactive++;
      return ReceiveVerdict::Inactive;
    }

    Bytes work = datagram;
    MulticastPacketHeader hdr;
    size_t header_len = 0;
    if (remove_header_protection(ctx.header_key, work, ctx.desc.channel_id.size(),
                                 ctx.pn_space.expected_next(), hdr,
                                 header_len) != UnprotectStatus::Ok) {
      drops_.malformed++;
      return ReceiveVerdict::Malformed;
    }
    uint64_t pn = hdr.packet_number;
    if (ctx.pn_space.seen(pn)) {
      drops_.duplicate++;
      return ReceiveVerdict::Duplicate;
    }

    IntegrityVerdict iv = integrity_.verify(ctx.desc.channel_id, pn, datagram);
    if (iv == IntegrityVerdict::Mismatch) {
      drops_.mismatch++;
      return ReceiveVerdict::Mismatch;
    }
    if (iv == IntegrityVerdict::Unknown) {
      buffer_packet(ctx, pn, datagram);
      return ReceiveVerdict::Unknown;
    }

    UnprotectedPacket up;
    UnprotectStatus st =
        unprotect_packet(ctx.secrets, ctx.desc.aead_id, ctx.header_key, datagram,
                         ctx.desc.channel_id.size(), ctx.pn_space.expected_next(), up);
    if (st == UnprotectStatus::NoKey) {
      buffer_packet(ctx, pn, datagram);
      return ReceiveVerdict::NoKey;
    }
    if (st != UnprotectStatus::Ok) {
      drops_.decrypt_fail++;
      return ReceiveVerdict::DecryptFail;
    }

    dispatch_verified(ctx, pn, up.payload, injected, datagram.size());
    retry_buffered(ctx);  // frames in this packet may unblock buffered ones
    return ReceiveVerdict::Verified;
  }

  void dispatch_verified(ChannelCtx& ctx, uint64_t pn, const Bytes& payload, bool injected,
                         size_t wire_bytes) {
    auto frames = parse_payload(payload);
    if (!frames) throw ProtocolError("malformed frames in verified multicast packet");

    ctx.pn_space.record_received(pn);
    ctx.verified_packets++;
    if (injected) {
      ctx.attacker_dispatched++;
      attacker_bytes_delivered_ += wire_bytes;
    }
    if (trace())
      trace()->record(sim_.now(), "recv",
                      {{"node", std::to_string(self_)},
                       {"ch", ctx.desc.channel_id.hex()},
                       {"pn", std::to_string(pn)},
                       {"atk", injected ? "1" : "0"}});
    schedule_ack(ctx, pn);

    if (ctx.machine.state() == ChannelState::JoinPending)
      apply_transition(ctx, ChannelEvent::PacketsFlowing, ReasonCode::None);

    std::string mc_src = "mc:" + std::to_string(pn);
    for (const AnyFrame& f : *frames) {
      if (const auto* sf = std::get_if<StreamFrame>(&f)) {
        deliver_stream(*sf, DeliveryOrigin::Multicast, &ctx);
      } else if (const auto* intg = std::get_if<IntegrityFrame>(&f)) {
        // A verified packet promotes the digests it carries to trusted.
        if (!(intg->channel_id == ctx.desc.channel_id))
          throw ProtocolError("integrity frame crosses channels");
        integrity_.add(*intg, /*trusted_context=*/true);
        if (trace())
          trace()->record(sim_.now(), "trust",
                          {{"node", std::to_string(self_)},
                           {"ch", ctx.desc.channel_id.hex()},
                           {"start", std::to_string(intg->start_packet_number)},
                           {"n", std::to_string(intg->digests.size())},
                           {"src", mc_src}});
      } else if (const auto* kf = std::get_if<KeyFrame>(&f)) {
        if (!(kf->channel_id == ctx.desc.channel_id))
          throw ProtocolError("key frame crosses channels");
        ctx.secrets.add(ChannelSecret{kf->secret, kf->from_packet_number}, ctx.desc.aead_id);
        if (trace())
          trace()->record(sim_.now(), "keyadd",
                          {{"node", std::to_string(self_)},
                           {"ch", ctx.desc.channel_id.hex()},
                           {"from", std::to_string(kf->from_packet_number)},
                           {"src", mc_src}});
      } else {
        throw ProtocolError("frame type not allowed on a multicast channel");
      }
    }
  }

  void deliver_stream(const StreamFrame& f, DeliveryOrigin origin, ChannelCtx* ctx) {
    // Connection-wide flow control over the shared stream space.
    uint64_t cur = streams_.total_highest_offset();
    const StreamBuffer* sb = streams_.find(f.stream_id);
    uint64_t stream_high = sb ? sb->highest_offset() : 0;
    uint64_t new_high = std::max(stream_high, f.offset + f.data.size());
    uint64_t prospective = cur - stream_high + new_high;
    if (prospective > max_data_) {
      if (origin == DeliveryOrigin::Multicast && cfg_.flow_policy == ClientConfig::FlowPolicy::Leave) {
        drops_.flow_control++;
        if (ctx) leave_channel(*ctx, ChannelEvent::Left, ReasonCode::FlowControl);
        return;
      }
      // Extend the window to keep up and tell the server.
      uint64_t inc = cfg_.max_data_increment;
      max_data_ = ((prospective + inc - 1) / inc) * inc;
      endpoint_.send_frame(MaxDataFrame{max_data_});
    }
    size_t newly = streams_.deliver(f.stream_id, f.offset, f.data, origin);
    if (newly > 0 && trace())
      trace()->record(sim_.now(), "appdeliver",
                      {{"node", std::to_string(self_)},
                       {"stream", std::to_string(f.stream_id)},
                       {"bytes", std::to_string(newly)},
                       {"origin", origin == DeliveryOrigin::Multicast ? "mc" : "uc"}});
    maybe_autotune_window();
  }

  void maybe_autotune_window() {
    uint64_t consumed = streams_.total_delivered();  // the app reads instantly
    if (max_data_ < consumed + cfg_.max_data_increment / 2) {
      max_data_ = consumed + cfg_.max_data_increment;
      endpoint_.send_frame(MaxDataFrame{max_data_});
    }
  }

  void buffer_packet(ChannelCtx& ctx, uint64_t pn, const Bytes& datagram) {
    if (ctx.buffer.size() >= cfg_.unknown_buffer_packets) {
      // Evict the oldest entry.
      auto oldest = ctx.buffer.begin();
      for (auto it = ctx.buffer.begin(); it != ctx.buffer.end(); ++it)
        if (it->second.at < oldest->second.at) oldest = it;
      ctx.buffer.erase(oldest);
      drops_.expired++;
    }
    ctx.buffer.emplace(pn, ChannelCtx::Buffered{datagram, sim_.now()});
  }

  // Re-runs buffered packets after new digests or keys arrived. Dispatching
  // one packet may trust further digests, so iterate to a fixed point.
  void retry_buffered(ChannelCtx& ctx) {
    bool progress = true;
    while (progress) {
      progress = false;
      std::vector<uint64_t> pns;
      pns.reserve(ctx.buffer.size());
      for (const auto& [pn, b] : ctx.buffer) pns.push_back(pn);
      for (uint64_t pn : pns) {
        auto it = ctx.buffer.find(pn);
        if (it == ctx.buffer.end()) continue;  // cleared by a side effect
        IntegrityVerdict iv = integrity_.verify(ctx.desc.channel_id, pn, it->second.datagram);
        if (iv == IntegrityVerdict::Unknown) continue;
        if (iv == IntegrityVerdict::Mismatch) {
          ctx.buffer.erase(it);
          drops_.mismatch++;
          note_spurious(ctx);
          progress = true;
          continue;
        }
        UnprotectedPacket up;
        UnprotectStatus st =
            unprotect_packet(ctx.secrets, ctx.desc.aead_id, ctx.header_key, it->second.datagram,
                             ctx.desc.channel_id.size(), ctx.pn_space.expected_next(), up);
        if (st == UnprotectStatus::NoKey) continue;  // keep waiting for the key
        size_t wire = it->second.datagram.size();
        ctx.buffer.erase(it);
        progress = true;
        if (st != UnprotectStatus::Ok) {
          drops_.decrypt_fail++;
          note_spurious(ctx);
          continue;
        }
        if (!ctx.pn_space.seen(pn)) dispatch_verified(ctx, pn, up.payload, false, wire);
      }
    }
  }

  void schedule_ack(ChannelCtx& ctx, uint64_t pn) {
    if (ctx.pending_ack.empty()) ctx.first_pending_at = sim_.now();
    ctx.pending_ack.add_point(pn);
    if (!ctx.ack_timer_armed) {
      ctx.ack_timer_armed = true;
      sim_.schedule(sim_.now() + cfg_.bundling_delay_us, [this]() { flush_acks(sim_.now()); });
    }
  }

  // ---- Transitions, leaves, budget ----
  void apply_transition(ChannelCtx& ctx, ChannelEvent ev, ReasonCode reason) {
    ChannelState old = ctx.machine.state();
    ChannelState next = ctx.machine.apply(ev);
    trace_state(ctx.desc.channel_id, to_string(old), ev, next);
    switch (next) {
      case ChannelState::JoinPending:
      case ChannelState::Joined:
      case ChannelState::DeclinedJoin:
      case ChannelState::Left:
      case ChannelState::Retired:
        endpoint_.send_frame(StateFrame{ctx.desc.channel_id, static_cast<uint64_t>(next),
                                        static_cast<uint64_t>(reason)});
        break;
      case ChannelState::Announced:
        break;
    }
  }

  void leave_channel(ChannelCtx& ctx, ChannelEvent ev, ReasonCode reason) {
    apply_transition(ctx, ev, reason);
    sim_.leave_group(self_, ctx.group_key);
    ctx.pending_ack.clear();
    ctx.buffer.clear();
    trace_budget();
    assert_budget();
  }

  void note_spurious(ChannelCtx& ctx) {
    spurious_in_window_++;
    double per_s = static_cast<double>(spurious_in_window_);
    if (per_s > cfg_.spurious_leave_per_s) {
      ChannelState s = ctx.machine.state();
      if (s == ChannelState::Joined || s == ChannelState::JoinPending) {
        leave_channel(ctx, ChannelEvent::Left, ReasonCode::SpuriousTraffic);
        spurious_in_window_ = 0;
      }
    }
  }

  void assert_budget() const {
    if (joined_rate_kbps() > limits().max_aggregate_rate_kbps)
      throw InvariantViolation("aggregate rate budget exceeded");
    if (joined_count() > limits().max_channels_joined)
      throw InvariantViolation("joined channel count exceeds limit");
  }

  void trace_budget() {
    if (trace())
      trace()->record(sim_.now(), "budget",
                      {{"node", std::to_string(self_)},
                       {"used", std::to_string(joined_rate_kbps())},
                       {"limit", std::to_string(limits().max_aggregate_rate_kbps)}});
  }

  void trace_state(const ChannelId& cid, const std::string& old, ChannelEvent ev,
                   ChannelState next) {
    if (trace())
      trace()->record(sim_.now(), "state",
                      {{"node", std::to_string(self_)},
                       {"ch", cid.hex()},
                       {"old", old},
                       {"ev", to_string(ev)},
                       {"new", to_string(next)}});
  }

  void trace_verdict(ChannelCtx& ctx, ReceiveVerdict v, const Datagram& d) {
    if (!trace()) return;
    trace()->record(sim_.now(), "verdict",
                    {{"node", std::to_string(self_)},
                     {"ch", ctx.desc.channel_id.hex()},
                     {"v", to_string(v)},
                     {"atk", d.injected ? "1" : "0"},
                     {"id", std::to_string(d.id)}});
  }

  void arm_buffer_sweep() {
    sim_.schedule(sim_.now() + 250000, [this]() {
      for (auto& [cid, ctx] : channels_) {
        for (auto it = ctx.buffer.begin(); it != ctx.buffer.end();) {
          if (sim_.now() - it->second.at >= cfg_.unknown_buffer_us) {
            it = ctx.buffer.erase(it);
            drops_.expired++;
          } else {
            ++it;
          }
        }
      }
      arm_buffer_sweep();
    });
  }

  void arm_spurious_window() {
    sim_.schedule(sim_.now() + 1000000, [this]() {
      spurious_in_window_ = 0;
      arm_spurious_window();
    });
  }

  SimNetwork& sim_;
  NodeId self_;
  ClientConfig cfg_;
  UnicastEndpoint endpoint_;
  bool multicast_enabled_ = false;
  std::map<ChannelId, ChannelCtx> channels_;
  std::vector<ChannelId> local_cids_;
  IntegrityStore integrity_;
  StreamSpaceMap streams_;
  std::optional<ClientLimits> limits_;  // set after an MC_LIMITS update
  uint64_t max_data_;
  ClientDropCounters drops_;
  uint64_t spurious_in_window_ = 0;
  uint64_t attacker_bytes_delivered_ = 0;
};

}  // namespace mcquic
