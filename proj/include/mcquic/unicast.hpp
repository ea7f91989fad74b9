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

#include "mcquic/frames.hpp"
#include "mcquic/interval_set.hpp"
#include "mcquic/netsim.hpp"
#include "mcquic/packet.hpp"

// Minimal reliable, encrypted, frame-oriented unicast transport. The
// handshake is a plain two-message parameter exchange (client hello /
// server hello); authenticity of the pre-shared connection secret is
// axiomatic in the simulator, standing in for the TLS handshake. Data
// datagrams are AEAD-protected with per-direction keys, carry selective
// acknowledgements in the header, and are retransmitted on timeout, with
// in-order delivery of datagram payloads to the frame layer.
//
// Datagram layout (docs/wire.md):
//   0x01 client hello: transport parameters, plaintext
//   0x02 server hello: transport parameters, plaintext
//   0x03 data: seq varint (0 = bare ack), cum_ack varint, ack_bits u32,
//        AEAD(frames) -- absent entirely for bare acks

namespace mcquic {

inline constexpr uint8_t kUcClientHello = 0x01;
inline constexpr uint8_t kUcServerHello = 0x02;
inline constexpr uint8_t kUcData = 0x03;

struct UnicastConfig {
  size_t max_datagram = 1200;
  SimTime rto_us = 200000;
  SimTime ack_delay_us = 1000;
  SimTime handshake_retry_us = 100000;
  int max_retx = 20;
};

class UnicastEndpoint {
 public:
  UnicastEndpoint(SimNetwork& sim, NodeId self, NodeId peer, Side side, ByteSpan connection_secret,
                  UnicastConfig cfg = {})
      : sim_(sim), self_(self), peer_(peer), side_(side), cfg_(cfg) {
    Bytes c_key = hkdf_expand(connection_secret, "mcquic uc c key", 16);
    Bytes c_iv = hkdf_expand(connection_secret, "mcquic uc c iv", 12);
    Bytes s_key = hkdf_expand(connection_secret, "mcquic uc s key", 16);
    Bytes s_iv = hkdf_expand(connection_secret, "mcquic uc s iv", 12);
    if (side == Side::Client) {
      send_keys_ = {std::move(c_key), std::move(c_iv)};
      recv_keys_ = {std::move(s_key), std::move(s_iv)};
    } else {
      send_keys_ = {std::move(s_key), std::move(s_iv)};
      recv_keys_ = {std::move(c_key), std::move(c_iv)};
    }
  }

  void set_peer_params_handler(std::function<void(const TransportParams&)> h) {
    on_peer_params_ = std::move(h);
  }
  // Receives each in-order decrypted datagram payload (a frame sequence).
  void set_payload_handler(std::function<void(ByteSpan)> h) { on_payload_ = std::move(h); }

  void start_handshake(const TransportParams& own) {
    own_params_ = own;
    if (side_ == Side::Client) send_hello();
  }

  bool established() const { return established_; }
  const TransportParams& peer_params() const { return peer_params_; }

  // Queues one frame; everything queued within the current event is packed
  // into as few datagrams as possible.
  void send_frame(const AnyFrame& f) {
    Bytes enc;
    encode_frame(f, enc);
    size_t budget = payload_budget();
    if (enc.size() > budget) throw std::logic_error("frame exceeds unicast datagram budget");
    pending_frames_.push_back(std::move(enc));
    if (!flush_scheduled_) {
      flush_scheduled_ = true;
      sim_.schedule(sim_.now(), [this]() {
        flush_scheduled_ = false;
        flush();
      });
    }
  }

  void on_datagram(const Datagram& d) {
    if (d.bytes.empty()) return;
    switch (d.bytes[0]) {
      case kUcClientHello: {
        if (side_ != Side::Server) return;
        TransportParams p;
        if (decode_transport_params(ByteSpan(d.bytes).subspan(1), Side::Client, p) !=
            DecodeStatus::Ok)
          throw ProtocolError("malformed client transport parameters");
        bool first = !established_;
        established_ = true;
        peer_params_ = p;
        send_hello();  // also answers duplicate hellos
        if (first && on_peer_params_) on_peer_params_(peer_params_);
        return;
      }
      case kUcServerHello: {
        if (side_ != Side::Client) return;
        TransportParams p;
        if (decode_transport_params(ByteSpan(d.bytes).subspan(1), Side::Server, p) !=
            DecodeStatus::Ok)
          throw ProtocolError("malformed server transport parameters");
        bool first = !established_;
        established_ = true;
        peer_params_ = p;
        if (first && on_peer_params_) on_peer_params_(peer_params_);
        flush();
        return;
      }
      case kUcData:
        on_data(d.bytes);
        return;
      default:
        return;  // unknown datagram type: dropped
    }
  }

  uint64_t datagrams_sent() const { return datagrams_sent_; }
  uint64_t retransmits() const { return retransmits_; }
  bool broken() const { return broken_; }

 private:
  struct Unacked {
    Bytes datagram;
    int retx = 0;
  };

  size_t payload_budget() const {
    // type + seq + cum + bits + tag, generously padded
    return cfg_.max_datagram - 32 - kAeadTagLen;
  }

  void send_hello() {
    Bytes dg;
    dg.push_back(side_ == Side::Client ? kUcClientHello : kUcServerHello);
    Bytes params = encode_transport_params(own_params_, side_);
    dg.insert(dg.end(), params.begin(), params.end());
    sim_.send_unicast(self_, peer_, std::move(dg));
    if (side_ == Side::Client && !established_) {
      sim_.schedule(sim_.now() + cfg_.handshake_retry_us, [this]() {
        if (!established_) send_hello();
      });
    }
  }

  void flush() {
    if (!established_) return;  // flushed again once the handshake completes
    while (!pending_frames_.empty()) {
      Bytes payload;
      size_t budget = payload_budget();
      while (!pending_frames_.empty() && payload.size() + pending_frames_.front().size() <= budget) {
        payload.insert(payload.end(), pending_frames_.front().begin(),
                       pending_frames_.front().end());
        pending_frames_.pop_front();
      }
      send_data(payload);
    }
    if (ack_needed_) send_bare_ack();
  }

  Bytes build_header(uint64_t seq) {
    Bytes h;
    h.push_back(kUcData);
    encode_varint(seq, h);
    encode_varint(recv_next_, h);
    uint32_t bits = 0;
    for (uint32_t i = 0; i < 32; ++i)
      if (recv_seen_.contains(recv_next_ + 1 + i)) bits |= (1u << i);
    ByteWriter w(h);
    w.u32(bits);
    return h;
  }

  void send_data(ByteSpan frames) {
    uint64_t seq = next_seq_++;
    Bytes dg = build_header(seq);
    Bytes nonce = packet_nonce_for(seq);
    Bytes ct = aead_seal(send_keys_.aead_key, nonce, dg, frames);
    dg.insert(dg.end(), ct.begin(), ct.end());
    unacked_[seq] = Unacked{dg, 0};
    ack_needed_ = false;
    ++datagrams_sent_;
    sim_.send_unicast(self_, peer_, dg);
    arm_rto(seq);
  }

  void send_bare_ack() {
    ack_needed_ = false;
    Bytes dg = build_header(0);
    sim_.send_unicast(self_, peer_, std::move(dg));
  }

  Bytes packet_nonce_for(uint64_t seq) const { return packet_nonce(send_keys_.iv, seq); }

  void arm_rto(uint64_t seq) {
    sim_.schedule(sim_.now() + cfg_.rto_us, [this, seq]() {
      auto it = unacked_.find(seq);
      if (it == unacked_.end()) return;
      if (++it->second.retx > cfg_.max_retx) {
        broken_ = true;
        unacked_.erase(it);
        return;
      }
      ++retransmits_;
      sim_.send_unicast(self_, peer_, it->second.datagram);
      arm_rto(seq);
    });
  }

  void on_data(const Bytes& dg) {
    ByteReader r(ByteSpan(dg).subspan(1));
    uint64_t seq, cum;
    uint32_t bits;
    if (!read_varint(r, seq)) return;
    if (!read_varint(r, cum)) return;
    if (!r.u32(bits)) return;
    process_acks(cum, bits);
    if (seq == 0) return;  // bare ack

    size_t header_len = 1 + r.consumed();
    ByteSpan aad(dg.data(), header_len);
    ByteSpan ct(dg.data() + header_len, dg.size() - header_len);
    Bytes nonce = packet_nonce(recv_keys_.iv, seq);
    auto payload = aead_open(recv_keys_.aead_key, nonce, aad, ct);
    if (!payload) return;  // corrupt datagram: ignored, sender retransmits

    if (!established_) established_ = true;  // data implies the peer finished
    schedule_ack();
    if (recv_seen_.contains(seq)) return;
    recv_seen_.add_point(seq);
    reorder_[seq] = std::move(*payload);
    while (true) {
      auto it = reorder_.find(recv_next_);
      if (it == reorder_.end()) break;
      Bytes p = std::move(it->second);
      reorder_.erase(it);
      ++recv_next_;
      if (on_payload_ && !p.empty()) on_payload_(p);
    }
  }

  void process_acks(uint64_t cum, uint32_t bits) {
    auto acked = [&](uint64_t s) {
      return s < cum || (s > cum && s <= cum + 32 && (bits >> (s - cum - 1)) & 1);
    };
    std::vector<uint64_t> done;
    for (auto& [s, u] : unacked_)
      if (acked(s)) done.push_back(s);
    for (uint64_t s : done) unacked_.erase(s);
    // Fast retransmit: an unacked seq with three acked successors is lost.
    std::vector<uint64_t> fast;
    for (auto& [s, u] : unacked_) {
      uint32_t higher = 0;
      for (uint64_t k = s + 1; k <= cum + 32 && higher < 3; ++k)
        if (acked(k)) ++higher;
      if (higher >= 3) fast.push_back(s);
    }
    for (uint64_t s : fast) {
      auto it = unacked_.find(s);
      if (it == unacked_.end()) continue;
      if (++it->second.retx > cfg_.max_retx) {
        broken_ = true;
        unacked_.erase(it);
        continue;
      }
      ++retransmits_;
      sim_.send_unicast(self_, peer_, it->second.datagram);
    }
  }

  void schedule_ack() {
    if (ack_needed_) return;
    ack_needed_ = true;
    sim_.schedule(sim_.now() + cfg_.ack_delay_us, [this]() {
      if (ack_needed_) send_bare_ack();
    });
  }

  SimNetwork& sim_;
  NodeId self_;
  NodeId peer_;
  Side side_;
  UnicastConfig cfg_;
  ChannelKeys send_keys_;
  ChannelKeys recv_keys_;
  TransportParams own_params_;
  TransportParams peer_params_;
  bool established_ = false;
  bool broken_ = false;
  bool ack_needed_ = false;
  bool flush_scheduled_ = false;
  std::deque<Bytes> pending_frames_;
  std::map<uint64_t, Unacked> unacked_;
  uint64_t next_seq_ = 1;
  uint64_t recv_next_ = 1;
  IntervalSet recv_seen_;
  std::map<uint64_t, Bytes> reorder_;
  std::function<void(const TransportParams&)> on_peer_params_;
  std::function<void(ByteSpan)> on_payload_;
  uint64_t datagrams_sent_ = 0;
  uint64_t retransmits_ = 0;
};

}  // namespace mcquic
