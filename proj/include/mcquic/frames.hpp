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

#include <optional>
#include <variant>

#include "mcquic/types.hpp"
#include "mcquic/varint.hpp"

// Multicast extension frames plus the small set of frames the unicast
// substrate needs. Layouts are documented bit-exactly in docs/wire.md; the
// golden vectors under tests/vectors pin them.

namespace mcquic {

// Extension frame codepoints: one contiguous varint block in private space.
inline constexpr uint64_t kMcFrameBase = 0x4d4300;

enum class McFrameType : uint64_t {
  Announce = kMcFrameBase + 0,
  Join = kMcFrameBase + 1,
  Leave = kMcFrameBase + 2,
  Retire = kMcFrameBase + 3,
  State = kMcFrameBase + 4,
  Integrity = kMcFrameBase + 5,
  Key = kMcFrameBase + 6,
  Ack = kMcFrameBase + 7,
  Limits = kMcFrameBase + 8,
};

// Substrate frame codepoints.
inline constexpr uint64_t kFramePadding = 0x00;
inline constexpr uint64_t kFrameStream = 0x08;
inline constexpr uint64_t kFrameMaxData = 0x10;

// Transport parameter ids.
inline constexpr uint64_t kTpServerMulticast = 0x4d43f0;
inline constexpr uint64_t kTpClientMulticast = 0x4d43f1;

inline constexpr size_t kMinSecretLen = 16;
inline constexpr size_t kMaxSecretLen = 64;

struct AnnounceFrame {
  ChannelId channel_id;
  uint8_t family = 4;  // 4 or 6; one family per frame
  Bytes source_ip;     // 4 or 16 bytes
  Bytes group_ip;
  uint16_t udp_port = 0;
  uint16_t aead_id = 0;
  uint16_t hash_id = 0;
  Bytes header_secret;  // static for the channel lifetime
  uint64_t max_rate_kbps = 0;
  bool operator==(const AnnounceFrame&) const = default;
};

struct JoinFrame {
  ChannelId channel_id;
  bool operator==(const JoinFrame&) const = default;
};

struct LeaveFrame {
  ChannelId channel_id;
  uint64_t reason_code = 0;
  bool operator==(const LeaveFrame&) const = default;
};

struct RetireFrame {
  ChannelId channel_id;
  bool operator==(const RetireFrame&) const = default;
};

struct StateFrame {
  ChannelId channel_id;
  uint64_t new_state = 0;
  uint64_t reason_code = 0;
  bool operator==(const StateFrame&) const = default;
};

struct IntegrityFrame {
  ChannelId channel_id;
  uint64_t start_packet_number = 0;
  std::vector<Bytes> digests;  // all entries the same length
  bool operator==(const IntegrityFrame&) const = default;
};

struct KeyFrame {
  ChannelId channel_id;
  uint64_t from_packet_number = 0;
  Bytes secret;
  bool operator==(const KeyFrame&) const = default;
};

// Inclusive range [largest - count + 1, largest].
struct AckRange {
  uint64_t largest = 0;
  uint64_t count = 1;
  uint64_t smallest() const { return largest - (count - 1); }
  bool operator==(const AckRange&) const = default;
};

struct AckFrame {
  ChannelId channel_id;
  uint64_t ack_delay_us = 0;
  std::vector<AckRange> ranges;  // strictly descending, non-overlapping, non-adjacent
  bool operator==(const AckFrame&) const = default;
};

struct LimitsFrame {
  ClientLimits limits;
  bool operator==(const LimitsFrame&) const = default;
};

using McFrame = std::variant<AnnounceFrame, JoinFrame, LeaveFrame, RetireFrame, StateFrame,
                             IntegrityFrame, KeyFrame, AckFrame, LimitsFrame>;

// Substrate frames.
struct StreamFrame {
  uint64_t stream_id = 0;
  uint64_t offset = 0;
  Bytes data;
  bool operator==(const StreamFrame&) const = default;
};

struct MaxDataFrame {
  uint64_t max_data = 0;
  bool operator==(const MaxDataFrame&) const = default;
};

using AnyFrame = std::variant<AnnounceFrame, JoinFrame, LeaveFrame, RetireFrame, StateFrame,
                              IntegrityFrame, KeyFrame, AckFrame, LimitsFrame, StreamFrame,
                              MaxDataFrame>;

enum class DecodeStatus {
  Ok,
  NotMcFrame,  // codepoint outside our table; caller falls through
  Malformed,   // framing error inside a recognized frame; connection-fatal
  Truncated,   // input ended mid-frame
};

namespace detail {

inline void write_cid(ByteWriter& w, const ChannelId& cid) {
  write_varint(w, cid.size());
  w.raw(cid.bytes());
}

inline bool read_cid(ByteReader& r, ChannelId& cid, DecodeStatus& err) {
  uint64_t len;
  if (!read_varint(r, len)) {
    err = DecodeStatus::Truncated;
    return false;
  }
  if (len < ChannelId::kMinLen || len > ChannelId::kMaxLen) {
    err = DecodeStatus::Malformed;
    return false;
  }
  Bytes b;
  if (!r.raw_copy(len, b)) {
    err = DecodeStatus::Truncated;
    return false;
  }
  cid = ChannelId(std::move(b));
  return true;
}

inline void write_len_bytes(ByteWriter& w, ByteSpan b) {
  write_varint(w, b.size());
  w.raw(b);
}

}  // namespace detail

// Shared body used by the MC_LIMITS frame and the client transport parameter.
inline void encode_limits_body(const ClientLimits& l, Bytes& out) {
  l.validate();
  ByteWriter w(out);
  uint64_t flags = (l.allow_ipv4 ? 1u : 0u) | (l.allow_ipv6 ? 2u : 0u);
  write_varint(w, flags);
  write_varint(w, l.supported_hash_ids.size());
  for (uint16_t id : l.supported_hash_ids) w.u16(id);
  write_varint(w, l.supported_aead_ids.size());
  for (uint16_t id : l.supported_aead_ids) w.u16(id);
  write_varint(w, l.max_aggregate_rate_kbps);
  write_varint(w, l.max_channels_announced);
  write_varint(w, l.max_channels_joined);
}

inline DecodeStatus decode_limits_body(ByteReader& r, ClientLimits& l) {
  uint64_t flags, nh, na;
  if (!read_varint(r, flags)) return DecodeStatus::Truncated;
  if (flags > 3) return DecodeStatus::Malformed;
  l.allow_ipv4 = flags & 1;
  l.allow_ipv6 = flags & 2;
  if (!read_varint(r, nh)) return DecodeStatus::Truncated;
  if (nh == 0 || nh > 64) return DecodeStatus::Malformed;
  l.supported_hash_ids.clear();
  for (uint64_t i = 0; i < nh; ++i) {
    uint16_t id;
    if (!r.u16(id)) return DecodeStatus::Truncated;
    l.supported_hash_ids.push_back(id);
  }
  if (!read_varint(r, na)) return DecodeStatus::Truncated;
  if (na == 0 || na > 64) return DecodeStatus::Malformed;
  l.supported_aead_ids.clear();
  for (uint64_t i = 0; i < na; ++i) {
    uint16_t id;
    if (!r.u16(id)) return DecodeStatus::Truncated;
    l.supported_aead_ids.push_back(id);
  }
  if (!read_varint(r, l.max_aggregate_rate_kbps)) return DecodeStatus::Truncated;
  if (!read_varint(r, l.max_channels_announced)) return DecodeStatus::Truncated;
  if (!read_varint(r, l.max_channels_joined)) return DecodeStatus::Truncated;
  if (!l.allow_ipv4 && !l.allow_ipv6) return DecodeStatus::Malformed;
  if (l.max_channels_joined > l.max_channels_announced) return DecodeStatus::Malformed;
  return DecodeStatus::Ok;
}

inline void encode_frame(const AnnounceFrame& f, Bytes& out) {
  if (f.family != 4 && f.family != 6) throw std::invalid_argument("announce family must be 4 or 6");
  size_t iplen = f.family == 4 ? 4 : 16;
  if (f.source_ip.size() != iplen || f.group_ip.size() != iplen)
    throw std::invalid_argument("announce address length does not match family");
  if (f.header_secret.size() < kMinSecretLen || f.header_secret.size() > kMaxSecretLen)
    throw std::invalid_argument("announce header secret length out of bounds");
  if (f.max_rate_kbps == 0) throw std::invalid_argument("announce max_rate_kbps must be > 0");
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Announce));
  detail::write_cid(w, f.channel_id);
  w.u8(f.family);
  w.raw(f.source_ip);
  w.raw(f.group_ip);
  w.u16(f.udp_port);
  w.u16(f.aead_id);
  w.u16(f.hash_id);
  detail::write_len_bytes(w, f.header_secret);
  write_varint(w, f.max_rate_kbps);
}

inline void encode_frame(const JoinFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Join));
  detail::write_cid(w, f.channel_id);
}

inline void encode_frame(const LeaveFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Leave));
  detail::write_cid(w, f.channel_id);
  write_varint(w, f.reason_code);
}

inline void encode_frame(const RetireFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Retire));
  detail::write_cid(w, f.channel_id);
}

inline void encode_frame(const StateFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::State));
  detail::write_cid(w, f.channel_id);
  write_varint(w, f.new_state);
  write_varint(w, f.reason_code);
}

inline void encode_frame(const IntegrityFrame& f, Bytes& out) {
  if (f.digests.empty()) throw std::invalid_argument("integrity frame needs at least one digest");
  size_t dsize = f.digests.front().size();
  if (dsize == 0 || dsize > 64) throw std::invalid_argument("integrity digest size out of bounds");
  for (const auto& d : f.digests)
    if (d.size() != dsize) throw std::invalid_argument("integrity digests must share one size");
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Integrity));
  detail::write_cid(w, f.channel_id);
  write_varint(w, f.start_packet_number);
  write_varint(w, dsize);
  write_varint(w, f.digests.size());
  for (const auto& d : f.digests) w.raw(d);
}

inline void encode_frame(const KeyFrame& f, Bytes& out) {
  if (f.secret.size() < kMinSecretLen || f.secret.size() > kMaxSecretLen)
    throw std::invalid_argument("key frame secret length out of bounds");
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Key));
  detail::write_cid(w, f.channel_id);
  write_varint(w, f.from_packet_number);
  detail::write_len_bytes(w, f.secret);
}

inline void encode_frame(const AckFrame& f, Bytes& out) {
  if (f.ranges.empty()) throw std::invalid_argument("ack frame must acknowledge at least one packet");
  for (size_t i = 0; i < f.ranges.size(); ++i) {
    const AckRange& r = f.ranges[i];
    if (r.count == 0) throw std::invalid_argument("ack range count must be >= 1");
    if (r.count - 1 > r.largest) throw std::invalid_argument("ack range underflows zero");
    if (i > 0) {
      // Strictly descending with a gap of at least one packet between ranges.
      if (r.largest + 1 >= f.ranges[i - 1].smallest())
        throw std::invalid_argument("ack ranges must be descending and non-adjacent");
    }
  }
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Ack));
  detail::write_cid(w, f.channel_id);
  write_varint(w, f.ack_delay_us);
  write_varint(w, f.ranges.size());
  write_varint(w, f.ranges[0].largest);
  write_varint(w, f.ranges[0].count - 1);
  for (size_t i = 1; i < f.ranges.size(); ++i) {
    uint64_t gap = f.ranges[i - 1].smallest() - f.ranges[i].largest - 2;
    write_varint(w, gap);
    write_varint(w, f.ranges[i].count - 1);
  }
}

inline void encode_frame(const LimitsFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, static_cast<uint64_t>(McFrameType::Limits));
  encode_limits_body(f.limits, out);
}

inline void encode_frame(const McFrame& f, Bytes& out) {
  std::visit([&](const auto& v) { encode_frame(v, out); }, f);
}

inline Bytes encode_frame(const McFrame& f) {
  Bytes out;
  encode_frame(f, out);
  return out;
}

// Substrate frames.
inline void encode_frame(const StreamFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, kFrameStream);
  write_varint(w, f.stream_id);
  write_varint(w, f.offset);
  write_varint(w, f.data.size());
  w.raw(f.data);
}

inline void encode_frame(const MaxDataFrame& f, Bytes& out) {
  ByteWriter w(out);
  write_varint(w, kFrameMaxData);
  write_varint(w, f.max_data);
}

inline void encode_frame(const AnyFrame& f, Bytes& out) {
  std::visit([&](const auto& v) { encode_frame(v, out); }, f);
}

inline AnyFrame to_any(const McFrame& f) {
  return std::visit([](const auto& v) -> AnyFrame { return v; }, f);
}

namespace detail {

inline DecodeStatus decode_body(McFrameType type, ByteReader& r, McFrame& out) {
  DecodeStatus err = DecodeStatus::Malformed;
  switch (type) {
    case McFrameType::Announce: {
      AnnounceFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      if (!r.u8(f.family)) return DecodeStatus::Truncated;
      if (f.family != 4 && f.family != 6) return DecodeStatus::Malformed;
      size_t iplen = f.family == 4 ? 4 : 16;
      if (!r.raw_copy(iplen, f.source_ip)) return DecodeStatus::Truncated;
      if (!r.raw_copy(iplen, f.group_ip)) return DecodeStatus::Truncated;
      if (!r.u16(f.udp_port)) return DecodeStatus::Truncated;
      if (!r.u16(f.aead_id)) return DecodeStatus::Truncated;
      if (!r.u16(f.hash_id)) return DecodeStatus::Truncated;
      uint64_t slen;
      if (!read_varint(r, slen)) return DecodeStatus::Truncated;
      if (slen < kMinSecretLen || slen > kMaxSecretLen) return DecodeStatus::Malformed;
      if (!r.raw_copy(slen, f.header_secret)) return DecodeStatus::Truncated;
      if (!read_varint(r, f.max_rate_kbps)) return DecodeStatus::Truncated;
      if (f.max_rate_kbps == 0) return DecodeStatus::Malformed;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Join: {
      JoinFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Leave: {
      LeaveFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      if (!read_varint(r, f.reason_code)) return DecodeStatus::Truncated;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Retire: {
      RetireFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::State: {
      StateFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      if (!read_varint(r, f.new_state)) return DecodeStatus::Truncated;
      if (f.new_state > static_cast<uint64_t>(ChannelState::Retired)) return DecodeStatus::Malformed;
      if (!read_varint(r, f.reason_code)) return DecodeStatus::Truncated;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Integrity: {
      IntegrityFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      if (!read_varint(r, f.start_packet_number)) return DecodeStatus::Truncated;
      uint64_t dsize, count;
      if (!read_varint(r, dsize)) return DecodeStatus::Truncated;
      if (dsize == 0 || dsize > 64) return DecodeStatus::Malformed;
      if (!read_varint(r, count)) return DecodeStatus::Truncated;
      if (count == 0) return DecodeStatus::Malformed;
      if (count > kVarIntMax - f.start_packet_number) return DecodeStatus::Malformed;
      // The digest area must be exactly count * dsize bytes; anything shorter
      // that is not a whole number of digests is a framing error.
      if (count * dsize > r.remaining())
        return (r.remaining() % dsize == 0) ? DecodeStatus::Truncated : DecodeStatus::Malformed;
      for (uint64_t i = 0; i < count; ++i) {
        Bytes d;
        if (!r.raw_copy(dsize, d)) return DecodeStatus::Truncated;
        f.digests.push_back(std::move(d));
      }
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Key: {
      KeyFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      if (!read_varint(r, f.from_packet_number)) return DecodeStatus::Truncated;
      uint64_t slen;
      if (!read_varint(r, slen)) return DecodeStatus::Truncated;
      if (slen < kMinSecretLen || slen > kMaxSecretLen) return DecodeStatus::Malformed;
      if (!r.raw_copy(slen, f.secret)) return DecodeStatus::Truncated;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Ack: {
      AckFrame f;
      if (!read_cid(r, f.channel_id, err)) return err;
      if (!read_varint(r, f.ack_delay_us)) return DecodeStatus::Truncated;
      uint64_t nranges, largest, first_len;
      if (!read_varint(r, nranges)) return DecodeStatus::Truncated;
      if (nranges == 0) return DecodeStatus::Malformed;
      if (!read_varint(r, largest)) return DecodeStatus::Truncated;
      if (!read_varint(r, first_len)) return DecodeStatus::Truncated;
      if (first_len > largest) return DecodeStatus::Malformed;
      f.ranges.push_back(AckRange{largest, first_len + 1});
      for (uint64_t i = 1; i < nranges; ++i) {
        uint64_t gap, len;
        if (!read_varint(r, gap)) return DecodeStatus::Truncated;
        if (!read_varint(r, len)) return DecodeStatus::Truncated;
        uint64_t prev_smallest = f.ranges.back().smallest();
        if (prev_smallest < gap + 2) return DecodeStatus::Malformed;
        uint64_t next_largest = prev_smallest - gap - 2;
        if (len > next_largest) return DecodeStatus::Malformed;
        f.ranges.push_back(AckRange{next_largest, len + 1});
      }
      out = std::move(f);
      return DecodeStatus::Ok;
    }
    case McFrameType::Limits: {
      LimitsFrame f;
      DecodeStatus st = decode_limits_body(r, f.limits);
      if (st != DecodeStatus::Ok) return st;
      out = std::move(f);
      return DecodeStatus::Ok;
    }
  }
  return DecodeStatus::NotMcFrame;
}

}  // namespace detail

// Decodes one extension frame. An unrecognized codepoint yields NotMcFrame
// with nothing consumed so the caller can fall through to other handling.
inline DecodeStatus decode_frame(ByteSpan in, McFrame& out, size_t& consumed) {
  consumed = 0;
  auto cp = decode_varint(in);
  if (!cp) return in.empty() ? DecodeStatus::Truncated : DecodeStatus::Truncated;
  if (cp->value < kMcFrameBase || cp->value > static_cast<uint64_t>(McFrameType::Limits))
    return DecodeStatus::NotMcFrame;
  ByteReader r(in.subspan(cp->consumed));
  DecodeStatus st = detail::decode_body(static_cast<McFrameType>(cp->value), r, out);
  if (st == DecodeStatus::Ok) consumed = cp->consumed + r.consumed();
  return st;
}

// Decodes one frame of any kind the engine understands. Padding bytes are
// consumed and reported via `padding`.
inline DecodeStatus decode_any_frame(ByteSpan in, AnyFrame& out, size_t& consumed) {
  consumed = 0;
  auto cp = decode_varint(in);
  if (!cp) return DecodeStatus::Truncated;
  if (cp->value >= kMcFrameBase && cp->value <= static_cast<uint64_t>(McFrameType::Limits)) {
    McFrame mc;
    DecodeStatus st = decode_frame(in, mc, consumed);
    if (st == DecodeStatus::Ok) std::visit([&](auto&& v) { out = std::move(v); }, std::move(mc));
    return st;
  }
  ByteReader r(in.subspan(cp->consumed));
  switch (cp->value) {
    case kFrameStream: {
      StreamFrame f;
      if (!read_varint(r, f.stream_id)) return DecodeStatus::Truncated;
      if (!read_varint(r, f.offset)) return DecodeStatus::Truncated;
      uint64_t len;
      if (!read_varint(r, len)) return DecodeStatus::Truncated;
      if (f.offset > kVarIntMax - len) return DecodeStatus::Malformed;
      if (!r.raw_copy(len, f.data)) return DecodeStatus::Truncated;
      out = std::move(f);
      consumed = cp->consumed + r.consumed();
      return DecodeStatus::Ok;
    }
    case kFrameMaxData: {
      MaxDataFrame f;
      if (!read_varint(r, f.max_data)) return DecodeStatus::Truncated;
      out = std::move(f);
      consumed = cp->consumed + r.consumed();
      return DecodeStatus::Ok;
    }
    default:
      return DecodeStatus::NotMcFrame;
  }
}

// Parses a packet payload into frames, skipping padding. Returns nullopt on
// any framing error (malformed, truncated, or unknown codepoint).
inline std::optional<std::vector<AnyFrame>> parse_payload(ByteSpan payload) {
  std::vector<AnyFrame> frames;
  size_t pos = 0;
  while (pos < payload.size()) {
    if (payload[pos] == kFramePadding) {
      ++pos;
      continue;
    }
    AnyFrame f;
    size_t consumed = 0;
    if (decode_any_frame(payload.subspan(pos), f, consumed) != DecodeStatus::Ok)
      return std::nullopt;
    frames.push_back(std::move(f));
    pos += consumed;
  }
  return frames;
}

// Transport parameters: a sequence of (id, length, value) entries. Unknown
// ids are skipped; a duplicated multicast parameter is a protocol error.
enum class Side { Client, Server };

inline Bytes encode_transport_params(const TransportParams& p, Side side) {
  Bytes out;
  ByteWriter w(out);
  if (side == Side::Server && p.server_multicast_supported) {
    write_varint(w, kTpServerMulticast);
    write_varint(w, 0);
  }
  if (side == Side::Client && p.client_params_present) {
    Bytes body;
    encode_limits_body(p.client_limits, body);
    write_varint(w, kTpClientMulticast);
    write_varint(w, body.size());
    w.raw(body);
  }
  return out;
}

inline DecodeStatus decode_transport_params(ByteSpan in, Side sender, TransportParams& out) {
  out = TransportParams{};
  ByteReader r(in);
  bool seen_mc = false;
  while (!r.empty()) {
    uint64_t id, len;
    if (!read_varint(r, id)) return DecodeStatus::Truncated;
    if (!read_varint(r, len)) return DecodeStatus::Truncated;
    ByteSpan value;
    if (!r.raw(len, value)) return DecodeStatus::Truncated;
    if (id == kTpServerMulticast && sender == Side::Server) {
      if (seen_mc) return DecodeStatus::Malformed;  // duplicate parameter
      seen_mc = true;
      if (len != 0) return DecodeStatus::Malformed;
      out.server_multicast_supported = true;
    } else if (id == kTpClientMulticast && sender == Side::Client) {
      if (seen_mc) return DecodeStatus::Malformed;
      seen_mc = true;
      ByteReader br(value);
      DecodeStatus st = decode_limits_body(br, out.client_limits);
      if (st != DecodeStatus::Ok) return DecodeStatus::Malformed;
      if (!br.empty()) return DecodeStatus::Malformed;
      out.client_params_present = true;
    }
    // Unknown parameter ids are skipped.
  }
  return DecodeStatus::Ok;
}

}  // namespace mcquic
