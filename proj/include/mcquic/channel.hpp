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

#include "mcquic/frames.hpp"
#include "mcquic/interval_set.hpp"
#include "mcquic/types.hpp"

namespace mcquic {

// SSM group ranges: 232.0.0.0/8 for IPv4, ff3x::/32 for IPv6.
inline bool is_ssm_group(uint8_t family, ByteSpan addr) {
  if (family == 4) return addr.size() == 4 && addr[0] == 232;
  if (family == 6) return addr.size() == 16 && addr[0] == 0xff && (addr[1] & 0xf0) == 0x30;
  return false;
}

// Everything a client needs to join and decrypt one SSM channel. Immutable
// after announcement.
struct ChannelDescriptor {
  ChannelId channel_id;
  uint8_t family = 4;
  Bytes source_ip;
  Bytes group_ip;
  uint16_t udp_port = 0;
  AeadAlgorithmId aead_id = AeadAlgorithmId::Aes128Gcm;
  HashAlgorithmId hash_id = HashAlgorithmId::Sha256;
  Bytes header_secret;
  uint64_t max_rate_kbps = 0;

  bool operator==(const ChannelDescriptor&) const = default;

  void validate() const {
    if (!is_ssm_group(family, group_ip))
      throw std::invalid_argument("group address is not a valid SSM group for its family");
    if (max_rate_kbps == 0) throw std::invalid_argument("channel rate must be positive");
    if (!hash_supported(static_cast<uint16_t>(hash_id)) ||
        !aead_supported(static_cast<uint16_t>(aead_id)))
      throw std::invalid_argument("unsupported channel algorithms");
  }

  static ChannelDescriptor from_announce(const AnnounceFrame& f) {
    ChannelDescriptor d;
    d.channel_id = f.channel_id;
    d.family = f.family;
    d.source_ip = f.source_ip;
    d.group_ip = f.group_ip;
    d.udp_port = f.udp_port;
    d.aead_id = static_cast<AeadAlgorithmId>(f.aead_id);
    d.hash_id = static_cast<HashAlgorithmId>(f.hash_id);
    d.header_secret = f.header_secret;
    d.max_rate_kbps = f.max_rate_kbps;
    return d;
  }

  AnnounceFrame to_announce() const {
    AnnounceFrame f;
    f.channel_id = channel_id;
    f.family = family;
    f.source_ip = source_ip;
    f.group_ip = group_ip;
    f.udp_port = udp_port;
    f.aead_id = static_cast<uint16_t>(aead_id);
    f.hash_id = static_cast<uint16_t>(hash_id);
    f.header_secret = header_secret;
    f.max_rate_kbps = max_rate_kbps;
    return f;
  }
};

enum class ChannelEvent {
  Announce,
  JoinRequested,   // server asked and the client accepted immediately
  JoinAccepted,    // deferred acceptance of an earlier request
  JoinDeclined,
  PacketsFlowing,  // first verified packet / membership confirmed
  LeaveRequested,  // server-instructed leave
  Left,            // client-initiated leave
  Retire,
};

inline const char* to_string(ChannelEvent e) {
  switch (e) {
    case ChannelEvent::Announce: return "announce";
    case ChannelEvent::JoinRequested: return "join_requested";
    case ChannelEvent::JoinAccepted: return "join_accepted";
    case ChannelEvent::JoinDeclined: return "join_declined";
    case ChannelEvent::PacketsFlowing: return "packets_flowing";
    case ChannelEvent::LeaveRequested: return "leave_requested";
    case ChannelEvent::Left: return "left";
    case ChannelEvent::Retire: return "retire";
  }
  return "?";
}

// Client-side lifecycle transitions. The table:
//   Announced | Left | DeclinedJoin --announce--> (unchanged, idempotent)
//   Announced | Left | DeclinedJoin --join_requested/join_accepted--> JoinPending
//   Announced | Left | DeclinedJoin --join_declined--> DeclinedJoin
//   JoinPending --packets_flowing--> Joined
//   JoinPending | Joined --leave_requested/left--> Left
//   Announced | DeclinedJoin | Left --retire--> Retired
// Retiring a joined or join-pending channel is illegal (leave first), and
// Retired is terminal. Everything else is a protocol violation.
inline std::optional<ChannelState> transition(ChannelState state, ChannelEvent event) {
  using S = ChannelState;
  using E = ChannelEvent;
  bool idle = state == S::Announced || state == S::Left || state == S::DeclinedJoin;
  switch (event) {
    case E::Announce:
      if (idle) return state;
      return std::nullopt;
    case E::JoinRequested:
    case E::JoinAccepted:
      if (idle) return S::JoinPending;
      return std::nullopt;
    case E::JoinDeclined:
      if (idle) return S::DeclinedJoin;
      return std::nullopt;
    case E::PacketsFlowing:
      if (state == S::JoinPending) return S::Joined;
      return std::nullopt;
    case E::LeaveRequested:
    case E::Left:
      if (state == S::JoinPending || state == S::Joined) return S::Left;
      return std::nullopt;
    case E::Retire:
      if (idle) return S::Retired;
      return std::nullopt;
  }
  return std::nullopt;
}

// Stateful wrapper; illegal transitions throw.
class ChannelStateMachine {
 public:
  ChannelStateMachine() = default;

  ChannelState state() const { return state_; }

  ChannelState apply(ChannelEvent event) {
    auto next = transition(state_, event);
    if (!next)
      throw ProtocolError(std::string("illegal channel transition: ") + to_string(state_) +
                          " on " + to_string(event));
    state_ = *next;
    return state_;
  }

  bool can_apply(ChannelEvent event) const { return transition(state_, event).has_value(); }

 private:
  ChannelState state_ = ChannelState::Announced;
};

// Per-channel receive accounting: duplicate detection and ack-eligible
// ranges. Each channel has its own space, disjoint from every other.
class PacketNumberSpace {
 public:
  enum class Record { New, Duplicate };

  Record record_received(uint64_t pn) {
    if (received_.contains(pn)) return Record::Duplicate;
    received_.add_point(pn);
    if (!any_ || pn > largest_) largest_ = pn;
    any_ = true;
    return Record::New;
  }

  bool seen(uint64_t pn) const { return received_.contains(pn); }
  bool any() const { return any_; }
  uint64_t largest_received() const { return largest_; }
  uint64_t expected_next() const { return any_ ? largest_ + 1 : 0; }
  const IntervalSet& received() const { return received_; }

 private:
  IntervalSet received_;
  uint64_t largest_ = 0;
  bool any_ = false;
};

}  // namespace mcquic
