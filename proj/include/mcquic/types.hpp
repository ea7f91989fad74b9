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

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcquic/bytes.hpp"

namespace mcquic {

// Connection-fatal protocol violation (illegal state transition, frame for an
// unknown channel, duplicate transport parameter, ...).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario / configuration problems. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// End-of-run invariant failures. CLI maps these to exit code 1.
class InvariantViolation : public std::runtime_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

// Identifier occupying the connection-ID slot of multicast packet headers.
// Opaque 1..20 bytes.
class ChannelId {
 public:
  static constexpr size_t kMinLen = 1;
  static constexpr size_t kMaxLen = 20;

  ChannelId() = default;
  explicit ChannelId(Bytes bytes) : bytes_(std::move(bytes)) {
    if (bytes_.size() < kMinLen || bytes_.size() > kMaxLen)
      throw std::invalid_argument("channel id length must be 1..20");
  }
  static ChannelId from_hex(std::string_view hex) { return ChannelId(mcquic::from_hex(hex)); }

  const Bytes& bytes() const { return bytes_; }
  size_t size() const { return bytes_.size(); }
  std::string hex() const { return to_hex(bytes_); }

  friend bool operator==(const ChannelId& a, const ChannelId& b) = default;
  friend auto operator<=>(const ChannelId& a, const ChannelId& b) = default;

 private:
  Bytes bytes_;
};

// Algorithm identifiers follow the TLS registries: hashes use the
// HashAlgorithm codes, AEADs the cipher-suite codes.
enum class HashAlgorithmId : uint16_t {
  Sha1 = 0x0002,
  Sha256 = 0x0004,
};

enum class AeadAlgorithmId : uint16_t {
  Aes128Gcm = 0x1301,
};

inline size_t digest_size(HashAlgorithmId id) {
  switch (id) {
    case HashAlgorithmId::Sha1: return 20;
    case HashAlgorithmId::Sha256: return 32;
  }
  return 0;
}

inline bool hash_supported(uint16_t code) {
  return code == static_cast<uint16_t>(HashAlgorithmId::Sha1) ||
         code == static_cast<uint16_t>(HashAlgorithmId::Sha256);
}

inline bool aead_supported(uint16_t code) {
  return code == static_cast<uint16_t>(AeadAlgorithmId::Aes128Gcm);
}

// Reason codes carried in MC_LEAVE and MC_STATE frames.
enum class ReasonCode : uint64_t {
  None = 0,
  ServerInstructed = 1,
  RateExceeded = 2,
  HighLoss = 3,
  SpuriousTraffic = 4,
  FlowControl = 5,
  FamilyUnsupported = 6,
  AlgorithmUnsupported = 7,
  ChannelLimit = 8,
  AppRequest = 9,
};

// Channel lifecycle states, client perspective.
enum class ChannelState : uint64_t {
  Announced = 0,
  JoinPending = 1,
  Joined = 2,
  DeclinedJoin = 3,
  Left = 4,
  Retired = 5,
};

inline const char* to_string(ChannelState s) {
  switch (s) {
    case ChannelState::Announced: return "announced";
    case ChannelState::JoinPending: return "join_pending";
    case ChannelState::Joined: return "joined";
    case ChannelState::DeclinedJoin: return "declined";
    case ChannelState::Left: return "left";
    case ChannelState::Retired: return "retired";
  }
  return "?";
}

inline const char* to_string(ReasonCode r) {
  switch (r) {
    case ReasonCode::None: return "none";
    case ReasonCode::ServerInstructed: return "server_instructed";
    case ReasonCode::RateExceeded: return "rate_exceeded";
    case ReasonCode::HighLoss: return "high_loss";
    case ReasonCode::SpuriousTraffic: return "spurious_traffic";
    case ReasonCode::FlowControl: return "flow_control";
    case ReasonCode::FamilyUnsupported: return "family_unsupported";
    case ReasonCode::AlgorithmUnsupported: return "algorithm_unsupported";
    case ReasonCode::ChannelLimit: return "channel_limit";
    case ReasonCode::AppRequest: return "app_request";
  }
  return "?";
}

// Client-declared multicast capabilities and budget. Carried in the client
// transport parameter and in MC_LIMITS frames.
struct ClientLimits {
  bool allow_ipv4 = true;
  bool allow_ipv6 = false;
  std::vector<uint16_t> supported_hash_ids = {static_cast<uint16_t>(HashAlgorithmId::Sha256)};
  std::vector<uint16_t> supported_aead_ids = {static_cast<uint16_t>(AeadAlgorithmId::Aes128Gcm)};
  uint64_t max_aggregate_rate_kbps = 0;
  uint64_t max_channels_announced = 0;
  uint64_t max_channels_joined = 0;

  bool operator==(const ClientLimits&) const = default;

  // Invariants from the negotiation rules; call before encoding or applying.
  void validate() const {
    if (!allow_ipv4 && !allow_ipv6)
      throw std::invalid_argument("at least one address family must be allowed");
    if (supported_hash_ids.empty() || supported_aead_ids.empty())
      throw std::invalid_argument("supported algorithm lists must be non-empty");
    if (max_channels_joined > max_channels_announced)
      throw std::invalid_argument("max_channels_joined exceeds max_channels_announced");
  }
};

// Negotiated per-connection multicast capabilities.
struct TransportParams {
  bool server_multicast_supported = false;
  bool client_params_present = false;
  ClientLimits client_limits;
};

}  // namespace mcquic
