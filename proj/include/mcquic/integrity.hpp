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

#include <map>

#include "mcquic/crypto.hpp"
#include "mcquic/frames.hpp"
#include "mcquic/types.hpp"

namespace mcquic {

// A stored digest conflicts with a newly asserted one for the same packet.
// The channel is considered poisoned; the client should leave it.
class IntegrityConflict : public ProtocolError {
 public:
  explicit IntegrityConflict(const std::string& what) : ProtocolError(what) {}
};

enum class IntegrityVerdict { Verified, Unknown, Mismatch };

inline const char* to_string(IntegrityVerdict v) {
  switch (v) {
    case IntegrityVerdict::Verified: return "verified";
    case IntegrityVerdict::Unknown: return "unknown";
    case IntegrityVerdict::Mismatch: return "mismatch";
  }
  return "?";
}

// Verified-hash ledger: (channel, packet number) -> expected digest.
// Entries are admitted only from a trusted context — the unicast connection
// or a multicast packet that itself verified — which keeps every stored
// digest anchored to the authenticated connection.
class IntegrityStore {
 public:
  void open_channel(const ChannelId& cid, HashAlgorithmId hash) {
    channels_[cid].hash = hash;
  }

  void drop_channel(const ChannelId& cid) { channels_.erase(cid); }

  bool has_channel(const ChannelId& cid) const { return channels_.count(cid) != 0; }

  // Stores the frame's digests iff the context is trusted. Returns the
  // number of new entries; re-asserting an identical digest is idempotent.
  size_t add(const IntegrityFrame& frame, bool trusted_context) {
    auto it = channels_.find(frame.channel_id);
    if (it == channels_.end()) throw ProtocolError("integrity frame for unknown channel");
    if (!trusted_context) return 0;
    Ledger& ledger = it->second;
    size_t expected = digest_size(ledger.hash);
    if (frame.digests.empty() || frame.digests.front().size() != expected)
      throw ProtocolError("integrity digest size does not match channel hash");
    size_t added = 0;
    uint64_t pn = frame.start_packet_number;
    for (const auto& d : frame.digests) {
      auto [pos, inserted] = ledger.digests.emplace(pn, d);
      if (!inserted && pos->second != d)
        throw IntegrityConflict("conflicting digest for packet " + std::to_string(pn));
      if (inserted) ++added;
      ++pn;
    }
    return added;
  }

  IntegrityVerdict verify(const ChannelId& cid, uint64_t pn, ByteSpan datagram) const {
    auto it = channels_.find(cid);
    if (it == channels_.end()) return IntegrityVerdict::Unknown;
    auto dit = it->second.digests.find(pn);
    if (dit == it->second.digests.end()) return IntegrityVerdict::Unknown;
    Bytes actual = compute_packet_digest(it->second.hash, datagram);
    return actual == dit->second ? IntegrityVerdict::Verified : IntegrityVerdict::Mismatch;
  }

  bool has_digest(const ChannelId& cid, uint64_t pn) const {
    auto it = channels_.find(cid);
    return it != channels_.end() && it->second.digests.count(pn) != 0;
  }

  size_t entry_count(const ChannelId& cid) const {
    auto it = channels_.find(cid);
    return it == channels_.end() ? 0 : it->second.digests.size();
  }

 private:
  struct Ledger {
    HashAlgorithmId hash = HashAlgorithmId::Sha256;
    std::map<uint64_t, Bytes> digests;
  };
  std::map<ChannelId, Ledger> channels_;
};

}  // namespace mcquic
