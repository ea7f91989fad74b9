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

#include "mcquic/crypto.hpp"
#include "mcquic/types.hpp"
#include "mcquic/varint.hpp"

// Multicast packet layout:
//   byte 0   flags: bits 7-5 = 0b101 marker (clear), bits 4-2 reserved
//            (protected), bits 1-0 = pn_len - 1 (protected)
//   [1..]    channel id, raw (length known from the announcement)
//   [..]     packet number, pn_len bytes big-endian, truncated, protected
//   [..]     AEAD ciphertext || tag
// Header protection samples 16 ciphertext bytes at pn_offset + 4 and masks
// the low five flag bits plus the packet-number bytes.

namespace mcquic {

inline constexpr uint8_t kMcPacketMarker = 0xa0;  // 0b101 in the top three bits
inline constexpr uint8_t kMarkerMask = 0xe0;
inline constexpr size_t kHeaderSampleLen = 16;
inline constexpr size_t kAeadTagLen = 16;

struct MulticastPacketHeader {
  ChannelId channel_id;
  uint64_t packet_number = 0;
  size_t pn_len = 4;  // 1..4 bytes on the wire
};

inline bool looks_like_multicast_packet(ByteSpan datagram) {
  return !datagram.empty() && (datagram[0] & kMarkerMask) == kMcPacketMarker;
}

// Truncated packet-number encoding, low `pn_len` bytes.
inline void encode_packet_number(uint64_t pn, size_t pn_len, Bytes& out) {
  if (pn_len < 1 || pn_len > 4) throw std::invalid_argument("pn_len must be 1..4");
  for (size_t i = 0; i < pn_len; ++i)
    out.push_back(static_cast<uint8_t>(pn >> (8 * (pn_len - 1 - i))));
}

// Recovers the full packet number closest to expected_pn, standard window
// rule: the candidate within +-win/2 of the next expected number.
inline uint64_t decode_packet_number(uint64_t truncated, size_t pn_len, uint64_t expected_pn) {
  uint64_t win = uint64_t{1} << (pn_len * 8);
  uint64_t hwin = win / 2;
  uint64_t mask = win - 1;
  uint64_t candidate = (expected_pn & ~mask) | truncated;
  if (candidate + hwin <= expected_pn && candidate + win <= kVarIntMax) return candidate + win;
  if (candidate > expected_pn + hwin && candidate >= win) return candidate - win;
  return candidate;
}

// Smallest payload that leaves enough ciphertext for the protection sample.
inline size_t min_protect_payload(size_t pn_len) {
  size_t need = 4 - pn_len;  // ciphertext beyond the tag that the sample needs
  return need;
}

// Seals and header-protects one multicast packet. `payload` is the frame
// bytes; the caller pads it to min_protect_payload and the datagram budget.
inline Bytes protect_packet(const ChannelKeys& keys, ByteSpan header_key,
                            const MulticastPacketHeader& hdr, ByteSpan payload,
                            size_t max_datagram_size) {
  if (hdr.pn_len < 1 || hdr.pn_len > 4) throw std::invalid_argument("pn_len must be 1..4");
  if (payload.size() < min_protect_payload(hdr.pn_len))
    throw std::invalid_argument("payload too short for header-protection sample");

  Bytes datagram;
  datagram.push_back(static_cast<uint8_t>(kMcPacketMarker | ((hdr.pn_len - 1) & 0x03)));
  datagram.insert(datagram.end(), hdr.channel_id.bytes().begin(), hdr.channel_id.bytes().end());
  size_t pn_offset = datagram.size();
  encode_packet_number(hdr.packet_number, hdr.pn_len, datagram);

  Bytes nonce = packet_nonce(keys.iv, hdr.packet_number);
  Bytes ct = aead_seal(keys.aead_key, nonce, datagram, payload);
  if (datagram.size() + ct.size() > max_datagram_size)
    throw std::length_error("protected packet exceeds max datagram size");
  datagram.insert(datagram.end(), ct.begin(), ct.end());

  // Apply header protection.
  ByteSpan sample(datagram.data() + pn_offset + 4, kHeaderSampleLen);
  Bytes mask = header_protection_mask(header_key, sample);
  datagram[0] ^= mask[0] & 0x1f;
  for (size_t i = 0; i < hdr.pn_len; ++i) datagram[pn_offset + i] ^= mask[1 + i];
  return datagram;
}

enum class UnprotectStatus {
  Ok,
  Malformed,     // too short / impossible structure
  NoKey,         // no secret covers this packet number
  DecryptFail,   // AEAD authentication failed
};

struct UnprotectedPacket {
  uint64_t packet_number = 0;
  size_t pn_len = 0;
  Bytes payload;
  uint64_t key_boundary = 0;  // from_packet_number of the secret that applied
};

// Removes header protection in place and recovers the packet number.
// `expected_pn` is largest_received + 1 for the channel (0 for a fresh one).
inline UnprotectStatus remove_header_protection(ByteSpan header_key, Bytes& datagram,
                                                size_t cid_len, uint64_t expected_pn,
                                                MulticastPacketHeader& hdr_out,
                                                size_t& header_len_out) {
  size_t pn_offset = 1 + cid_len;
  if (datagram.size() < pn_offset + 4 + kHeaderSampleLen) return UnprotectStatus::Malformed;
  if ((datagram[0] & kMarkerMask) != kMcPacketMarker) return UnprotectStatus::Malformed;

  ByteSpan sample(datagram.data() + pn_offset + 4, kHeaderSampleLen);
  Bytes mask = header_protection_mask(header_key, sample);
  datagram[0] ^= mask[0] & 0x1f;
  size_t pn_len = (datagram[0] & 0x03) + 1;
  for (size_t i = 0; i < pn_len; ++i) datagram[pn_offset + i] ^= mask[1 + i];

  uint64_t truncated = 0;
  for (size_t i = 0; i < pn_len; ++i) truncated = (truncated << 8) | datagram[pn_offset + i];
  hdr_out.channel_id = ChannelId(Bytes(datagram.begin() + 1, datagram.begin() + 1 + cid_len));
  hdr_out.pn_len = pn_len;
  hdr_out.packet_number = decode_packet_number(truncated, pn_len, expected_pn);
  header_len_out = pn_offset + pn_len;
  return UnprotectStatus::Ok;
}

// Full unprotect: header first with the static header key, then the secret
// whose boundary covers the recovered packet number.
inline UnprotectStatus unprotect_packet(const SecretStore& secrets, AeadAlgorithmId aead,
                                        ByteSpan header_key, ByteSpan datagram, size_t cid_len,
                                        uint64_t expected_pn, UnprotectedPacket& out) {
  Bytes work(datagram.begin(), datagram.end());
  MulticastPacketHeader hdr;
  size_t header_len = 0;
  UnprotectStatus st =
      remove_header_protection(header_key, work, cid_len, expected_pn, hdr, header_len);
  if (st != UnprotectStatus::Ok) return st;

  const SecretStore::Entry* entry = secrets.select(hdr.packet_number);
  if (!entry) {
    out.packet_number = hdr.packet_number;
    out.pn_len = hdr.pn_len;
    return UnprotectStatus::NoKey;
  }
  Bytes nonce = packet_nonce(entry->keys.iv, hdr.packet_number);
  ByteSpan aad(work.data(), header_len);
  ByteSpan ct(work.data() + header_len, work.size() - header_len);
  auto plain = aead_open(entry->keys.aead_key, nonce, aad, ct);
  out.packet_number = hdr.packet_number;
  out.pn_len = hdr.pn_len;
  out.key_boundary = entry->secret.from_packet_number;
  if (!plain) return UnprotectStatus::DecryptFail;
  out.payload = std::move(*plain);
  return UnprotectStatus::Ok;
}

}  // namespace mcquic
