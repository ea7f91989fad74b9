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

#include "mcquic/bytes.hpp"

namespace mcquic {

// Variable-length integer with a 2-bit length prefix, values 0..2^62-1.
// Encoded length is 1, 2, 4 or 8 bytes; encode always emits the minimal form.

inline constexpr uint64_t kVarIntMax = (uint64_t{1} << 62) - 1;

inline size_t varint_size(uint64_t v) {
  if (v < (1u << 6)) return 1;
  if (v < (1u << 14)) return 2;
  if (v < (1u << 30)) return 4;
  return 8;
}

inline void encode_varint(uint64_t v, Bytes& out) {
  if (v > kVarIntMax) throw std::invalid_argument("varint value out of range");
  size_t len = varint_size(v);
  switch (len) {
    case 1:
      out.push_back(static_cast<uint8_t>(v));
      break;
    case 2:
      out.push_back(static_cast<uint8_t>(0x40 | (v >> 8)));
      out.push_back(static_cast<uint8_t>(v));
      break;
    case 4:
      out.push_back(static_cast<uint8_t>(0x80 | (v >> 24)));
      for (int s = 16; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
      break;
    default:
      out.push_back(static_cast<uint8_t>(0xc0 | (v >> 56)));
      for (int s = 48; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
      break;
  }
}

inline Bytes encode_varint(uint64_t v) {
  Bytes out;
  encode_varint(v, out);
  return out;
}

struct VarIntDecode {
  uint64_t value;
  size_t consumed;
};

// Returns nullopt on truncated input. Non-minimal encodings decode to the
// same value, matching the usual transport convention.
inline std::optional<VarIntDecode> decode_varint(ByteSpan in) {
  if (in.empty()) return std::nullopt;
  size_t len = size_t{1} << (in[0] >> 6);
  if (in.size() < len) return std::nullopt;
  uint64_t v = in[0] & 0x3f;
  for (size_t i = 1; i < len; ++i) v = (v << 8) | in[i];
  return VarIntDecode{v, len};
}

// Reader adaptor.
inline bool read_varint(ByteReader& r, uint64_t& v) {
  uint8_t first;
  if (!r.peek_u8(first)) return false;
  size_t len = size_t{1} << (first >> 6);
  ByteSpan s;
  if (!r.raw(len, s)) return false;
  v = s[0] & 0x3f;
  for (size_t i = 1; i < len; ++i) v = (v << 8) | s[i];
  return true;
}

inline void write_varint(ByteWriter& w, uint64_t v) {
  Bytes tmp;
  encode_varint(v, tmp);
  w.raw(tmp);
}

}  // namespace mcquic
