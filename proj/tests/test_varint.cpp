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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mcquic/varint.hpp"

using namespace mcquic;

namespace {

// Independent reference codec: builds each length form from the raw 8-byte
// big-endian representation instead of shifting into place.
Bytes reference_encode(uint64_t v) {
  Bytes full(8);
  for (int i = 0; i < 8; ++i) full[i] = static_cast<uint8_t>(v >> (8 * (7 - i)));
  size_t len;
  uint8_t prefix;
  if (v <= 63) {
    len = 1;
    prefix = 0x00;
  } else if (v <= 16383) {
    len = 2;
    prefix = 0x40;
  } else if (v <= 1073741823) {
    len = 4;
    prefix = 0x80;
  } else {
    len = 8;
    prefix = 0xc0;
  }
  Bytes out(full.end() - static_cast<long>(len), full.end());
  out[0] |= prefix;
  return out;
}

}  // namespace

TEST_CASE("varint encodes known values") {
  CHECK(to_hex(encode_varint(0)) == "00");
  CHECK(to_hex(encode_varint(37)) == "25");
  CHECK(to_hex(encode_varint(15293)) == "7bbd");
  CHECK(to_hex(encode_varint(494878333)) == "9d7f3e7d");
  CHECK(to_hex(encode_varint(151288809941952652ull)) == "c2197c5eff14e88c");
}

TEST_CASE("varint decodes known values") {
  auto d = decode_varint(from_hex("00"));
  REQUIRE(d);
  CHECK(d->value == 0);
  CHECK(d->consumed == 1);

  d = decode_varint(from_hex("25"));
  REQUIRE(d);
  CHECK(d->value == 37);
  CHECK(d->consumed == 1);

  // Non-minimal two-byte form decodes to the same value.
  d = decode_varint(from_hex("4025"));
  REQUIRE(d);
  CHECK(d->value == 37);
  CHECK(d->consumed == 2);

  d = decode_varint(from_hex("c2197c5eff14e88c"));
  REQUIRE(d);
  CHECK(d->value == 151288809941952652ull);
  CHECK(d->consumed == 8);
}

TEST_CASE("varint round-trips against the reference codec") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20000; ++i) {
    int magnitude = static_cast<int>(rng() % 62);
    uint64_t v = rng() & ((uint64_t{1} << (magnitude + 1)) - 1);
    Bytes mine = encode_varint(v);
    Bytes ref = reference_encode(v);
    REQUIRE(mine == ref);
    auto d = decode_varint(mine);
    REQUIRE(d);
    CHECK(d->value == v);
    CHECK(d->consumed == mine.size());
    CHECK(mine.size() == varint_size(v));
  }
}

TEST_CASE("varint boundary lengths are minimal") {
  CHECK(encode_varint(63).size() == 1);
  CHECK(encode_varint(64).size() == 2);
  CHECK(encode_varint(16383).size() == 2);
  CHECK(encode_varint(16384).size() == 4);
  CHECK(encode_varint(1073741823).size() == 4);
  CHECK(encode_varint(1073741824).size() == 8);
  CHECK(encode_varint(kVarIntMax).size() == 8);
}

TEST_CASE("varint rejects out-of-range values") {
  Bytes out;
  CHECK_THROWS_AS(encode_varint(kVarIntMax + 1, out), std::invalid_argument);
}

TEST_CASE("varint decode handles truncated input") {
  CHECK_FALSE(decode_varint(ByteSpan{}));
  CHECK_FALSE(decode_varint(from_hex("40")));        // 2-byte form, 1 byte given
  CHECK_FALSE(decode_varint(from_hex("c0000000")));  // 8-byte form, 4 bytes given
}
