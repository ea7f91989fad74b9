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

#include "mcquic/integrity.hpp"

using namespace mcquic;

namespace {

IntegrityFrame frame_for(const ChannelId& cid, uint64_t start, std::vector<Bytes> digests) {
  IntegrityFrame f;
  f.channel_id = cid;
  f.start_packet_number = start;
  f.digests = std::move(digests);
  return f;
}

}  // namespace

TEST_CASE("untrusted context stores nothing") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  size_t added = store.add(frame_for(cid, 0, {Bytes(32, 1)}), /*trusted_context=*/false);
  CHECK(added == 0);
  CHECK(store.entry_count(cid) == 0);
  CHECK(store.verify(cid, 0, from_hex("00")) == IntegrityVerdict::Unknown);
}

TEST_CASE("trusted frame stores consecutive entries") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  size_t added =
      store.add(frame_for(cid, 5, {Bytes(32, 1), Bytes(32, 2), Bytes(32, 3)}), true);
  CHECK(added == 3);
  CHECK(store.has_digest(cid, 5));
  CHECK(store.has_digest(cid, 6));
  CHECK(store.has_digest(cid, 7));
  CHECK_FALSE(store.has_digest(cid, 4));
  CHECK_FALSE(store.has_digest(cid, 8));
}

TEST_CASE("re-asserting an identical digest is idempotent") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  IntegrityFrame f = frame_for(cid, 5, {Bytes(32, 0xaa)});
  CHECK(store.add(f, true) == 1);
  // Unicast and multicast copies of the same frame may both arrive.
  CHECK(store.add(f, true) == 0);
  CHECK(store.entry_count(cid) == 1);
}

TEST_CASE("conflicting digest poisons the channel") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  store.add(frame_for(cid, 5, {Bytes(32, 0xaa)}), true);
  CHECK_THROWS_AS(store.add(frame_for(cid, 5, {Bytes(32, 0xbb)}), true), IntegrityConflict);
}

TEST_CASE("digest size must match the channel hash") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  CHECK_THROWS_AS(store.add(frame_for(cid, 0, {Bytes(20, 1)}), true), ProtocolError);
}

TEST_CASE("verify computes the digest over the datagram") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  Bytes datagram = from_hex("a00a000000015e778899");
  Bytes digest = compute_packet_digest(HashAlgorithmId::Sha256, datagram);
  store.add(frame_for(cid, 9, {digest}), true);

  CHECK(store.verify(cid, 9, datagram) == IntegrityVerdict::Verified);

  Bytes spoofed = datagram;
  spoofed.back() ^= 0x01;
  CHECK(store.verify(cid, 9, spoofed) == IntegrityVerdict::Mismatch);

  // A packet whose digest has not arrived yet is unknown, not rejected.
  CHECK(store.verify(cid, 10, datagram) == IntegrityVerdict::Unknown);
}

TEST_CASE("unknown channels verify as unknown and reject adds") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0b");
  CHECK(store.verify(cid, 0, from_hex("00")) == IntegrityVerdict::Unknown);
  CHECK_THROWS_AS(store.add(frame_for(cid, 0, {Bytes(32, 1)}), true), ProtocolError);
}

TEST_CASE("dropping a channel clears its ledger") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0a");
  store.open_channel(cid, HashAlgorithmId::Sha256);
  store.add(frame_for(cid, 0, {Bytes(32, 1)}), true);
  store.drop_channel(cid);
  CHECK_FALSE(store.has_channel(cid));
  CHECK(store.verify(cid, 0, from_hex("00")) == IntegrityVerdict::Unknown);
}

TEST_CASE("sha1 channels use twenty byte digests") {
  IntegrityStore store;
  ChannelId cid = ChannelId::from_hex("0c");
  store.open_channel(cid, HashAlgorithmId::Sha1);
  Bytes datagram = from_hex("cafe");
  Bytes digest = compute_packet_digest(HashAlgorithmId::Sha1, datagram);
  REQUIRE(digest.size() == 20);
  store.add(frame_for(cid, 3, {digest}), true);
  CHECK(store.verify(cid, 3, datagram) == IntegrityVerdict::Verified);
}
