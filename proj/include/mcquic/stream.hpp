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

#include "mcquic/types.hpp"

namespace mcquic {

// Overlapping retransmissions disagreed about stream content.
class StreamCorruption : public ProtocolError {
 public:
  explicit StreamCorruption(const std::string& what) : ProtocolError(what) {}
};

enum class DeliveryOrigin { Unicast, Multicast };

// One stream's reassembly state. Bytes may arrive from unicast and any
// number of channels interleaved; delivery is in order, duplicates are
// idempotent, and mismatched overlaps are fatal for the stream.
class StreamBuffer {
 public:
  // Returns the number of newly deliverable (contiguous) bytes.
  size_t insert(uint64_t offset, ByteSpan data, DeliveryOrigin origin) {
    if (data.empty()) return 0;
    uint64_t end = offset + data.size();

    // Portion that is already delivered must match what was delivered.
    if (offset < delivered_) {
      uint64_t overlap_end = std::min(end, delivered_);
      for (uint64_t i = offset; i < overlap_end; ++i)
        if (content_[i] != data[i - offset])
          throw StreamCorruption("retransmission disagrees with delivered bytes");
      if (end <= delivered_) return 0;
      data = data.subspan(delivered_ - offset);
      offset = delivered_;
    }

    // Check content equality against buffered segments and collect the
    // sub-ranges that are genuinely new.
    std::vector<std::pair<uint64_t, uint64_t>> fresh;  // [start, end)
    uint64_t cursor = offset;
    for (auto it = first_overlapping(offset); it != segments_.end() && it->first < end; ++it) {
      uint64_t s = it->first;
      uint64_t se = s + it->second.bytes.size();
      if (se <= cursor) continue;
      if (s > cursor) fresh.emplace_back(cursor, std::min(s, end));
      uint64_t lo = std::max(cursor, s);
      uint64_t hi = std::min(end, se);
      for (uint64_t i = lo; i < hi; ++i)
        if (it->second.bytes[i - s] != data[i - offset])
          throw StreamCorruption("overlapping segments disagree");
      cursor = std::max(cursor, hi);
      if (cursor >= end) break;
    }
    if (cursor < end) fresh.emplace_back(cursor, end);

    for (const auto& [fs, fe] : fresh) {
      Segment seg;
      seg.bytes.assign(data.begin() + (fs - offset), data.begin() + (fe - offset));
      seg.origin = origin;
      segments_.emplace(fs, std::move(seg));
    }

    // Drain the contiguous prefix.
    size_t newly = 0;
    for (auto it = segments_.begin(); it != segments_.end() && it->first == delivered_;) {
      Segment& seg = it->second;
      content_.insert(content_.end(), seg.bytes.begin(), seg.bytes.end());
      delivered_ += seg.bytes.size();
      newly += seg.bytes.size();
      if (seg.origin == DeliveryOrigin::Multicast) multicast_bytes_ += seg.bytes.size();
      else unicast_bytes_ += seg.bytes.size();
      it = segments_.erase(it);
    }
    return newly;
  }

  uint64_t delivered() const { return delivered_; }
  const Bytes& content() const { return content_; }
  uint64_t multicast_bytes() const { return multicast_bytes_; }
  uint64_t unicast_bytes() const { return unicast_bytes_; }
  uint64_t buffered_bytes() const {
    uint64_t n = 0;
    for (const auto& [s, seg] : segments_) n += seg.bytes.size();
    return n;
  }
  // Highest offset seen (delivered or buffered); this is what counts against
  // connection flow control.
  uint64_t highest_offset() const {
    if (segments_.empty()) return delivered_;
    auto last = std::prev(segments_.end());
    return last->first + last->second.bytes.size();
  }

 private:
  struct Segment {
    Bytes bytes;
    DeliveryOrigin origin;
  };

  std::map<uint64_t, Segment>::iterator first_overlapping(uint64_t offset) {
    auto it = segments_.upper_bound(offset);
    if (it != segments_.begin()) {
      auto prev = std::prev(it);
      if (prev->first + prev->second.bytes.size() > offset) return prev;
    }
    return it;
  }

  std::map<uint64_t, Segment> segments_;
  Bytes content_;
  uint64_t delivered_ = 0;
  uint64_t multicast_bytes_ = 0;
  uint64_t unicast_bytes_ = 0;
};

// Stream-ID space shared across the unicast connection and all channels: a
// stream's bytes reassemble into one sequence no matter which path carried
// each segment.
class StreamSpaceMap {
 public:
  size_t deliver(uint64_t stream_id, uint64_t offset, ByteSpan data, DeliveryOrigin origin) {
    return streams_[stream_id].insert(offset, data, origin);
  }

  const StreamBuffer* find(uint64_t stream_id) const {
    auto it = streams_.find(stream_id);
    return it == streams_.end() ? nullptr : &it->second;
  }

  const std::map<uint64_t, StreamBuffer>& streams() const { return streams_; }

  uint64_t total_delivered() const {
    uint64_t n = 0;
    for (const auto& [id, b] : streams_) n += b.delivered();
    return n;
  }
  uint64_t total_multicast_bytes() const {
    uint64_t n = 0;
    for (const auto& [id, b] : streams_) n += b.multicast_bytes();
    return n;
  }
  uint64_t total_unicast_bytes() const {
    uint64_t n = 0;
    for (const auto& [id, b] : streams_) n += b.unicast_bytes();
    return n;
  }
  uint64_t total_highest_offset() const {
    uint64_t n = 0;
    for (const auto& [id, b] : streams_) n += b.highest_offset();
    return n;
  }

 private:
  std::map<uint64_t, StreamBuffer> streams_;
};

}  // namespace mcquic
