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

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace mcquic {

// Sorted set of disjoint half-open ranges [start, end). Adjacent ranges merge.
class IntervalSet {
 public:
  void add(uint64_t start, uint64_t end) {
    if (start >= end) return;
    auto it = ranges_.upper_bound(start);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second >= start) {
        start = prev->first;
        end = std::max(end, prev->second);
        it = ranges_.erase(prev);
      }
    }
    while (it != ranges_.end() && it->first <= end) {
      end = std::max(end, it->second);
      it = ranges_.erase(it);
    }
    ranges_.emplace(start, end);
  }

  void add_point(uint64_t v) { add(v, v + 1); }

  bool contains(uint64_t v) const {
    auto it = ranges_.upper_bound(v);
    if (it == ranges_.begin()) return false;
    return std::prev(it)->second > v;
  }

  bool contains_range(uint64_t start, uint64_t end) const {
    if (start >= end) return true;
    auto it = ranges_.upper_bound(start);
    if (it == ranges_.begin()) return false;
    auto prev = std::prev(it);
    return prev->first <= start && prev->second >= end;
  }

  // Sub-ranges of [start, end) not present in the set.
  std::vector<std::pair<uint64_t, uint64_t>> gaps(uint64_t start, uint64_t end) const {
    std::vector<std::pair<uint64_t, uint64_t>> out;
    uint64_t cursor = start;
    for (const auto& [s, e] : ranges_) {
      if (e <= cursor) continue;
      if (s >= end) break;
      if (s > cursor) out.emplace_back(cursor, std::min(s, end));
      cursor = std::max(cursor, e);
      if (cursor >= end) break;
    }
    if (cursor < end) out.emplace_back(cursor, end);
    return out;
  }

  uint64_t count() const {
    uint64_t n = 0;
    for (const auto& [s, e] : ranges_) n += e - s;
    return n;
  }

  bool empty() const { return ranges_.empty(); }
  void clear() { ranges_.clear(); }
  size_t range_count() const { return ranges_.size(); }

  // Ascending [start, end) pairs.
  std::vector<std::pair<uint64_t, uint64_t>> ranges() const {
    return {ranges_.begin(), ranges_.end()};
  }

  uint64_t max() const { return ranges_.empty() ? 0 : std::prev(ranges_.end())->second - 1; }

 private:
  std::map<uint64_t, uint64_t> ranges_;
};

}  // namespace mcquic
