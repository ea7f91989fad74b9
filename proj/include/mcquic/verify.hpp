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

#include <istream>
#include <sstream>

#include "mcquic/channel.hpp"
#include "mcquic/interval_set.hpp"
#include "mcquic/types.hpp"

// Offline trace checkers. These replay a trace file through independent
// validators (conservation, budget, anchoring soundness, ack completeness,
// state-machine legality) without touching the live engine.

namespace mcquic {

struct TraceRecord {
  uint64_t t = 0;
  std::string kind;
  std::map<std::string, std::string> fields;

  const std::string& get(const std::string& key) const {
    static const std::string empty;
    auto it = fields.find(key);
    return it == fields.end() ? empty : it->second;
  }
  uint64_t num(const std::string& key) const {
    const std::string& v = get(key);
    return v.empty() ? 0 : std::stoull(v);
  }
  bool has(const std::string& key) const { return fields.count(key) != 0; }
};

inline std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceRecord r;
    std::string t;
    if (!(ls >> t >> r.kind))
      throw ConfigError("trace line " + std::to_string(lineno) + ": expected time and kind");
    try {
      r.t = std::stoull(t);
    } catch (...) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": bad timestamp");
    }
    std::string kv;
    while (ls >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("trace line " + std::to_string(lineno) + ": bad field '" + kv + "'");
      r.fields[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct VerifyResult {
  struct Check {
    std::string name;
    bool passed = true;
    uint64_t examined = 0;
    std::string detail;
  };
  std::vector<Check> checks;
  bool empty_trace = false;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  std::string summary() const {
    std::ostringstream os;
    if (empty_trace) os << "warning: empty trace, checks pass vacuously\n";
    for (const auto& c : checks) {
      os << (c.passed ? "[pass] " : "[FAIL] ") << c.name << " (" << c.examined << " checked)";
      if (!c.detail.empty()) os << ": " << c.detail;
      os << "\n";
    }
    return os.str();
  }
};

inline VerifyResult verify_trace(const std::vector<TraceRecord>& trace,
                                 uint64_t bundling_delay_us = 25000) {
  VerifyResult result;
  result.empty_trace = trace.empty();

  // 1. Conservation: per-link sent = delivered + dropped.
  {
    VerifyResult::Check c{"conservation"};
    for (const auto& r : trace) {
      if (r.kind != "linkstats") continue;
      ++c.examined;
      if (r.num("sent") != r.num("delivered") + r.num("dropped") ||
          r.num("sentb") != r.num("deliveredb") + r.num("droppedb")) {
        c.passed = false;
        c.detail = "link " + r.get("link") + " does not balance";
        break;
      }
    }
    result.checks.push_back(std::move(c));
  }

  // 2. Budget: used <= limit after every budget-affecting event.
  {
    VerifyResult::Check c{"budget"};
    for (const auto& r : trace) {
      if (r.kind != "budget") continue;
      ++c.examined;
      if (r.num("used") > r.num("limit")) {
        c.passed = false;
        c.detail = "node " + r.get("node") + " used " + r.get("used") + " > limit " +
                   r.get("limit") + " at t=" + std::to_string(r.t);
        break;
      }
    }
    result.checks.push_back(std::move(c));
  }

  // 3. Anchoring soundness: a digest trusted from a multicast packet must
  //    come from a packet this node already dispatched as verified; chain
  //    roots arrive over unicast.
  {
    VerifyResult::Check c{"anchoring"};
    std::map<std::string, IntervalSet> verified;  // "node/ch" -> verified pns
    for (const auto& r : trace) {
      if (r.kind == "recv") {
        verified[r.get("node") + "/" + r.get("ch")].add_point(r.num("pn"));
      } else if (r.kind == "trust") {
        ++c.examined;
        const std::string& src = r.get("src");
        if (src == "uc") continue;
        if (src.rfind("mc:", 0) != 0) {
          c.passed = false;
          c.detail = "trust with unknown source '" + src + "'";
          break;
        }
        uint64_t pn = std::stoull(src.substr(3));
        if (!verified[r.get("node") + "/" + r.get("ch")].contains(pn)) {
          c.passed = false;
          c.detail = "node " + r.get("node") + " trusted digests from unverified packet " +
                     std::to_string(pn) + " at t=" + std::to_string(r.t);
          break;
        }
      }
    }
    result.checks.push_back(std::move(c));
  }

  // 4. Ack completeness: every verified receipt is covered by an MC_ACK
  //    emitted within the bundling delay, unless the channel was left or
  //    retired in the meantime.
  {
    VerifyResult::Check c{"ack_completeness"};
    struct Recv {
      uint64_t t;
      uint64_t pn;
    };
    std::map<std::string, std::vector<Recv>> recvs;
    std::map<std::string, std::vector<std::pair<uint64_t, IntervalSet>>> acks;
    std::map<std::string, std::vector<uint64_t>> leaves;
    for (const auto& r : trace) {
      if (r.kind == "recv") {
        recvs[r.get("node") + "/" + r.get("ch")].push_back({r.t, r.num("pn")});
      } else if (r.kind == "ackemit") {
        IntervalSet s;
        std::istringstream rs(r.get("ranges"));
        std::string part;
        while (std::getline(rs, part, ',')) {
          auto dash = part.find('-');
          if (dash == std::string::npos) continue;
          uint64_t a = std::stoull(part.substr(0, dash));
          uint64_t b = std::stoull(part.substr(dash + 1));
          s.add(a, b + 1);
        }
        acks[r.get("node") + "/" + r.get("ch")].emplace_back(r.t, std::move(s));
      } else if (r.kind == "state" &&
                 (r.get("new") == "left" || r.get("new") == "retired")) {
        leaves[r.get("node") + "/" + r.get("ch")].push_back(r.t);
      }
    }
    uint64_t slack = 2000;  // scheduling granularity
    for (const auto& [key, rs] : recvs) {
      const auto& as = acks[key];
      const auto& ls = leaves[key];
      for (const Recv& rec : rs) {
        ++c.examined;
        bool covered = false;
        for (const auto& [ta, set] : as) {
          if (ta < rec.t) continue;
          if (ta > rec.t + bundling_delay_us + slack) break;
          if (set.contains(rec.pn)) {
            covered = true;
            break;
          }
        }
        if (!covered) {
          for (uint64_t lt : ls)
            if (lt >= rec.t && lt <= rec.t + bundling_delay_us + slack) covered = true;
        }
        if (!covered) {
          c.passed = false;
          c.detail = key + " pn " + std::to_string(rec.pn) + " received at t=" +
                     std::to_string(rec.t) + " never acknowledged in time";
          break;
        }
      }
      if (!c.passed) break;
    }
    result.checks.push_back(std::move(c));
  }

  // 5. State-machine legality: every recorded transition must be an edge of
  //    the lifecycle table, and every server-observed state change must
  //    match a client transition reported earlier.
  {
    VerifyResult::Check c{"state_machine"};
    auto state_of = [](const std::string& s) -> std::optional<ChannelState> {
      for (auto st : {ChannelState::Announced, ChannelState::JoinPending, ChannelState::Joined,
                      ChannelState::DeclinedJoin, ChannelState::Left, ChannelState::Retired})
        if (s == to_string(st)) return st;
      return std::nullopt;
    };
    auto event_of = [](const std::string& s) -> std::optional<ChannelEvent> {
      for (auto ev : {ChannelEvent::Announce, ChannelEvent::JoinRequested,
                      ChannelEvent::JoinAccepted, ChannelEvent::JoinDeclined,
                      ChannelEvent::PacketsFlowing, ChannelEvent::LeaveRequested,
                      ChannelEvent::Left, ChannelEvent::Retire})
        if (s == to_string(ev)) return ev;
      return std::nullopt;
    };
    std::map<std::string, std::set<std::string>> reported;  // node/ch -> states seen
    for (const auto& r : trace) {
      if (r.kind == "state") {
        ++c.examined;
        auto ev = event_of(r.get("ev"));
        auto nw = state_of(r.get("new"));
        if (!ev || !nw) {
          c.passed = false;
          c.detail = "unknown state or event at t=" + std::to_string(r.t);
          break;
        }
        if (r.get("old") == "none") {
          if (*ev != ChannelEvent::Announce || *nw != ChannelState::Announced) {
            c.passed = false;
            c.detail = "invalid creation transition at t=" + std::to_string(r.t);
            break;
          }
        } else {
          auto old = state_of(r.get("old"));
          if (!old || transition(*old, *ev) != *nw) {
            c.passed = false;
            c.detail = "illegal transition " + r.get("old") + " --" + r.get("ev") + "--> " +
                       r.get("new") + " at t=" + std::to_string(r.t);
            break;
          }
        }
        reported[r.get("node") + "/" + r.get("ch")].insert(r.get("new"));
      } else if (r.kind == "clientstate") {
        ++c.examined;
        const std::string& st = r.get("state");
        if (!reported[r.get("client") + "/" + r.get("ch")].count(st)) {
          c.passed = false;
          c.detail = "server observed state '" + st + "' never reported by client " +
                     r.get("client");
          break;
        }
      }
    }
    result.checks.push_back(std::move(c));
  }

  return result;
}

}  // namespace mcquic
