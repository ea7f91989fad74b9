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

#include <json.hpp>

#include <sstream>

#include "mcquic/types.hpp"

namespace mcquic {

struct ClientReport {
  uint32_t node = 0;
  uint64_t multicast_bytes = 0;
  uint64_t unicast_bytes = 0;
  uint64_t delivered_bytes = 0;
  std::map<std::string, uint64_t> drops;
  bool fallback = false;
  uint64_t attacker_bytes = 0;
  std::map<std::string, std::string> channel_states;  // cid hex -> state
};

struct ChannelReport {
  std::string id;
  uint64_t egress_packets = 0;
  uint64_t egress_bytes = 0;
  uint64_t retx_multicast_packets = 0;
  uint64_t retx_unicast_ranges = 0;
  uint64_t retx_unicast_bytes = 0;
  uint64_t rotations = 0;
  uint64_t packets_published = 0;
};

struct RunReport {
  std::string scenario;
  uint64_t seed = 0;
  uint64_t duration_us = 0;
  uint64_t events = 0;
  uint64_t trace_lines = 0;
  std::vector<ClientReport> clients;
  std::vector<ChannelReport> channels;
  uint64_t server_unicast_bytes = 0;
  uint64_t server_multicast_bytes = 0;
  uint64_t server_egress_bytes = 0;
  uint64_t unicast_equivalent_bytes = 0;
  double savings_ratio = 0.0;
  std::string trace_hash;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["duration_us"] = duration_us;
    j["events"] = events;
    j["trace_lines"] = trace_lines;
    j["server"] = {{"unicast_bytes", server_unicast_bytes},
                   {"multicast_bytes", server_multicast_bytes},
                   {"egress_bytes", server_egress_bytes}};
    j["unicast_equivalent_bytes"] = unicast_equivalent_bytes;
    j["savings_ratio"] = savings_ratio;
    j["trace_hash"] = trace_hash;
    j["violations"] = violations;
    j["clients"] = nlohmann::json::array();
    for (const auto& c : clients) {
      nlohmann::json cj;
      cj["node"] = c.node;
      cj["multicast_bytes"] = c.multicast_bytes;
      cj["unicast_bytes"] = c.unicast_bytes;
      cj["delivered_bytes"] = c.delivered_bytes;
      cj["drops"] = c.drops;
      cj["fallback"] = c.fallback;
      cj["attacker_bytes"] = c.attacker_bytes;
      cj["channel_states"] = c.channel_states;
      j["clients"].push_back(std::move(cj));
    }
    j["channels"] = nlohmann::json::array();
    for (const auto& ch : channels) {
      nlohmann::json cj;
      cj["id"] = ch.id;
      cj["egress_packets"] = ch.egress_packets;
      cj["egress_bytes"] = ch.egress_bytes;
      cj["retx_multicast_packets"] = ch.retx_multicast_packets;
      cj["retx_unicast_ranges"] = ch.retx_unicast_ranges;
      cj["retx_unicast_bytes"] = ch.retx_unicast_bytes;
      cj["rotations"] = ch.rotations;
      cj["packets_published"] = ch.packets_published;
      j["channels"].push_back(std::move(cj));
    }
    return j;
  }

  std::string summary() const {
    std::ostringstream os;
    os << "scenario " << scenario << " seed " << seed << "\n";
    os << "  simulated " << duration_us / 1000000.0 << " s, " << events << " events, "
       << trace_lines << " trace lines\n";
    os << "  server egress: " << server_multicast_bytes << " B multicast + "
       << server_unicast_bytes << " B unicast = " << server_egress_bytes << " B\n";
    os << "  unicast-equivalent: " << unicast_equivalent_bytes << " B, savings ratio "
       << savings_ratio << "\n";
    for (const auto& ch : channels)
      os << "  channel " << ch.id << ": " << ch.egress_bytes << " B in " << ch.egress_packets
         << " packets, " << ch.rotations << " rotations, retx mc=" << ch.retx_multicast_packets
         << " uc_ranges=" << ch.retx_unicast_ranges << "\n";
    for (const auto& c : clients) {
      uint64_t dropped = 0;
      for (const auto& [k, v] : c.drops) dropped += v;
      os << "  client " << c.node << ": mc=" << c.multicast_bytes << " B uc=" << c.unicast_bytes
         << " B dropped=" << dropped << (c.fallback ? " [fallback]" : "") << "\n";
    }
    if (!violations.empty()) {
      os << "  VIOLATIONS:\n";
      for (const auto& v : violations) os << "    " << v << "\n";
    }
    os << "  trace hash " << trace_hash << "\n";
    return os.str();
  }
};

}  // namespace mcquic
