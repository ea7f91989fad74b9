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

#include "mcquic/channel.hpp"
#include "mcquic/client.hpp"
#include "mcquic/netsim.hpp"
#include "mcquic/server.hpp"

// Scenario files are JSON; the schema is documented in docs/scenario.md.

namespace mcquic {

inline uint16_t hash_code_from_name(const std::string& name) {
  if (name == "sha1") return static_cast<uint16_t>(HashAlgorithmId::Sha1);
  if (name == "sha256") return static_cast<uint16_t>(HashAlgorithmId::Sha256);
  throw ConfigError("unknown hash algorithm: " + name);
}

inline uint16_t aead_code_from_name(const std::string& name) {
  if (name == "aes128gcm") return static_cast<uint16_t>(AeadAlgorithmId::Aes128Gcm);
  throw ConfigError("unknown aead algorithm: " + name);
}

struct ScenarioChannel {
  std::string id_hex;
  std::string source;
  std::string group;
  uint16_t port = 5001;
  uint64_t rate_kbps = 8000;
  std::string aead = "aes128gcm";
  std::string hash = "sha256";

  ChannelDescriptor to_descriptor(uint64_t seed) const {
    ChannelDescriptor d;
    d.channel_id = ChannelId::from_hex(id_hex);
    auto [sf, sb] = parse_ip(source);
    auto [gf, gb] = parse_ip(group);
    if (sf != gf) throw ConfigError("channel " + id_hex + ": mixed address families");
    d.family = sf;
    d.source_ip = sb;
    d.group_ip = gb;
    d.udp_port = port;
    d.aead_id = static_cast<AeadAlgorithmId>(aead_code_from_name(aead));
    d.hash_id = static_cast<HashAlgorithmId>(hash_code_from_name(hash));
    d.max_rate_kbps = rate_kbps;
    Bytes seed_bytes(8);
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<uint8_t>(seed >> (8 * i));
    d.header_secret = hkdf_expand(seed_bytes, "header secret " + id_hex, 32);
    d.validate();
    return d;
  }
};

struct ScenarioContent {
  std::string name;
  std::vector<std::string> channel_ids;
};

struct ScenarioClientGroup {
  size_t count = 1;
  LinkParams link;
  bool multicast_capable = true;
  ClientConfig client;
  std::optional<uint64_t> disconnect_unicast_at_ms;
};

struct ScenarioWorkload {
  std::string content;
  uint64_t stream_id = 3;
  uint64_t bytes = 0;
  uint64_t segment_bytes = 65536;
  uint64_t start_ms = 500;
  uint64_t interval_ms = 100;
  std::optional<uint64_t> serve_ms;  // when joins are instructed; default start_ms - 300
};

struct ScenarioLimitUpdate {
  size_t client_index = 0;
  uint64_t at_ms = 0;
  ClientLimits limits;
};

struct Scenario {
  std::string name = "unnamed";
  uint64_t seed = 1;
  uint64_t duration_ms = 30000;
  LinkParams uplink{2000, 0.0, 0};
  SimTime membership_latency_us = 10000;
  ServerConfig server;
  std::vector<ScenarioChannel> channels;
  std::vector<ScenarioContent> contents;
  std::vector<ScenarioClientGroup> client_groups;
  std::vector<ScenarioWorkload> workloads;
  std::optional<AttackerConfig> attacker;
  std::string attacker_target_channel;
  std::vector<ScenarioLimitUpdate> limit_updates;
  bool expect_complete_delivery = true;

  size_t total_clients() const {
    size_t n = 0;
    for (const auto& g : client_groups) n += g.count;
    return n;
  }

  void validate() const {
    if (channels.empty()) throw ConfigError("scenario needs at least one channel");
    if (client_groups.empty()) throw ConfigError("scenario needs at least one client group");
    std::set<std::string> cids;
    for (const auto& c : channels) {
      if (!cids.insert(c.id_hex).second) throw ConfigError("duplicate channel id " + c.id_hex);
      c.to_descriptor(seed);  // validates addresses and algorithms
    }
    std::set<std::string> names;
    for (const auto& g : contents) {
      if (!names.insert(g.name).second) throw ConfigError("duplicate content group " + g.name);
      for (const auto& id : g.channel_ids)
        if (!cids.count(id)) throw ConfigError("content " + g.name + " references unknown channel " + id);
    }
    for (const auto& w : workloads) {
      if (!names.count(w.content)) throw ConfigError("workload references unknown content " + w.content);
      if (w.bytes == 0) throw ConfigError("workload bytes must be > 0");
      if (w.segment_bytes == 0) throw ConfigError("workload segment_bytes must be > 0");
    }
    for (const auto& g : client_groups) {
      if (g.count == 0) throw ConfigError("client group count must be > 0");
      g.client.limits.validate();
    }
    if (attacker && !cids.count(attacker_target_channel))
      throw ConfigError("attacker targets unknown channel " + attacker_target_channel);
  }
};

namespace detail {

using json = nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline LinkParams parse_link(const json& j) {
  LinkParams l;
  l.delay_us = get_or<uint64_t>(j, "delay_us", l.delay_us);
  l.loss = get_or<double>(j, "loss", l.loss);
  l.jitter_us = get_or<uint64_t>(j, "jitter_us", l.jitter_us);
  if (l.loss < 0.0 || l.loss > 1.0) throw ConfigError("link loss must be in [0, 1]");
  return l;
}

inline ClientLimits parse_limits(const json& j) {
  ClientLimits l;
  l.allow_ipv4 = get_or<bool>(j, "allow_v4", true);
  l.allow_ipv6 = get_or<bool>(j, "allow_v6", false);
  if (j.contains("hashes")) {
    l.supported_hash_ids.clear();
    for (const auto& h : j.at("hashes")) l.supported_hash_ids.push_back(hash_code_from_name(h.get<std::string>()));
  }
  if (j.contains("aeads")) {
    l.supported_aead_ids.clear();
    for (const auto& a : j.at("aeads")) l.supported_aead_ids.push_back(aead_code_from_name(a.get<std::string>()));
  }
  l.max_aggregate_rate_kbps = get_or<uint64_t>(j, "max_rate_kbps", 50000);
  l.max_channels_announced = get_or<uint64_t>(j, "max_channels_announced", 32);
  l.max_channels_joined = get_or<uint64_t>(j, "max_channels_joined", 8);
  l.validate();
  return l;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    Scenario sc;
    sc.name = detail::get_or<std::string>(j, "name", sc.name);
    sc.seed = detail::get_or<uint64_t>(j, "seed", sc.seed);
    sc.duration_ms = detail::get_or<uint64_t>(j, "duration_ms", sc.duration_ms);
    if (j.contains("network")) {
      const json& n = j.at("network");
      if (n.contains("uplink")) sc.uplink = detail::parse_link(n.at("uplink"));
      sc.membership_latency_us =
          detail::get_or<uint64_t>(n, "membership_latency_us", sc.membership_latency_us);
      sc.server.max_datagram = detail::get_or<uint64_t>(n, "max_datagram", sc.server.max_datagram);
    }
    if (j.contains("server")) {
      const json& s = j.at("server");
      auto& c = sc.server;
      c.join_timeout_us = detail::get_or<uint64_t>(s, "join_timeout_ms", c.join_timeout_us / 1000) * 1000;
      c.reorder_threshold = detail::get_or<uint64_t>(s, "reorder_threshold", c.reorder_threshold);
      c.multicast_retx_fraction =
          detail::get_or<double>(s, "multicast_retx_fraction", c.multicast_retx_fraction);
      c.heavy_loss_threshold = detail::get_or<double>(s, "heavy_loss_threshold", c.heavy_loss_threshold);
      c.heavy_loss_window_us =
          detail::get_or<uint64_t>(s, "heavy_loss_window_ms", c.heavy_loss_window_us / 1000) * 1000;
      c.rotation_interval_packets =
          detail::get_or<uint64_t>(s, "rotation_interval_packets", c.rotation_interval_packets);
      c.unicast_only_every = detail::get_or<uint64_t>(s, "unicast_only_every", c.unicast_only_every);
      c.integrity_batch = detail::get_or<uint64_t>(s, "integrity_batch", c.integrity_batch);
      c.housekeeping_us = detail::get_or<uint64_t>(s, "housekeeping_ms", c.housekeeping_us / 1000) * 1000;
      if (c.unicast_only_every == 0) throw ConfigError("unicast_only_every must be >= 1");
    }
    for (const auto& cj : j.value("channels", json::array())) {
      ScenarioChannel c;
      c.id_hex = cj.at("id").get<std::string>();
      c.source = cj.at("source").get<std::string>();
      c.group = cj.at("group").get<std::string>();
      c.port = detail::get_or<uint16_t>(cj, "port", c.port);
      c.rate_kbps = detail::get_or<uint64_t>(cj, "rate_kbps", c.rate_kbps);
      c.aead = detail::get_or<std::string>(cj, "aead", c.aead);
      c.hash = detail::get_or<std::string>(cj, "hash", c.hash);
      sc.channels.push_back(std::move(c));
    }
    for (const auto& gj : j.value("content", json::array())) {
      ScenarioContent g;
      g.name = gj.at("name").get<std::string>();
      for (const auto& id : gj.at("channels")) g.channel_ids.push_back(id.get<std::string>());
      sc.contents.push_back(std::move(g));
    }
    // Single-channel scenarios may omit "content"; each channel becomes its
    // own group named after the id.
    if (sc.contents.empty()) {
      for (const auto& c : sc.channels)
        sc.contents.push_back(ScenarioContent{c.id_hex, {c.id_hex}});
    }
    for (const auto& gj : j.value("clients", json::array())) {
      ScenarioClientGroup g;
      g.count = detail::get_or<uint64_t>(gj, "count", 1);
      if (gj.contains("link")) g.link = detail::parse_link(gj.at("link"));
      g.multicast_capable = detail::get_or<bool>(gj, "multicast_capable", true);
      if (gj.contains("limits")) g.client.limits = detail::parse_limits(gj.at("limits"));
      std::string policy = detail::get_or<std::string>(gj, "flow_policy", "extend");
      if (policy == "extend") g.client.flow_policy = ClientConfig::FlowPolicy::Extend;
      else if (policy == "leave") g.client.flow_policy = ClientConfig::FlowPolicy::Leave;
      else throw ConfigError("flow_policy must be 'extend' or 'leave'");
      g.client.bundling_delay_us =
          detail::get_or<uint64_t>(gj, "bundling_delay_ms", g.client.bundling_delay_us / 1000) * 1000;
      g.client.initial_max_data = detail::get_or<uint64_t>(gj, "max_data", g.client.initial_max_data);
      g.client.max_data_increment = g.client.initial_max_data;
      if (gj.contains("disconnect_unicast_at_ms"))
        g.disconnect_unicast_at_ms = gj.at("disconnect_unicast_at_ms").get<uint64_t>();
      sc.client_groups.push_back(std::move(g));
    }
    for (const auto& wj : j.value("workload", json::array())) {
      ScenarioWorkload w;
      w.content = wj.at("content").get<std::string>();
      w.stream_id = detail::get_or<uint64_t>(wj, "stream_id", w.stream_id);
      w.bytes = wj.at("bytes").get<uint64_t>();
      w.segment_bytes = detail::get_or<uint64_t>(wj, "segment_bytes", w.segment_bytes);
      w.start_ms = detail::get_or<uint64_t>(wj, "start_ms", w.start_ms);
      w.interval_ms = detail::get_or<uint64_t>(wj, "interval_ms", w.interval_ms);
      if (wj.contains("serve_ms")) w.serve_ms = wj.at("serve_ms").get<uint64_t>();
      sc.workloads.push_back(std::move(w));
    }
    if (j.contains("attacker")) {
      const json& aj = j.at("attacker");
      AttackerConfig a;
      a.rate_per_s = aj.at("rate_per_s").get<double>();
      for (const auto& g : aj.value("generators", json::array({"random"})))
        a.generators.push_back(g.get<std::string>());
      a.start_us = detail::get_or<uint64_t>(aj, "start_ms", 0) * 1000;
      sc.attacker_target_channel = aj.at("target_channel").get<std::string>();
      sc.attacker = a;
    }
    for (const auto& uj : j.value("limit_updates", json::array())) {
      ScenarioLimitUpdate u;
      u.client_index = uj.at("client").get<uint64_t>();
      u.at_ms = uj.at("at_ms").get<uint64_t>();
      u.limits = detail::parse_limits(uj.at("limits"));
      sc.limit_updates.push_back(std::move(u));
    }
    sc.expect_complete_delivery =
        detail::get_or<bool>(j, "expect_complete_delivery", sc.expect_complete_delivery);
    sc.validate();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario schema error: ") + e.what());
  }
}

}  // namespace mcquic
