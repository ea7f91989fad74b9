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

#include "mcquic/channel.hpp"
#include "mcquic/packet.hpp"
#include "mcquic/unicast.hpp"

namespace mcquic {

struct ServerConfig {
  SimTime join_timeout_us = 3000000;
  uint64_t reorder_threshold = 3;
  double multicast_retx_fraction = 0.5;
  double heavy_loss_threshold = 0.05;
  SimTime heavy_loss_window_us = 10000000;
  uint64_t rotation_interval_packets = 1024;
  uint64_t unicast_only_every = 4;  // every k-th rotation is unicast-only
  size_t integrity_batch = 16;
  SimTime housekeeping_us = 50000;
  size_t max_datagram = 1200;
  size_t pn_len = 4;
};

// Server-side state for one channel: packetization, protection, integrity
// emission and key rotation. Publishing is independent of who is joined;
// the multicast egress for a given workload is identical whether one client
// or a hundred listen.
class ChannelPublisher {
 public:
  struct StreamRange {
    uint64_t stream_id;
    uint64_t offset;
    uint64_t length;
  };

  struct PacketMeta {
    std::vector<StreamRange> ranges;           // data content, for retransmission
    std::optional<IntegrityFrame> integrity;   // control carried by this packet
    std::optional<KeyFrame> key;
  };

  // One batch of multicast datagrams ready to send, plus the control frames
  // that must travel over every joined client's unicast connection.
  struct PublishOutput {
    std::vector<Bytes> datagrams;            // in send order, pns ascending
    std::vector<McFrame> unicast_control;    // integrity root, unicast-only keys
    std::optional<KeyFrame> rotated;         // set when this batch rotated keys
    bool rotation_unicast_only = false;
  };

  ChannelPublisher(ChannelDescriptor desc, const ServerConfig& cfg, uint64_t seed)
      : desc_(std::move(desc)), cfg_(cfg), rng_(seed) {
    desc_.validate();
    header_key_ = derive_header_key(desc_.header_secret);
    group_ = SsmKey{ip_to_string(desc_.family, desc_.source_ip),
                    ip_to_string(desc_.family, desc_.group_ip)};
    rotate_now(0);  // initial secret; distributed over unicast at join time
  }

  const ChannelDescriptor& descriptor() const { return desc_; }
  const SsmKey& group() const { return group_; }
  uint64_t next_pn() const { return next_pn_; }
  const SecretStore& secrets() const { return secrets_; }
  const ChannelSecret& active_secret() const { return active_secret_; }
  const std::map<uint64_t, PacketMeta>& packet_meta() const { return meta_; }
  uint64_t rotation_count() const { return rotation_count_; }

  // Retained stream content, so lost ranges can be retransmitted on either
  // path and fallback clients can be served over unicast.
  uint64_t append_stream(uint64_t stream_id, ByteSpan bytes) {
    Bytes& store = stream_store_[stream_id];
    uint64_t offset = store.size();
    store.insert(store.end(), bytes.begin(), bytes.end());
    return offset;
  }

  ByteSpan stream_bytes(uint64_t stream_id, uint64_t offset, uint64_t length) const {
    auto it = stream_store_.find(stream_id);
    if (it == stream_store_.end() || offset + length > it->second.size())
      throw std::logic_error("stream range not retained");
    return ByteSpan(it->second.data() + offset, length);
  }

  const std::map<uint64_t, Bytes>& stream_store() const { return stream_store_; }

  size_t data_chunk_size() const {
    size_t header = 1 + desc_.channel_id.size() + cfg_.pn_len;
    size_t budget = cfg_.max_datagram - header - kAeadTagLen;
    return budget - 24;  // worst-case stream frame framing
  }

  // Packetizes the given ranges, emits the integrity chain (a unicast root
  // covering the head of the batch, then carriers riding the channel ahead
  // of the packets they cover) and performs due key rotations.
  PublishOutput publish_ranges(const std::vector<StreamRange>& ranges) {
    PublishOutput out;

    // Split into per-packet stream frames.
    std::vector<StreamFrame> data_frames;
    size_t chunk = data_chunk_size();
    for (const StreamRange& r : ranges) {
      uint64_t off = r.offset;
      uint64_t left = r.length;
      while (left > 0) {
        uint64_t n = std::min<uint64_t>(left, chunk);
        StreamFrame f;
        f.stream_id = r.stream_id;
        f.offset = off;
        ByteSpan b = stream_bytes(r.stream_id, off, n);
        f.data.assign(b.begin(), b.end());
        data_frames.push_back(std::move(f));
        off += n;
        left -= n;
      }
    }
    if (data_frames.empty()) return out;

    size_t batch = cfg_.integrity_batch;
    size_t k = data_frames.size();
    size_t nbatches = (k + batch - 1) / batch;

    // Packet-number layout: batch 0 data, then for each later batch a
    // carrier followed by the batch's data packets.
    uint64_t pn = next_pn_;
    std::vector<std::vector<uint64_t>> batch_pns(nbatches);
    std::vector<uint64_t> carrier_pns(nbatches, 0);  // [0] unused
    size_t fi = 0;
    for (size_t b = 0; b < nbatches; ++b) {
      if (b > 0) carrier_pns[b] = pn++;
      size_t in_batch = std::min(batch, k - fi);
      for (size_t i = 0; i < in_batch; ++i) batch_pns[b].push_back(pn++);
      fi += in_batch;
    }
    uint64_t total_packets = pn - next_pn_;

    // Key rotation happens at the tail: the fresh secret applies from the
    // first packet after this batch.
    std::optional<KeyFrame> rotation_key;
    bool rotation_unicast_only = false;
    packets_since_rotation_ += total_packets;
    if (packets_since_rotation_ >= cfg_.rotation_interval_packets) {
      packets_since_rotation_ = 0;
      ChannelSecret next = make_secret(next_pn_ + total_packets);
      ++rotation_count_;
      rotation_unicast_only = (rotation_count_ % cfg_.unicast_only_every) == 0;
      rotation_key = KeyFrame{desc_.channel_id, next.from_packet_number, next.secret};
      pending_secret_ = next;
      out.rotated = rotation_key;
      out.rotation_unicast_only = rotation_unicast_only;
    }

    // Build data packets.
    std::map<uint64_t, Bytes> built;  // pn -> datagram
    fi = 0;
    for (size_t b = 0; b < nbatches; ++b) {
      for (uint64_t dpn : batch_pns[b]) {
        StreamFrame& f = data_frames[fi++];
        Bytes payload;
        encode_frame(f, payload);
        built[dpn] = build_packet(dpn, payload);
        meta_[dpn].ranges.push_back(StreamRange{f.stream_id, f.offset, f.data.size()});
      }
    }

    // Build carriers back to front so each can cover the next one.
    std::optional<Bytes> next_carrier_digest;
    uint64_t next_carrier_pn = 0;
    for (size_t b = nbatches; b-- > 1;) {
      IntegrityFrame intg;
      intg.channel_id = desc_.channel_id;
      intg.start_packet_number = batch_pns[b].front();
      for (uint64_t dpn : batch_pns[b]) intg.digests.push_back(digest_of(built[dpn]));
      if (next_carrier_digest) {
        // The following carrier's pn is contiguous with this batch.
        intg.digests.push_back(*next_carrier_digest);
      }
      Bytes payload;
      encode_frame(intg, payload);
      PacketMeta& m = meta_[carrier_pns[b]];
      m.integrity = intg;
      if (b == 1 && rotation_key && !rotation_unicast_only) {
        encode_frame(*rotation_key, payload);
        m.key = rotation_key;
      }
      Bytes dgram = build_packet(carrier_pns[b], payload);
      next_carrier_digest = digest_of(dgram);
      next_carrier_pn = carrier_pns[b];
      built[carrier_pns[b]] = std::move(dgram);
    }

    // Unicast root: digests for batch 0 plus the first carrier.
    IntegrityFrame root;
    root.channel_id = desc_.channel_id;
    root.start_packet_number = batch_pns[0].front();
    for (uint64_t dpn : batch_pns[0]) root.digests.push_back(digest_of(built[dpn]));
    if (next_carrier_digest && next_carrier_pn == batch_pns[0].back() + 1)
      root.digests.push_back(*next_carrier_digest);
    out.unicast_control.push_back(root);
    if (next_carrier_digest && next_carrier_pn != batch_pns[0].back() + 1)
      throw std::logic_error("carrier layout broke pn contiguity");

    if (rotation_key && (rotation_unicast_only || nbatches == 1)) {
      // Unicast-only rotations never ride the channel; tiny batches have no
      // carrier to ride in.
      out.unicast_control.push_back(*rotation_key);
    }
    if (pending_secret_) {
      secrets_.add(*pending_secret_, desc_.aead_id);
      active_secret_ = *pending_secret_;
      pending_secret_.reset();
    }

    for (auto& [p, dgram] : built) out.datagrams.push_back(std::move(dgram));
    next_pn_ += total_packets;
    return out;
  }

  // Re-sends previously published ranges on the channel (stream-level, new
  // packet numbers, fresh integrity chain).
  PublishOutput republish(const std::vector<StreamRange>& ranges) { return publish_ranges(ranges); }

  bool rotation_is_unicast_only(uint64_t rotation_index) const {
    return (rotation_index % cfg_.unicast_only_every) == 0;
  }

 private:
  Bytes build_packet(uint64_t pn, Bytes payload) {
    size_t header = 1 + desc_.channel_id.size() + cfg_.pn_len;
    size_t budget = cfg_.max_datagram - header - kAeadTagLen;
    if (payload.size() > budget) throw std::logic_error("packet payload exceeds datagram budget");
    while (payload.size() < min_protect_payload(cfg_.pn_len)) payload.push_back(kFramePadding);
    const ChannelSecret& s = secret_for(pn);
    ChannelKeys keys = derive_channel_keys(s, desc_.aead_id);
    MulticastPacketHeader hdr{desc_.channel_id, pn, cfg_.pn_len};
    return protect_packet(keys, header_key_, hdr, payload, cfg_.max_datagram);
  }

  const ChannelSecret& secret_for(uint64_t pn) const {
    const SecretStore::Entry* e = secrets_.select(pn);
    if (!e) throw std::logic_error("no secret covers published packet");
    return e->secret;
  }

  Bytes digest_of(const Bytes& datagram) const {
    return compute_packet_digest(desc_.hash_id, datagram);
  }

  ChannelSecret make_secret(uint64_t from_pn) {
    ChannelSecret s;
    s.from_packet_number = from_pn;
    s.secret.resize(32);
    for (auto& b : s.secret) b = static_cast<uint8_t>(rng_());
    return s;
  }

  void rotate_now(uint64_t from_pn) {
    ChannelSecret s = make_secret(from_pn);
    secrets_.add(s, desc_.aead_id);
    active_secret_ = s;
  }

  ChannelDescriptor desc_;
  ServerConfig cfg_;
  Bytes header_key_;
  SsmKey group_;
  SecretStore secrets_;
  ChannelSecret active_secret_;
  std::optional<ChannelSecret> pending_secret_;
  uint64_t next_pn_ = 0;
  uint64_t packets_since_rotation_ = 0;
  uint64_t rotation_count_ = 0;
  std::map<uint64_t, Bytes> stream_store_;
  std::map<uint64_t, PacketMeta> meta_;
  std::mt19937_64 rng_;
};

// Per-client server-side view: declared limits, reported channel states,
// ack state and fallback flags. Nothing here changes speculatively; only
// received frames and timeouts move it.
struct ClientChannelView {
  bool announced = false;
  ChannelState reported_state = ChannelState::Announced;
  bool join_outstanding = false;
  SimTime join_sent_at = 0;
  uint64_t join_floor_pn = 0;  // packets before this predate the join
  bool fallback = false;
  IntervalSet acked_pns;
  bool any_acked = false;
  uint64_t largest_acked = 0;
  SimTime last_ack_at = 0;
  IntervalSet loss_handled;
  uint64_t window_lost = 0;
  uint64_t window_acked = 0;
};

class ServerSession {
 public:
  struct ContentGroup {
    std::string name;
    std::vector<ChannelId> channels;  // alternative qualities, any order
  };

  ServerSession(SimNetwork& sim, NodeId self, ServerConfig cfg, uint64_t seed)
      : sim_(sim), self_(self), cfg_(cfg), seed_(seed) {
    sim_.set_handler(self_, [this](const Datagram& d) { on_datagram(d); });
    arm_housekeeping();
  }

  const ServerConfig& config() const { return cfg_; }
  NodeId node() const { return self_; }

  ChannelPublisher& add_channel(const ChannelDescriptor& desc) {
    auto [it, inserted] = publishers_.try_emplace(
        desc.channel_id, std::make_unique<ChannelPublisher>(desc, cfg_, seed_ ^ hash_cid(desc)));
    if (!inserted) throw ConfigError("duplicate channel id");
    return *it->second;
  }

  void add_content_group(const ContentGroup& g) {
    for (const auto& cid : g.channels)
      if (!publishers_.count(cid)) throw ConfigError("content group references unknown channel");
    contents_[g.name] = g;
    for (const auto& cid : g.channels) channel_content_[cid] = g.name;
  }

  // Registers a client connection. The connection secret is shared with the
  // client's endpoint out of band (it stands in for the TLS handshake).
  void add_client(NodeId node, ByteSpan connection_secret) {
    auto view = std::make_unique<ClientView>();
    view->node = node;
    view->endpoint = std::make_unique<UnicastEndpoint>(sim_, self_, node, Side::Server,
                                                       connection_secret);
    view->endpoint->set_payload_handler(
        [this, node](ByteSpan p) { on_client_payload(node, p); });
    view->endpoint->set_peer_params_handler(
        [this, node](const TransportParams& p) { on_client_params(node, p); });
    TransportParams own;
    own.server_multicast_supported = true;
    view->endpoint->start_handshake(own);
    views_.emplace(node, std::move(view));
  }

  // Serve one content group to every connected client: pick the best
  // fitting quality per client and instruct joins.
  void start_serving(const std::string& content) {
    auto it = contents_.find(content);
    if (it == contents_.end()) throw ConfigError("unknown content group: " + content);
    for (auto& [node, view] : views_) steer_client(*view, it->second, UINT64_MAX);
  }

  // Publishes bytes on every channel of a content group (each quality
  // carries its own copy) and serves fallback clients over unicast.
  void publish_content(const std::string& content, uint64_t stream_id, ByteSpan bytes) {
    auto it = contents_.find(content);
    if (it == contents_.end()) throw ConfigError("unknown content group: " + content);
    for (const ChannelId& cid : it->second.channels) {
      ChannelPublisher& pub = *publishers_.at(cid);
      uint64_t off = pub.append_stream(stream_id, bytes);
      auto output =
          pub.publish_ranges({ChannelPublisher::StreamRange{stream_id, off, bytes.size()}});
      dispatch_publish(cid, pub, output);
    }
    serve_fallback_clients(content);
  }

  // ---- Channel selection ----
  // Highest-rate candidate that fits the remaining budget; null when even
  // the smallest does not fit.
  const ChannelDescriptor* select_channel(const ClientLimits& limits, uint64_t used_kbps,
                                          const std::vector<const ChannelDescriptor*>& candidates,
                                          uint64_t below_rate = UINT64_MAX) const {
    const ChannelDescriptor* best = nullptr;
    for (const ChannelDescriptor* d : candidates) {
      if (d->max_rate_kbps >= below_rate) continue;
      if (used_kbps + d->max_rate_kbps > limits.max_aggregate_rate_kbps) continue;
      if (!client_compatible(limits, *d)) continue;
      if (!best || d->max_rate_kbps > best->max_rate_kbps) best = d;
    }
    return best;
  }

  // ---- Inspection ----
  struct ClientView {
    NodeId node = 0;
    std::unique_ptr<UnicastEndpoint> endpoint;
    bool multicast_negotiated = false;
    ClientLimits limits;
    std::map<ChannelId, ClientChannelView> channels;
    std::map<std::string, const ChannelDescriptor*> serving;  // content -> channel
    std::set<std::string> fallback_contents;
    uint64_t max_data_known = 8 << 20;
    // Believed-delivered stream ranges (acked multicast + reliable unicast).
    std::map<uint64_t, IntervalSet> delivered;
    std::map<uint64_t, IntervalSet> queued;  // unicast sends issued or pending
    std::deque<StreamFrame> send_queue;      // window-gated unicast stream data
    uint64_t unicast_stream_bytes = 0;
  };

  const std::map<NodeId, std::unique_ptr<ClientView>>& views() const { return views_; }
  ClientView& view(NodeId node) { return *views_.at(node); }
  const std::map<ChannelId, std::unique_ptr<ChannelPublisher>>& publishers() const {
    return publishers_;
  }
  ChannelPublisher& publisher(const ChannelId& cid) { return *publishers_.at(cid); }

  struct RetxStats {
    uint64_t multicast_packets = 0;
    uint64_t unicast_ranges = 0;
    uint64_t unicast_bytes = 0;
  };
  const std::map<ChannelId, RetxStats>& retx_stats() const { return retx_; }

  struct ChannelEgress {
    uint64_t packets = 0;
    uint64_t bytes = 0;
  };
  const std::map<ChannelId, ChannelEgress>& egress() const { return egress_; }

 private:
  friend class SimulationHarness;

  TraceWriter* trace() { return sim_.trace(); }

  static uint64_t hash_cid(const ChannelDescriptor& d) {
    uint64_t h = 1469598103934665603ull;
    for (uint8_t b : d.channel_id.bytes()) h = (h ^ b) * 1099511628211ull;
    return h;
  }

  bool client_compatible(const ClientLimits& limits, const ChannelDescriptor& d) const {
    auto has = [](const std::vector<uint16_t>& v, uint16_t x) {
      return std::find(v.begin(), v.end(), x) != v.end();
    };
    if (d.family == 4 && !limits.allow_ipv4) return false;
    if (d.family == 6 && !limits.allow_ipv6) return false;
    return has(limits.supported_hash_ids, static_cast<uint16_t>(d.hash_id)) &&
           has(limits.supported_aead_ids, static_cast<uint16_t>(d.aead_id));
  }

  void on_datagram(const Datagram& d) {
    if (d.is_multicast) return;  // the server does not subscribe to groups
    auto it = views_.find(d.from);
    if (it == views_.end()) return;
    it->second->endpoint->on_datagram(d);
  }

  // ---- Connection establishment ----
  void on_client_params(NodeId node, const TransportParams& p) {
    ClientView& v = view(node);
    v.multicast_negotiated = p.client_params_present;
    if (!v.multicast_negotiated) return;
    v.limits = p.client_limits;
    announce_all(v);
  }

  void announce_all(ClientView& v) {
    uint64_t announced = 0;
    for (const auto& [cid, pub] : publishers_) {
      if (announced >= v.limits.max_channels_announced) break;
      const ChannelDescriptor& d = pub->descriptor();
      if (!client_compatible(v.limits, d)) {
        if (trace())
          trace()->record(sim_.now(), "announceskip",
                          {{"client", std::to_string(v.node)}, {"ch", cid.hex()}});
        continue;
      }
      if (v.channels[cid].announced) continue;  // idempotent
      v.channels[cid].announced = true;
      v.endpoint->send_frame(d.to_announce());
      ++announced;
      if (trace())
        trace()->record(sim_.now(), "announce",
                        {{"client", std::to_string(v.node)}, {"ch", cid.hex()}});
    }
  }

  // ---- Steering ----
  void steer_client(ClientView& v, const ContentGroup& content, uint64_t below_rate) {
    if (!v.multicast_negotiated) {
      enable_fallback(v, content.name, nullptr);
      return;
    }
    std::vector<const ChannelDescriptor*> candidates;
    for (const ChannelId& cid : content.channels) {
      const ChannelDescriptor& d = publishers_.at(cid)->descriptor();
      if (v.channels.count(cid) && v.channels[cid].announced) candidates.push_back(&d);
    }
    uint64_t used = client_used_budget(v);
    const ChannelDescriptor* pick = select_channel(v.limits, used, candidates, below_rate);
    if (!pick) {
      enable_fallback(v, content.name, nullptr);
      return;
    }
    instruct_join(v, content.name, *pick);
  }

  uint64_t client_used_budget(const ClientView& v) const {
    uint64_t used = 0;
    for (const auto& [cid, cv] : v.channels) {
      if (cv.reported_state == ChannelState::Joined ||
          cv.reported_state == ChannelState::JoinPending || cv.join_outstanding)
        used += publishers_.at(cid)->descriptor().max_rate_kbps;
    }
    return used;
  }

  void instruct_join(ClientView& v, const std::string& content, const ChannelDescriptor& d) {
    ClientChannelView& cv = v.channels[d.channel_id];
    cv.join_outstanding = true;
    cv.join_sent_at = sim_.now();
    cv.join_floor_pn = publishers_.at(d.channel_id)->next_pn();
    v.serving[content] = &publishers_.at(d.channel_id)->descriptor();
    v.endpoint->send_frame(JoinFrame{d.channel_id});
    // A newly joining client gets the active secret over unicast.
    const ChannelSecret& s = publishers_.at(d.channel_id)->active_secret();
    v.endpoint->send_frame(KeyFrame{d.channel_id, s.from_packet_number, s.secret});
    if (trace())
      trace()->record(sim_.now(), "joininstr",
                      {{"client", std::to_string(v.node)},
                       {"ch", d.channel_id.hex()},
                       {"content", content}});
    // Exact-deadline fallback probe, independent of housekeeping cadence.
    NodeId node = v.node;
    ChannelId cid = d.channel_id;
    sim_.schedule(sim_.now() + cfg_.join_timeout_us, [this, node, cid]() {
      auto vit = views_.find(node);
      if (vit == views_.end()) return;
      auto cit = vit->second->channels.find(cid);
      if (cit == vit->second->channels.end()) return;
      check_one_join_timeout(*vit->second, cid, cit->second);
    });
  }

  void enable_fallback(ClientView& v, const std::string& content, const ChannelDescriptor* was) {
    if (v.fallback_contents.count(content)) return;
    v.fallback_contents.insert(content);
    if (trace())
      trace()->record(sim_.now(), "fallback",
                      {{"client", std::to_string(v.node)},
                       {"content", content},
                       {"ch", was ? was->channel_id.hex() : std::string("none")}});
    catch_up_fallback(v, content);
  }

  // The fallback copy comes from the lowest-rate channel of the group.
  const ChannelId& fallback_source(const std::string& content) const {
    const ContentGroup& g = contents_.at(content);
    const ChannelId* best = nullptr;
    uint64_t best_rate = UINT64_MAX;
    for (const ChannelId& cid : g.channels) {
      uint64_t r = publishers_.at(cid)->descriptor().max_rate_kbps;
      if (r < best_rate) {
        best_rate = r;
        best = &cid;
      }
    }
    return *best;
  }

  void catch_up_fallback(ClientView& v, const std::string& content) {
    const ChannelId& src = fallback_source(content);
    ChannelPublisher& pub = *publishers_.at(src);
    for (const auto& [stream_id, bytes] : pub.stream_store())
      queue_unicast_stream(v, pub, stream_id, 0, bytes.size());
    drain_send_queue(v);
  }

  void serve_fallback_clients(const std::string& content) {
    for (auto& [node, view] : views_) {
      if (!view->fallback_contents.count(content)) continue;
      catch_up_fallback(*view, content);
    }
  }

  // ---- Unicast stream delivery (fallback + retransmission) ----
  void queue_unicast_stream(ClientView& v, ChannelPublisher& pub, uint64_t stream_id,
                            uint64_t offset, uint64_t length) {
    IntervalSet& queued = v.queued[stream_id];
    const IntervalSet& delivered = v.delivered[stream_id];
    for (auto [gs, ge] : queued.gaps(offset, offset + length)) {
      for (auto [ds, de] : delivered.gaps(gs, ge)) {
        size_t chunk = pub.data_chunk_size();
        uint64_t off = ds;
        while (off < de) {
          uint64_t n = std::min<uint64_t>(de - off, chunk);
          StreamFrame f;
          f.stream_id = stream_id;
          f.offset = off;
          ByteSpan b = pub.stream_bytes(stream_id, off, n);
          f.data.assign(b.begin(), b.end());
          v.send_queue.push_back(std::move(f));
          off += n;
        }
      }
      queued.add(gs, ge);
    }
  }

  void drain_send_queue(ClientView& v) {
    while (!v.send_queue.empty()) {
      StreamFrame& f = v.send_queue.front();
      if (v.unicast_stream_bytes + f.data.size() > v.max_data_known) break;  // window-gated
      v.unicast_stream_bytes += f.data.size();
      v.delivered[f.stream_id].add(f.offset, f.offset + f.data.size());
      v.endpoint->send_frame(f);
      v.send_queue.pop_front();
    }
  }

  // ---- Frames from clients ----
  void on_client_payload(NodeId node, ByteSpan payload) {
    auto frames = parse_payload(payload);
    if (!frames) throw ProtocolError("malformed client payload");
    ClientView& v = view(node);
    for (const AnyFrame& f : *frames) {
      if (const auto* st = std::get_if<StateFrame>(&f)) on_state(v, *st);
      else if (const auto* ack = std::get_if<AckFrame>(&f)) on_mc_ack(v, *ack);
      else if (const auto* lim = std::get_if<LimitsFrame>(&f)) on_limits(v, *lim);
      else if (const auto* md = std::get_if<MaxDataFrame>(&f)) {
        v.max_data_known = std::max(v.max_data_known, md->max_data);
        drain_send_queue(v);
      } else {
        throw ProtocolError("unexpected frame type from client");
      }
    }
  }

  void on_state(ClientView& v, const StateFrame& f) {
    auto it = v.channels.find(f.channel_id);
    if (it == v.channels.end()) throw ProtocolError("STATE for unannounced channel");
    ClientChannelView& cv = it->second;
    auto state = static_cast<ChannelState>(f.new_state);
    auto reason = static_cast<ReasonCode>(f.reason_code);
    cv.reported_state = state;
    if (trace())
      trace()->record(sim_.now(), "clientstate",
                      {{"client", std::to_string(v.node)},
                       {"ch", f.channel_id.hex()},
                       {"state", to_string(state)},
                       {"reason", to_string(reason)}});
    const std::string* content = content_of(f.channel_id);
    switch (state) {
      case ChannelState::Joined:
        cv.join_outstanding = false;
        break;
      case ChannelState::DeclinedJoin:
        cv.join_outstanding = false;
        if (content) {
          if (reason == ReasonCode::RateExceeded) {
            // Pick the next lower quality of the same content.
            steer_client(v, contents_.at(*content),
                         publishers_.at(f.channel_id)->descriptor().max_rate_kbps);
          } else {
            enable_fallback(v, *content, &publishers_.at(f.channel_id)->descriptor());
          }
        }
        break;
      case ChannelState::Left:
        cv.join_outstanding = false;
        if (content && serving_channel_is(v, *content, f.channel_id)) {
          if (reason == ReasonCode::RateExceeded)
            steer_client(v, contents_.at(*content),
                         publishers_.at(f.channel_id)->descriptor().max_rate_kbps);
          else
            enable_fallback(v, *content, &publishers_.at(f.channel_id)->descriptor());
        }
        break;
      case ChannelState::Retired:
        v.channels.erase(it);
        break;
      case ChannelState::JoinPending:
      case ChannelState::Announced:
        break;
    }
  }

  bool serving_channel_is(const ClientView& v, const std::string& content,
                          const ChannelId& cid) const {
    auto it = v.serving.find(content);
    return it != v.serving.end() && it->second->channel_id == cid;
  }

  const std::string* content_of(const ChannelId& cid) const {
    auto it = channel_content_.find(cid);
    return it == channel_content_.end() ? nullptr : &it->second;
  }

  void on_mc_ack(ClientView& v, const AckFrame& f) {
    auto it = v.channels.find(f.channel_id);
    if (it == v.channels.end()) throw ProtocolError("MC_ACK for unannounced channel");
    ClientChannelView& cv = it->second;
    if (cv.reported_state != ChannelState::Joined &&
        cv.reported_state != ChannelState::JoinPending)
      throw ProtocolError("MC_ACK for a channel the client has not joined");
    cv.any_acked = true;
    cv.last_ack_at = sim_.now();
    ChannelPublisher& pub = *publishers_.at(f.channel_id);
    for (const AckRange& r : f.ranges) {
      cv.acked_pns.add(r.smallest(), r.largest + 1);
      cv.largest_acked = std::max(cv.largest_acked, r.largest);
      // Believed-delivered bookkeeping for retransmission dedup.
      for (uint64_t pn = r.smallest(); pn <= r.largest; ++pn) {
        auto mit = pub.packet_meta().find(pn);
        if (mit == pub.packet_meta().end()) continue;
        for (const auto& sr : mit->second.ranges)
          v.delivered[sr.stream_id].add(sr.offset, sr.offset + sr.length);
      }
    }
    for (const AckRange& r : f.ranges) cv.window_acked += r.count;
  }

  void on_limits(ClientView& v, const LimitsFrame& f) {
    v.limits = f.limits;
    if (trace())
      trace()->record(sim_.now(), "limitsupdate",
                      {{"client", std::to_string(v.node)},
                       {"rate", std::to_string(f.limits.max_aggregate_rate_kbps)}});
  }

  // ---- Publishing ----
  void dispatch_publish(const ChannelId& cid, ChannelPublisher& pub,
                        ChannelPublisher::PublishOutput& out) {
    // Control frames go to every client that is (or is about to be) on the
    // channel, over unicast.
    for (auto& [node, view] : views_) {
      auto it = view->channels.find(cid);
      if (it == view->channels.end()) continue;
      const ClientChannelView& cv = it->second;
      bool receiving = cv.reported_state == ChannelState::Joined ||
                       cv.reported_state == ChannelState::JoinPending || cv.join_outstanding;
      if (!receiving) continue;
      for (const McFrame& f : out.unicast_control) view->endpoint->send_frame(to_any(f));
    }
    for (const McFrame& f : out.unicast_control) {
      if (const auto* intg = std::get_if<IntegrityFrame>(&f)) {
        if (trace())
          trace()->record(sim_.now(), "integrity",
                          {{"ch", cid.hex()},
                           {"start", std::to_string(intg->start_packet_number)},
                           {"n", std::to_string(intg->digests.size())},
                           {"path", "uc"}});
      }
    }
    if (out.rotated && trace())
      trace()->record(sim_.now(), "rotate",
                      {{"ch", cid.hex()},
                       {"from", std::to_string(out.rotated->from_packet_number)},
                       {"path", out.rotation_unicast_only ? "uc" : "mc"}});

    // Pace the datagrams onto the wire at the channel's nominal rate.
    const ChannelDescriptor& d = pub.descriptor();
    SimTime& next_at = pace_next_.emplace(cid, sim_.now()).first->second;
    next_at = std::max(next_at, sim_.now());
    for (Bytes& dgram : out.datagrams) {
      egress_[cid].packets++;
      egress_[cid].bytes += dgram.size();
      SimTime at = next_at;
      uint64_t us = dgram.size() * 8000ull / d.max_rate_kbps;
      next_at += us;
      SsmKey group = pub.group();
      NodeId self = self_;
      Bytes copy = std::move(dgram);
      sim_.schedule(at, [this, group, copy = std::move(copy), self]() mutable {
        sim_.send_multicast(self, group, std::move(copy));
      });
    }
  }

  // ---- Housekeeping: fallback detection, loss handling ----
  void arm_housekeeping() {
    sim_.schedule(sim_.now() + cfg_.housekeeping_us, [this]() {
      housekeeping();
      arm_housekeeping();
    });
  }

  void housekeeping() {
    for (auto& [node, view] : views_) {
      check_join_timeouts(*view);
      detect_losses(*view);
    }
    process_loss_rounds();
    heavy_loss_checks();
    for (auto& [node, view] : views_) drain_send_queue(*view);
  }

  void check_join_timeouts(ClientView& v) {
    for (auto& [cid, cv] : v.channels) check_one_join_timeout(v, cid, cv);
  }

  void check_one_join_timeout(ClientView& v, const ChannelId& cid, ClientChannelView& cv) {
    if (!cv.join_outstanding) return;
    if (cv.reported_state == ChannelState::Joined || cv.any_acked) {
      cv.join_outstanding = false;
      return;
    }
    if (sim_.now() < cv.join_sent_at + cfg_.join_timeout_us) return;
    // No STATE(Joined) and no acks within the timeout: the client's network
    // does not deliver multicast. Serve it over unicast.
    cv.join_outstanding = false;
    cv.fallback = true;
    const std::string* content = content_of(cid);
    if (content) enable_fallback(v, *content, &publishers_.at(cid)->descriptor());
  }

  void detect_losses(ClientView& v) {
    for (auto& [cid, cv] : v.channels) {
      if (cv.reported_state != ChannelState::Joined) continue;
      if (!cv.any_acked || cv.largest_acked < cfg_.reorder_threshold) continue;
      uint64_t horizon = cv.largest_acked - cfg_.reorder_threshold;
      for (auto [gs, ge] : cv.acked_pns.gaps(cv.join_floor_pn, horizon + 1)) {
        for (uint64_t pn = gs; pn < ge; ++pn) {
          if (cv.loss_handled.contains(pn)) continue;
          cv.loss_handled.add_point(pn);
          cv.window_lost++;
          loss_round_[cid][pn].push_back(v.node);
        }
      }
    }
  }

  void process_loss_rounds() {
    for (auto& [cid, pns] : loss_round_) {
      ChannelPublisher& pub = *publishers_.at(cid);
      size_t joined = 0;
      for (const auto& [node, view] : views_) {
        auto it = view->channels.find(cid);
        if (it != view->channels.end() && it->second.reported_state == ChannelState::Joined)
          ++joined;
      }
      for (auto& [pn, losers] : pns) {
        auto mit = pub.packet_meta().find(pn);
        if (mit == pub.packet_meta().end()) continue;
        const ChannelPublisher::PacketMeta& meta = mit->second;
        bool widespread = joined > 0 && !mc_resent_.count({cid, pn}) &&
                          static_cast<double>(losers.size()) >=
                              cfg_.multicast_retx_fraction * static_cast<double>(joined);
        if (widespread && !meta.ranges.empty()) {
          mc_resent_.insert({cid, pn});
          auto out = pub.republish(meta.ranges);
          dispatch_publish(cid, pub, out);
          retx_[cid].multicast_packets += out.datagrams.size();
          if (trace())
            trace()->record(sim_.now(), "retx",
                            {{"ch", cid.hex()}, {"pn", std::to_string(pn)}, {"path", "mc"},
                             {"clients", std::to_string(losers.size())}});
          continue;
        }
        for (NodeId node : losers) {
          ClientView& v = view(node);
          // Stream-level retransmission of whatever is still missing.
          for (const auto& sr : meta.ranges) {
            const IntervalSet& delivered = v.delivered[sr.stream_id];
            auto missing = delivered.gaps(sr.offset, sr.offset + sr.length);
            if (missing.empty()) continue;  // satisfied by a later ack
            for (auto [ms, me] : missing) {
              queue_unicast_stream(v, pub, sr.stream_id, ms, me - ms);
              retx_[cid].unicast_ranges++;
              retx_[cid].unicast_bytes += me - ms;
            }
            if (trace())
              trace()->record(sim_.now(), "retx",
                              {{"ch", cid.hex()},
                               {"pn", std::to_string(pn)},
                               {"path", "uc"},
                               {"client", std::to_string(node)}});
          }
          // Lost control frames are re-sent over unicast directly.
          if (meta.integrity) v.endpoint->send_frame(*meta.integrity);
          if (meta.key) v.endpoint->send_frame(*meta.key);
          drain_send_queue(v);
        }
      }
    }
    loss_round_.clear();
  }

  void heavy_loss_checks() {
    if (sim_.now() < heavy_loss_window_start_ + cfg_.heavy_loss_window_us) return;
    heavy_loss_window_start_ = sim_.now();
    for (auto& [node, view] : views_) {
      for (auto& [cid, cv] : view->channels) {
        uint64_t total = cv.window_lost + cv.window_acked;
        if (cv.reported_state == ChannelState::Joined && total >= 20 &&
            static_cast<double>(cv.window_lost) >=
                cfg_.heavy_loss_threshold * static_cast<double>(total)) {
          view->endpoint->send_frame(
              LeaveFrame{cid, static_cast<uint64_t>(ReasonCode::HighLoss)});
          if (trace())
            trace()->record(sim_.now(), "leaveinstr",
                            {{"client", std::to_string(node)},
                             {"ch", cid.hex()},
                             {"reason", "high_loss"}});
        }
        cv.window_lost = 0;
        cv.window_acked = 0;
      }
    }
  }

  SimNetwork& sim_;
  NodeId self_;
  ServerConfig cfg_;
  uint64_t seed_;
  std::map<ChannelId, std::unique_ptr<ChannelPublisher>> publishers_;
  std::map<std::string, ContentGroup> contents_;
  std::map<ChannelId, std::string> channel_content_;
  std::map<NodeId, std::unique_ptr<ClientView>> views_;
  std::map<ChannelId, SimTime> pace_next_;
  std::map<ChannelId, std::map<uint64_t, std::vector<NodeId>>> loss_round_;
  std::set<std::pair<ChannelId, uint64_t>> mc_resent_;
  std::map<ChannelId, RetxStats> retx_;
  std::map<ChannelId, ChannelEgress> egress_;
  SimTime heavy_loss_window_start_ = 0;
};

}  // namespace mcquic
