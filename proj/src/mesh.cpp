#include "dualmesh/mesh.hpp"

#include <algorithm>
#include <stdexcept>

namespace dualmesh::mesh {

std::uint8_t link_quality(int rssi_dbm) {
  const int lq = 4 * (rssi_dbm + 110);
  return static_cast<std::uint8_t>(std::clamp(lq, 0, 255));
}

std::uint16_t path_cost(std::span<const std::uint8_t> lqs) {
  if (lqs.empty()) throw std::invalid_argument("path_cost: empty hop list");
  std::uint32_t sum = 0;
  for (std::uint8_t lq : lqs) sum += 256u - lq;
  return static_cast<std::uint16_t>(std::min(sum, 65535u));
}

bool NeighborEntry::lists(NodeId n) const {
  for (std::uint8_t i = 0; i < their_count; ++i)
    if (their_neighbors[i] == n) return true;
  return false;
}

NodeState::NodeState(NodeId self, const Config& cfg, std::uint64_t rng_seed)
    : self_(self),
      cfg_(cfg),
      rng_(Rng::for_stream(rng_seed, self)),
      reassembler_(cfg.reassembly_timeout) {
  dup_cache_.reserve(kDuplicateCap);
}

NeighborEntry* NodeState::find_neighbor(NodeId id) {
  for (auto& n : neighbors_)
    if (n.id == id) return &n;
  return nullptr;
}

const NeighborEntry* NodeState::find_neighbor(NodeId id) const {
  for (const auto& n : neighbors_)
    if (n.id == id) return &n;
  return nullptr;
}

RouteEntry* NodeState::find_route(NodeId dest, double now) {
  for (auto& r : routes_)
    if (r.dest == dest && r.expires > now) return &r;
  return nullptr;
}

const RouteEntry* NodeState::find_route(NodeId dest, double now) const {
  for (const auto& r : routes_)
    if (r.dest == dest && r.expires > now) return &r;
  return nullptr;
}

void NodeState::install_route(NodeId dest, NodeId next_hop,
                              std::uint16_t cost, std::uint8_t hops,
                              std::uint16_t seq, double now, double lifetime) {
  for (auto& r : routes_) {
    if (r.dest != dest) continue;
    const bool expired = r.expires <= now;
    const bool fresher = seq_newer(seq, r.dest_seq);
    const bool cheaper = seq == r.dest_seq && cost < r.path_cost;
    if (expired || fresher || cheaper) {
      r = RouteEntry{dest, next_hop, cost, hops, seq, now + lifetime};
    } else if (seq == r.dest_seq && next_hop == r.next_hop &&
               cost == r.path_cost) {
      r.expires = now + lifetime;  // refresh an identical route
    }
    return;
  }
  if (routes_.size() >= static_cast<std::size_t>(kRouteCap)) {
    // Evict the soonest-expiring entry, ties by lower dest id.
    auto victim = std::min_element(
        routes_.begin(), routes_.end(), [](const auto& a, const auto& b) {
          return a.expires != b.expires ? a.expires < b.expires
                                        : a.dest < b.dest;
        });
    routes_.erase(victim);
  }
  routes_.push_back(RouteEntry{dest, next_hop, cost, hops, seq,
                               now + lifetime});
}

void NodeState::drop_routes_via(NodeId next_hop) {
  std::erase_if(routes_, [&](const RouteEntry& r) {
    return r.next_hop == next_hop;
  });
}

NodeState::DupEntry* NodeState::find_dup(DupEntry::Kind kind, NodeId a,
                                         std::uint16_t b, std::uint8_t c) {
  for (auto& e : dup_cache_)
    if (e.kind == kind && e.a == a && e.b == b && e.c == c) return &e;
  return nullptr;
}

void NodeState::remember_dup(DupEntry entry) {
  if (dup_cache_.size() < static_cast<std::size_t>(kDuplicateCap)) {
    dup_cache_.push_back(entry);
    return;
  }
  dup_cache_[dup_next_] = entry;  // FIFO ring
  dup_next_ = (dup_next_ + 1) % kDuplicateCap;
}

Actions NodeState::process_beacon(const wire::Beacon& beacon, int rssi_dbm,
                                  double now) {
  Actions out;
  if (beacon.node == self_) return out;

  NeighborEntry* entry = find_neighbor(beacon.node);
  if (entry == nullptr) {
    if (neighbors_.size() >= static_cast<std::size_t>(kNeighborCap)) {
      // Prefer evicting a STALE entry; lowest LQ first, ties by lower id.
      auto weakest = [](const NeighborEntry& a, const NeighborEntry& b) {
        return a.lq != b.lq ? a.lq < b.lq : a.id < b.id;
      };
      auto victim = neighbors_.end();
      for (auto it = neighbors_.begin(); it != neighbors_.end(); ++it)
        if (it->status == NeighborStatus::Stale &&
            (victim == neighbors_.end() || weakest(*it, *victim)))
          victim = it;
      if (victim == neighbors_.end())
        victim = std::min_element(neighbors_.begin(), neighbors_.end(),
                                  weakest);
      const NodeId evicted = victim->id;
      neighbors_.erase(victim);
      std::erase_if(two_hop_,
                    [&](const TwoHopEntry& t) { return t.via == evicted; });
      drop_routes_via(evicted);
    }
    neighbors_.push_back(NeighborEntry{});
    entry = &neighbors_.back();
    entry->id = beacon.node;
  }

  entry->lq = link_quality(rssi_dbm);
  entry->last_seen = now;
  entry->status = NeighborStatus::Present;
  entry->advertised_key = beacon.advertised_key;
  entry->flags = beacon.flags;
  entry->cluster = beacon.cluster;
  entry->their_count = 0;
  for (const auto& n : beacon.neighbors) {
    entry->their_neighbors[entry->their_count++] = n.id;
  }

  // Refresh the two-hop cache from the advertised neighbor list.
  std::erase_if(two_hop_,
                [&](const TwoHopEntry& t) { return t.via == beacon.node; });
  for (const auto& n : beacon.neighbors) {
    if (n.id == self_ || n.id == beacon.node) continue;
    two_hop_.push_back(TwoHopEntry{beacon.node, n.id, n.lq});
  }
  return out;
}

void NodeState::expire_neighbors(double now) {
  const double present_window = cfg_.presence_intervals * cfg_.beacon_interval;
  const double removal_window = cfg_.removal_intervals * cfg_.beacon_interval;
  std::vector<NodeId> removed;
  for (auto& n : neighbors_) {
    const double age = now - n.last_seen;
    if (age >= removal_window)
      removed.push_back(n.id);
    else if (age >= present_window)
      n.status = NeighborStatus::Stale;
  }
  for (NodeId id : removed) {
    std::erase_if(neighbors_, [&](const NeighborEntry& n) { return n.id == id; });
    std::erase_if(two_hop_, [&](const TwoHopEntry& t) { return t.via == id; });
    drop_routes_via(id);
  }
}

RouteDecision NodeState::resolve_route(NodeId dest) const {
  const NeighborEntry* direct = find_neighbor(dest);
  if (direct != nullptr && direct->status == NeighborStatus::Present)
    return {RouteDecision::Kind::Direct, dest};

  // Two-hop cache: lowest combined cost, ties by lower relay id.
  const TwoHopEntry* best = nullptr;
  std::uint32_t best_cost = 0;
  for (const auto& t : two_hop_) {
    if (t.target != dest) continue;
    const NeighborEntry* via = find_neighbor(t.via);
    if (via == nullptr || via->status != NeighborStatus::Present) continue;
    const std::uint32_t cost = (256u - via->lq) + (256u - t.lq);
    if (best == nullptr || cost < best_cost ||
        (cost == best_cost && t.via < best->via)) {
      best = &t;
      best_cost = cost;
    }
  }
  if (best != nullptr) return {RouteDecision::Kind::TwoHop, best->via};

  for (const auto& r : routes_) {
    if (r.dest != dest) continue;
    const NeighborEntry* hop = find_neighbor(r.next_hop);
    if (hop != nullptr && hop->status == NeighborStatus::Present)
      return {RouteDecision::Kind::Table, r.next_hop};
  }
  return {RouteDecision::Kind::StartDiscovery, kUnassigned};
}

std::vector<wire::NeighborRef> NodeState::beacon_neighbors() const {
  std::vector<const NeighborEntry*> present;
  for (const auto& n : neighbors_)
    if (n.status == NeighborStatus::Present) present.push_back(&n);
  std::sort(present.begin(), present.end(),
            [](const NeighborEntry* a, const NeighborEntry* b) {
              return a->lq != b->lq ? a->lq > b->lq : a->id < b->id;
            });
  std::vector<wire::NeighborRef> out;
  for (const auto* n : present) {
    if (out.size() == wire::kMaxBeaconNeighbors) break;
    out.push_back(wire::NeighborRef{n->id, n->lq});
  }
  return out;
}

void NodeState::start_discovery(NodeId dest, double now, Actions& out) {
  for (auto& d : pending_)
    if (d.dest == dest) return;  // already searching; message is staged
  if (pending_.size() >= static_cast<std::size_t>(kPendingCap)) {
    ++counters_.discovery_overflow;
    for (const auto& s : staging_)
      if (s.frag.dst == dest)
        out.push_back(DroppedData{s.frag.src, s.frag.msg_seq,
                                  s.frag.frag_index,
                                  DroppedData::Reason::Overflow});
    std::erase_if(staging_, [&](const StagedFragment& s) {
      return s.frag.dst == dest;
    });
    return;
  }
  PendingDiscovery d;
  d.dest = dest;
  d.ring_phase = 0;
  pending_.push_back(d);
  issue_rreq(pending_.back(), now, out);
}

void NodeState::issue_rreq(PendingDiscovery& d, double now, Actions& out) {
  d.rreq_id = next_rreq_id_++;
  d.deadline = now + cfg_.ring_deadlines[d.ring_phase];
  ++own_seq_;

  wire::Rreq rreq;
  rreq.rreq_id = d.rreq_id;
  rreq.origin = self_;
  rreq.origin_seq = own_seq_;
  rreq.dest = d.dest;
  const RouteEntry* stale = nullptr;
  for (const auto& r : routes_)
    if (r.dest == d.dest) stale = &r;
  rreq.dest_seq = stale != nullptr ? stale->dest_seq : 0;
  rreq.hop_count = 0;
  rreq.path_cost = 0;
  rreq.ttl = cfg_.ring_ttls[d.ring_phase];

  out.push_back(SendBle{wire::encode(wire::Frame{rreq}), kBroadcast, 0.0});
  out.push_back(WakeAt{d.deadline});
}

bool NodeState::stage_fragment(const wire::DataFragment& frag, double now,
                               bool from_backbone, Actions& out) {
  std::size_t payload_total = 0;
  for (const auto& s : staging_) payload_total += s.frag.payload.size();
  if (staging_.size() >= static_cast<std::size_t>(kStagingFragmentCap) ||
      payload_total + frag.payload.size() > kStagingPayloadCap) {
    ++counters_.staging_overflow;
    out.push_back(DroppedData{frag.src, frag.msg_seq, frag.frag_index,
                              DroppedData::Reason::Overflow});
    return false;
  }
  staging_.push_back(StagedFragment{frag, now, from_backbone});
  return true;
}

void NodeState::flush_staged(NodeId dest, NodeId next_hop, double now,
                             Actions& out) {
  (void)now;
  for (auto& s : staging_) {
    if (s.frag.dst != dest) continue;
    out.push_back(
        SendBle{wire::encode(wire::Frame{s.frag}), next_hop, 0.0});
  }
  std::erase_if(staging_,
                [&](const StagedFragment& s) { return s.frag.dst == dest; });
}

void NodeState::ring_exhausted(NodeId dest, double now, Actions& out) {
  (void)now;
  std::vector<wire::DataFragment> frags;
  for (const auto& s : staging_) {
    if (s.frag.dst != dest) continue;
    if (s.from_backbone) {
      // Already crossed the backbone once; dies here.
      ++counters_.no_route_dropped;
      out.push_back(DroppedData{s.frag.src, s.frag.msg_seq, s.frag.frag_index,
                                DroppedData::Reason::NoRoute});
    } else {
      frags.push_back(s.frag);
    }
  }
  std::erase_if(staging_,
                [&](const StagedFragment& s) { return s.frag.dst == dest; });
  if (frags.empty()) return;

  if (is_ch_) {
    out.push_back(Escalate{dest, std::move(frags)});
    return;
  }
  // Hand the queued traffic to the cluster head for escalation.
  if (cluster_ != kUnassigned && cluster_ != self_) {
    const RouteDecision to_ch = resolve_route(cluster_);
    if (to_ch.kind != RouteDecision::Kind::StartDiscovery) {
      for (const auto& f : frags)
        out.push_back(SendBle{wire::encode(wire::Frame{f}), to_ch.next_hop,
                              0.0});
      return;
    }
  }
  counters_.no_route_dropped += frags.size();
  for (const auto& f : frags)
    out.push_back(DroppedData{f.src, f.msg_seq, f.frag_index,
                              DroppedData::Reason::NoRoute});
}

Actions NodeState::handle_rreq(const wire::Rreq& rreq, NodeId sender,
                               int rssi_dbm, double now) {
  Actions out;
  if (rreq.origin == self_) return out;

  const std::uint8_t lq = link_quality(rssi_dbm);
  const std::uint32_t effective =
      std::min<std::uint32_t>(rreq.path_cost + link_cost(lq), 65535u);

  DupEntry* seen = find_dup(DupEntry::Kind::Rreq, rreq.origin, rreq.rreq_id, 0);
  if (seen != nullptr && effective >= seen->cost) {
    ++counters_.dup_rreq_dropped;
    return out;
  }
  if (seen != nullptr)
    seen->cost = static_cast<std::uint16_t>(effective);
  else
    remember_dup(DupEntry{DupEntry::Kind::Rreq, rreq.origin, rreq.rreq_id, 0,
                          static_cast<std::uint16_t>(effective)});

  install_route(rreq.origin, sender, static_cast<std::uint16_t>(effective),
                static_cast<std::uint8_t>(rreq.hop_count + 1),
                rreq.origin_seq, now, cfg_.route_lifetime);

  if (rreq.dest == self_) {
    ++own_seq_;
    if (rreq.dest_seq != 0 && seq_newer(rreq.dest_seq, own_seq_))
      own_seq_ = rreq.dest_seq;
    wire::Rrep rrep;
    rrep.origin = rreq.origin;
    rrep.origin_seq = rreq.origin_seq;
    rrep.dest = self_;
    rrep.dest_seq = own_seq_;
    rrep.hop_count = 0;
    rrep.path_cost = 0;
    rrep.lifetime_s = cfg_.rrep_lifetime_s;
    out.push_back(SendBle{wire::encode(wire::Frame{rrep}), sender, 0.0});
    return out;
  }

  // A fresh cached route lets an intermediate answer on the dest's behalf.
  const RouteEntry* cached = find_route(rreq.dest, now);
  if (cached != nullptr &&
      (rreq.dest_seq == 0 || !seq_newer(rreq.dest_seq, cached->dest_seq))) {
    const NeighborEntry* hop = find_neighbor(cached->next_hop);
    if (hop != nullptr && hop->status == NeighborStatus::Present) {
      wire::Rrep rrep;
      rrep.origin = rreq.origin;
      rrep.origin_seq = rreq.origin_seq;
      rrep.dest = rreq.dest;
      rrep.dest_seq = cached->dest_seq;
      rrep.hop_count = cached->hop_count;
      rrep.path_cost = cached->path_cost;
      rrep.lifetime_s = cfg_.rrep_lifetime_s;
      out.push_back(SendBle{wire::encode(wire::Frame{rrep}), sender, 0.0});
      return out;
    }
  }

  if (rreq.ttl > 1) {
    wire::Rreq fwd = rreq;
    fwd.ttl = rreq.ttl - 1;
    fwd.hop_count = rreq.hop_count + 1;
    fwd.path_cost = static_cast<std::uint16_t>(effective);
    const double jitter = rng_.uniform(0.0, cfg_.rebroadcast_jitter);
    out.push_back(SendBle{wire::encode(wire::Frame{fwd}), kBroadcast, jitter});
  }
  return out;
}

Actions NodeState::handle_rrep(const wire::Rrep& rrep, NodeId sender,
                               int rssi_dbm, double now) {
  Actions out;
  const std::uint8_t lq = link_quality(rssi_dbm);
  const std::uint16_t new_cost = static_cast<std::uint16_t>(
      std::min<std::uint32_t>(rrep.path_cost + link_cost(lq), 65535u));

  install_route(rrep.dest, sender, new_cost,
                static_cast<std::uint8_t>(rrep.hop_count + 1), rrep.dest_seq,
                now, static_cast<double>(rrep.lifetime_s));

  if (rrep.origin == self_) {
    std::erase_if(pending_, [&](const PendingDiscovery& d) {
      return d.dest == rrep.dest;
    });
    const RouteDecision route = resolve_route(rrep.dest);
    if (route.kind != RouteDecision::Kind::StartDiscovery)
      flush_staged(rrep.dest, route.next_hop, now, out);
    return out;
  }

  const RouteEntry* reverse = find_route(rrep.origin, now);
  if (reverse == nullptr) {
    ++counters_.rrep_no_reverse_route;
    return out;
  }
  wire::Rrep fwd = rrep;
  fwd.path_cost = new_cost;
  fwd.hop_count = rrep.hop_count + 1;
  out.push_back(
      SendBle{wire::encode(wire::Frame{fwd}), reverse->next_hop, 0.0});
  return out;
}

Actions NodeState::accept_fragment(const wire::DataFragment& frag,
                                   double now) {
  Actions out;
  auto result = reassembler_.add(frag, now);
  for (const auto& [src, seq] : reassembler_.take_evicted())
    out.push_back(DroppedData{src, seq, 0xFF, DroppedData::Reason::Timeout});
  switch (result.kind) {
    case protocol::ReassemblyResult::Kind::Complete:
      ++counters_.delivered;
      out.push_back(Deliver{frag.src, frag.msg_seq, std::move(result.payload)});
      break;
    case protocol::ReassemblyResult::Kind::Pending:
      out.push_back(WakeAt{now + cfg_.reassembly_timeout});
      break;
    case protocol::ReassemblyResult::Kind::Error:
      ++counters_.reassembly_conflicts;
      break;
  }
  return out;
}

Actions NodeState::forward_data(const wire::DataFragment& frag,
                                bool from_backbone, double now) {
  Actions out;

  if (find_dup(DupEntry::Kind::Fragment, frag.src, frag.msg_seq,
               frag.frag_index) != nullptr) {
    ++counters_.dup_fragment_dropped;
    return out;
  }
  remember_dup(DupEntry{DupEntry::Kind::Fragment, frag.src, frag.msg_seq,
                        frag.frag_index, 0});

  if (frag.dst == self_) return accept_fragment(frag, now);

  if (frag.ttl == 0) {
    ++counters_.ttl_dropped;
    out.push_back(DroppedData{frag.src, frag.msg_seq, frag.frag_index,
                              DroppedData::Reason::Ttl});
    return out;
  }

  wire::DataFragment fwd = frag;
  fwd.ttl = frag.ttl - 1;

  const RouteDecision route = resolve_route(frag.dst);
  if (route.kind != RouteDecision::Kind::StartDiscovery) {
    out.push_back(SendBle{wire::encode(wire::Frame{fwd}), route.next_hop, 0.0});
    return out;
  }

  if (stage_fragment(fwd, now, from_backbone, out))
    start_discovery(frag.dst, now, out);
  return out;
}

Actions NodeState::send_message(NodeId dst,
                                std::span<const std::uint8_t> payload,
                                double now) {
  if (dst == self_)
    throw std::invalid_argument("send_message: destination is self");
  Actions out;
  auto frags =
      protocol::fragment_message(self_, dst, msg_seq_++, cfg_.data_ttl,
                                 payload);
  const RouteDecision route = resolve_route(dst);
  if (route.kind != RouteDecision::Kind::StartDiscovery) {
    for (const auto& f : frags)
      out.push_back(SendBle{wire::encode(wire::Frame{f}), route.next_hop, 0.0});
    return out;
  }
  bool staged = false;
  for (const auto& f : frags)
    staged = stage_fragment(f, now, false, out) || staged;
  if (staged) start_discovery(dst, now, out);
  return out;
}

Actions NodeState::tick(double now) {
  Actions out;
  reassembler_.evict_expired(now);
  for (const auto& [src, seq] : reassembler_.take_evicted())
    out.push_back(DroppedData{src, seq, 0xFF, DroppedData::Reason::Timeout});

  std::vector<NodeId> exhausted;
  for (auto& d : pending_) {
    if (now < d.deadline) continue;
    if (d.ring_phase < 2) {
      ++d.ring_phase;
      issue_rreq(d, now, out);
    } else {
      exhausted.push_back(d.dest);
    }
  }
  for (NodeId dest : exhausted) {
    std::erase_if(pending_,
                  [&](const PendingDiscovery& d) { return d.dest == dest; });
    ring_exhausted(dest, now, out);
  }
  return out;
}

protocol::FootprintCounts NodeState::footprint_counts() const {
  protocol::FootprintCounts c;
  c.neighbors = static_cast<int>(neighbors_.size());
  c.two_hop_pairs = static_cast<int>(two_hop_.size());
  c.routes = static_cast<int>(routes_.size());
  c.pending_discoveries = static_cast<int>(pending_.size());
  c.duplicate_entries = static_cast<int>(dup_cache_.size());
  c.reassembly_buffers = reassembler_.active_buffers();
  c.staging_buffers = staging_.empty() ? 0 : 1;
  return c;
}

}  // namespace dualmesh::mesh
