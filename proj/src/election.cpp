#include "dualmesh/election.hpp"

namespace dualmesh::cluster {

ElectionState make_election_state(NodeId self) {
  ElectionState s;
  s.self = self;
  s.original_key = self;
  s.own_key = self;
  return s;
}

std::uint16_t demoted_key(NodeId id) {
  return id > 0x8000 ? static_cast<std::uint16_t>(id - 0x8000) : 1;
}

ElectionState evaluate_role(const ElectionState& state,
                            std::span<const mesh::NeighborEntry> neighbors) {
  ElectionState next = state;
  const Rank self_rank{!state.demoted, state.own_key, state.self};

  const mesh::NeighborEntry* best = nullptr;       // highest-ranked mutual
  const mesh::NeighborEntry* best_ch = nullptr;    // ... that claims CH
  bool beaten = false;
  for (const auto& n : neighbors) {
    if (n.status != mesh::NeighborStatus::Present) continue;
    if (!n.lists(state.self)) continue;  // not mutual
    const Rank rank{!n.demoting(), n.advertised_key, n.id};
    if (self_rank < rank) beaten = true;
    if (best == nullptr ||
        Rank{!best->demoting(), best->advertised_key, best->id} < rank)
      best = &n;
    if (n.is_ch() &&
        (best_ch == nullptr ||
         Rank{!best_ch->demoting(), best_ch->advertised_key, best_ch->id} <
             rank))
      best_ch = &n;
  }

  if (!beaten) {
    // Highest key among mutual PRESENT neighbors (or isolated).
    next.is_ch = true;
    next.cluster = state.self;
    return next;
  }

  next.is_ch = false;
  if (best_ch != nullptr) {
    next.cluster = best_ch->id;
  } else if (best->cluster != kUnassigned) {
    next.cluster = best->cluster;  // relayed membership
  } else {
    next.cluster = best->id;  // provisional, until its claim settles
  }
  return next;
}

ElectionState apply_battery_policy(const ElectionState& state,
                                   double battery_pct, const Config& cfg) {
  ElectionState next = state;
  next.battery_pct = battery_pct;
  if (!state.demoted) {
    if (state.is_ch && battery_pct < cfg.demote_threshold_pct) {
      next.demoted = true;
      next.own_key = demoted_key(state.self);
    }
  } else if (battery_pct >=
             cfg.demote_threshold_pct + cfg.recover_hysteresis_pct) {
    next.demoted = false;
    next.own_key = state.original_key;
  }
  return next;
}

}  // namespace dualmesh::cluster
