#pragma once

#include <cstdint>
#include <span>

#include "dualmesh/mesh.hpp"
#include "dualmesh/types.hpp"

namespace dualmesh::cluster {

struct Config {
  double demote_threshold_pct = 20.0;
  double recover_hysteresis_pct = 10.0;
};

struct ElectionState {
  NodeId self = 0;
  std::uint16_t original_key = 0;  // = node id
  std::uint16_t own_key = 0;
  bool demoted = false;
  bool is_ch = false;
  NodeId cluster = kUnassigned;
  double battery_pct = 100.0;
};

ElectionState make_election_state(NodeId self);

// Candidate ordering. A demoting node loses to any non-demoting one no
// matter its key; otherwise higher key wins, ties by higher id.
struct Rank {
  bool not_demoting = true;
  std::uint16_t key = 0;
  NodeId id = 0;

  friend bool operator<(const Rank& a, const Rank& b) {
    if (a.not_demoting != b.not_demoting) return !a.not_demoting;
    if (a.key != b.key) return a.key < b.key;
    return a.id < b.id;
  }
};

// Election over mutual PRESENT neighbors (neighbors whose own beacon lists
// this node):
//   - self outranks all of them  -> cluster head of itself;
//   - else join the highest-ranked mutual neighbor claiming CH;
//   - else adopt the cluster advertised by the highest-ranked mutual
//     neighbor (provisionally that neighbor itself while unassigned).
// An isolated node is the head of a singleton cluster.
ElectionState evaluate_role(const ElectionState& state,
                            std::span<const mesh::NeighborEntry> neighbors);

// Voluntary demotion: a CH below the threshold drops its advertised key
// (id - 0x8000, clamped up to 1) and raises the demoting flag, losing the
// next election. Recovery above threshold + hysteresis restores the key.
ElectionState apply_battery_policy(const ElectionState& state,
                                   double battery_pct, const Config& cfg);

// Demoted advertised key for a node id.
std::uint16_t demoted_key(NodeId id);

}  // namespace dualmesh::cluster
