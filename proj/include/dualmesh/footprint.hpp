#pragma once

#include <cstddef>

namespace dualmesh::protocol {

// Per-node RAM accounting against the 3.0 KB protocol budget.
//
// The model charges each table its entry count times the fixed per-entry
// size of the reference embedded layout, plus a fixed overhead for globals
// and table headers. Buffers (reassembly, staging) are charged per buffer
// in use.
struct FootprintCounts {
  int neighbors = 0;            // cap 16
  int two_hop_pairs = 0;        // cap 64
  int routes = 0;               // cap 24
  int pending_discoveries = 0;  // cap 4
  int duplicate_entries = 0;    // cap 64
  int reassembly_buffers = 0;   // cap 2
  int staging_buffers = 0;      // cap 1
};

struct Footprint {
  static constexpr int kNeighborCap = 16;
  static constexpr int kTwoHopCap = 64;
  static constexpr int kRouteCap = 24;
  static constexpr int kPendingCap = 4;
  static constexpr int kDuplicateCap = 64;
  static constexpr int kReassemblyCap = 2;
  static constexpr int kStagingCap = 1;

  static constexpr std::size_t kNeighborEntry = 8;
  static constexpr std::size_t kTwoHopEntry = 5;
  static constexpr std::size_t kRouteEntry = 12;
  static constexpr std::size_t kPendingEntry = 16;
  static constexpr std::size_t kDuplicateEntry = 6;
  static constexpr std::size_t kReassemblyBuffer = 140;
  static constexpr std::size_t kStagingBuffer = 140;
  static constexpr std::size_t kFixedOverhead = 256;

  static constexpr std::size_t kBudget = 3072;
};

// Deterministic byte total for the given occupancy. Throws
// std::invalid_argument when a count exceeds its cap.
std::size_t state_footprint(const FootprintCounts& counts);

// Footprint with every table at its configured cap.
std::size_t max_state_footprint();

}  // namespace dualmesh::protocol
