#include "dualmesh/footprint.hpp"

#include <stdexcept>
#include <string>

namespace dualmesh::protocol {

namespace {

void check(int count, int cap, const char* what) {
  if (count < 0 || count > cap)
    throw std::invalid_argument(std::string("footprint: ") + what +
                                " count out of range");
}

}  // namespace

std::size_t state_footprint(const FootprintCounts& c) {
  check(c.neighbors, Footprint::kNeighborCap, "neighbor");
  check(c.two_hop_pairs, Footprint::kTwoHopCap, "two-hop");
  check(c.routes, Footprint::kRouteCap, "route");
  check(c.pending_discoveries, Footprint::kPendingCap, "pending-discovery");
  check(c.duplicate_entries, Footprint::kDuplicateCap, "duplicate-cache");
  check(c.reassembly_buffers, Footprint::kReassemblyCap, "reassembly");
  check(c.staging_buffers, Footprint::kStagingCap, "staging");

  return Footprint::kFixedOverhead +
         c.neighbors * Footprint::kNeighborEntry +
         c.two_hop_pairs * Footprint::kTwoHopEntry +
         c.routes * Footprint::kRouteEntry +
         c.pending_discoveries * Footprint::kPendingEntry +
         c.duplicate_entries * Footprint::kDuplicateEntry +
         c.reassembly_buffers * Footprint::kReassemblyBuffer +
         c.staging_buffers * Footprint::kStagingBuffer;
}

std::size_t max_state_footprint() {
  FootprintCounts c;
  c.neighbors = Footprint::kNeighborCap;
  c.two_hop_pairs = Footprint::kTwoHopCap;
  c.routes = Footprint::kRouteCap;
  c.pending_discoveries = Footprint::kPendingCap;
  c.duplicate_entries = Footprint::kDuplicateCap;
  c.reassembly_buffers = Footprint::kReassemblyCap;
  c.staging_buffers = Footprint::kStagingCap;
  return state_footprint(c);
}

}  // namespace dualmesh::protocol
