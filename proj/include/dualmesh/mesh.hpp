#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dualmesh/footprint.hpp"
#include "dualmesh/fragment.hpp"
#include "dualmesh/rng.hpp"
#include "dualmesh/types.hpp"
#include "dualmesh/wire.hpp"

namespace dualmesh::mesh {

// RSSI-derived link quality: clamp(4 * (rssi + 110), 0, 255).
std::uint8_t link_quality(int rssi_dbm);

// Path cost: sum of (256 - lq) per hop, saturating at 65535. Throws
// std::invalid_argument on an empty list.
std::uint16_t path_cost(std::span<const std::uint8_t> lqs);

enum class NeighborStatus : std::uint8_t { Present, Stale };

struct NeighborEntry {
  NodeId id = 0;
  std::uint8_t lq = 0;
  double last_seen = 0.0;
  NeighborStatus status = NeighborStatus::Present;
  std::uint16_t advertised_key = 0;
  std::uint8_t flags = 0;  // beacon flags (CH / demoting)
  NodeId cluster = kUnassigned;
  std::array<NodeId, wire::kMaxBeaconNeighbors> their_neighbors{};
  std::uint8_t their_count = 0;

  bool is_ch() const { return (flags & wire::kFlagClusterHead) != 0; }
  bool demoting() const { return (flags & wire::kFlagDemoting) != 0; }
  bool lists(NodeId n) const;
};

struct TwoHopEntry {
  NodeId via = 0;     // the neighbor that advertised the pair
  NodeId target = 0;  // the advertised two-hop node
  std::uint8_t lq = 0;  // link quality via -> target, as advertised
};

struct RouteEntry {
  NodeId dest = 0;
  NodeId next_hop = 0;
  std::uint16_t path_cost = 0;
  std::uint8_t hop_count = 0;
  std::uint16_t dest_seq = 0;
  double expires = 0.0;
};

struct PendingDiscovery {
  NodeId dest = 0;
  int ring_phase = 0;  // 0 | 1 | 2 -> TTL 3, 6, 12
  double deadline = 0.0;
  std::uint8_t rreq_id = 0;
};

struct Config {
  double beacon_interval = 3.0;
  // PRESENT within 2 intervals, removed at 4.
  double presence_intervals = 2.0;
  double removal_intervals = 4.0;
  std::array<std::uint8_t, 3> ring_ttls{3, 6, 12};
  std::array<double, 3> ring_deadlines{1.0, 2.0, 4.0};
  double rebroadcast_jitter = 0.050;
  double route_lifetime = 60.0;
  std::uint8_t rrep_lifetime_s = 60;
  double reassembly_timeout = 5.0;
  std::uint8_t data_ttl = 12;
};

// --- Actions -------------------------------------------------------------
//
// The node is a pure state machine: the host owns the clock and the radios
// and interprets the returned actions. envelope_to models the advertising
// PDU's target address; payload bytes are the frames defined in wire.hpp.

struct SendBle {
  std::vector<std::uint8_t> bytes;
  NodeId envelope_to = kBroadcast;  // kBroadcast = undirected
  double delay = 0.0;               // relative to `now`
};

struct Deliver {  // message reassembled at this node
  NodeId src = 0;
  std::uint16_t msg_seq = 0;
  std::vector<std::uint8_t> payload;
};

struct Escalate {  // CH only: hand fragments to the LoRa backbone
  NodeId dest = 0;
  std::vector<wire::DataFragment> fragments;
};

struct WakeAt {  // host should call tick() no later than this
  double time = 0.0;
};

// Terminal loss of a fragment, reported so the host can account for the
// owning message. frag_index 0xFF means "all fragments of the message".
struct DroppedData {
  enum class Reason : std::uint8_t { Ttl, NoRoute, Overflow, Timeout };
  NodeId src = 0;
  std::uint16_t msg_seq = 0;
  std::uint8_t frag_index = 0;
  Reason reason = Reason::Ttl;
};

using Action = std::variant<SendBle, Deliver, Escalate, WakeAt, DroppedData>;
using Actions = std::vector<Action>;

// Route resolution outcome, in priority order.
struct RouteDecision {
  enum class Kind { Direct, TwoHop, Table, StartDiscovery } kind =
      Kind::StartDiscovery;
  NodeId next_hop = kUnassigned;
};

struct Counters {
  std::uint64_t dup_rreq_dropped = 0;
  std::uint64_t dup_fragment_dropped = 0;
  std::uint64_t ttl_dropped = 0;
  std::uint64_t no_route_dropped = 0;
  std::uint64_t staging_overflow = 0;
  std::uint64_t discovery_overflow = 0;
  std::uint64_t rrep_no_reverse_route = 0;
  std::uint64_t reassembly_conflicts = 0;
  std::uint64_t delivered = 0;
};

class NodeState {
 public:
  NodeState(NodeId self, const Config& cfg, std::uint64_t rng_seed);

  NodeId self() const { return self_; }
  const Config& config() const { return cfg_; }

  // Role wiring from the election module.
  void set_role(bool is_ch, NodeId cluster) {
    is_ch_ = is_ch;
    cluster_ = cluster;
  }
  bool is_ch() const { return is_ch_; }
  NodeId cluster() const { return cluster_; }

  // --- Event handlers (mutate state, return actions) ---
  Actions process_beacon(const wire::Beacon& beacon, int rssi_dbm, double now);
  Actions handle_rreq(const wire::Rreq& rreq, NodeId sender, int rssi_dbm,
                      double now);
  Actions handle_rrep(const wire::Rrep& rrep, NodeId sender, int rssi_dbm,
                      double now);
  // from_backbone marks fragments injected by the CH's LoRa side; they are
  // never re-escalated.
  Actions forward_data(const wire::DataFragment& frag, bool from_backbone,
                       double now);
  // Application entry point: fragment and route a payload of 1..120 bytes.
  Actions send_message(NodeId dst, std::span<const std::uint8_t> payload,
                       double now);
  // Timer-driven work: ring deadlines, reassembly eviction.
  Actions tick(double now);

  void expire_neighbors(double now);

  RouteDecision resolve_route(NodeId dest) const;

  // Beacon neighbor entries: up to 4 PRESENT neighbors, best LQ first
  // (ties by lower id).
  std::vector<wire::NeighborRef> beacon_neighbors() const;

  const std::vector<NeighborEntry>& neighbors() const { return neighbors_; }
  const std::vector<TwoHopEntry>& two_hop() const { return two_hop_; }
  const std::vector<RouteEntry>& routes() const { return routes_; }
  const std::vector<PendingDiscovery>& pending() const { return pending_; }
  const Counters& counters() const { return counters_; }
  std::uint16_t next_msg_seq() const { return msg_seq_; }

  protocol::FootprintCounts footprint_counts() const;

  static constexpr int kNeighborCap = protocol::Footprint::kNeighborCap;
  static constexpr int kRouteCap = protocol::Footprint::kRouteCap;
  static constexpr int kPendingCap = protocol::Footprint::kPendingCap;
  static constexpr int kDuplicateCap = protocol::Footprint::kDuplicateCap;
  static constexpr int kStagingFragmentCap = 8;
  static constexpr std::size_t kStagingPayloadCap = 120;

 private:
  struct DupEntry {  // shared cache for RREQ and fragment duplicates
    enum class Kind : std::uint8_t { Rreq, Fragment } kind = Kind::Rreq;
    NodeId a = 0;         // origin / src
    std::uint16_t b = 0;  // (rreq_id) / msg_seq
    std::uint8_t c = 0;   // unused / frag_index
    std::uint16_t cost = 0;  // best effective cost (RREQ only)
  };

  struct StagedFragment {
    wire::DataFragment frag;
    double queued_at = 0.0;
    bool from_backbone = false;  // never re-escalated to the backbone
  };

  NeighborEntry* find_neighbor(NodeId id);
  const NeighborEntry* find_neighbor(NodeId id) const;
  RouteEntry* find_route(NodeId dest, double now);
  const RouteEntry* find_route(NodeId dest, double now) const;
  void install_route(NodeId dest, NodeId next_hop, std::uint16_t cost,
                     std::uint8_t hops, std::uint16_t seq, double now,
                     double lifetime);
  void drop_routes_via(NodeId next_hop);
  DupEntry* find_dup(DupEntry::Kind kind, NodeId a, std::uint16_t b,
                     std::uint8_t c);
  void remember_dup(DupEntry entry);
  std::uint16_t link_cost(std::uint8_t lq) const {
    return static_cast<std::uint16_t>(256 - lq);
  }

  void start_discovery(NodeId dest, double now, Actions& out);
  void issue_rreq(PendingDiscovery& d, double now, Actions& out);
  bool stage_fragment(const wire::DataFragment& frag, double now,
                      bool from_backbone, Actions& out);
  void flush_staged(NodeId dest, NodeId next_hop, double now, Actions& out);
  void ring_exhausted(NodeId dest, double now, Actions& out);
  Actions accept_fragment(const wire::DataFragment& frag, double now);

  NodeId self_;
  Config cfg_;
  Rng rng_;

  bool is_ch_ = false;
  NodeId cluster_ = kUnassigned;

  std::vector<NeighborEntry> neighbors_;
  std::vector<TwoHopEntry> two_hop_;
  std::vector<RouteEntry> routes_;
  std::vector<PendingDiscovery> pending_;
  std::vector<DupEntry> dup_cache_;  // FIFO ring, cap 64
  std::size_t dup_next_ = 0;
  std::vector<StagedFragment> staging_;
  protocol::Reassembler reassembler_;

  std::uint16_t own_seq_ = 0;   // AODV destination sequence number
  std::uint16_t msg_seq_ = 0;   // next originated message id
  std::uint8_t next_rreq_id_ = 0;
  Counters counters_;
};

}  // namespace dualmesh::mesh
