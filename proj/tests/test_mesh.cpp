#include <algorithm>

#include "doctest.h"
#include "dualmesh/mesh.hpp"

using namespace dualmesh;
using namespace dualmesh::mesh;

namespace {

wire::Beacon beacon_from(NodeId node,
                         std::vector<wire::NeighborRef> neighbors = {},
                         NodeId cluster = kUnassigned, bool is_ch = false) {
  wire::Beacon b;
  b.node = node;
  b.advertised_key = node;
  b.cluster = cluster;
  b.flags = is_ch ? wire::kFlagClusterHead : 0;
  b.neighbors = std::move(neighbors);
  return b;
}

template <typename T>
std::vector<T> pick(const Actions& actions) {
  std::vector<T> out;
  for (const auto& a : actions)
    if (const auto* v = std::get_if<T>(&a)) out.push_back(*v);
  return out;
}

wire::Frame decode_ble_frame(const std::vector<std::uint8_t>& bytes) {
  auto d = wire::decode_ble(bytes);
  REQUIRE(d.ok());
  return *d;
}

NodeState make_node(NodeId id) { return NodeState(id, Config{}, 1); }

}  // namespace

TEST_CASE("link quality formula") {
  CHECK(link_quality(-110) == 0);
  CHECK(link_quality(-70) == 160);
  CHECK(link_quality(-40) == 255);
  CHECK(link_quality(-120) == 0);
  CHECK(link_quality(0) == 255);
}

TEST_CASE("path cost sums and saturates") {
  CHECK(path_cost(std::vector<std::uint8_t>{255}) == 1);
  CHECK(path_cost(std::vector<std::uint8_t>{255, 255}) == 2);
  CHECK(path_cost(std::vector<std::uint8_t>{160, 200}) == 152);
  std::vector<std::uint8_t> many(300, 0);  // 300 * 256 saturates
  CHECK(path_cost(many) == 65535);
  CHECK_THROWS_AS(path_cost({}), std::invalid_argument);
}

TEST_CASE("process_beacon maintains neighbor and two-hop tables") {
  auto n = make_node(1);
  n.process_beacon(beacon_from(2, {{7, 180}, {1, 200}}), -70, 0.0);

  REQUIRE(n.neighbors().size() == 1);
  const auto& e = n.neighbors().front();
  CHECK(e.id == 2);
  CHECK(e.lq == 160);
  CHECK(e.status == NeighborStatus::Present);
  CHECK(e.lists(1));

  // Two-hop cache holds (7 via 2) but not the self entry.
  REQUIRE(n.two_hop().size() == 1);
  CHECK(n.two_hop().front().via == 2);
  CHECK(n.two_hop().front().target == 7);

  // Refresh updates lq and last_seen.
  n.process_beacon(beacon_from(2), -60, 1.0);
  CHECK(n.neighbors().front().lq == 200);
  CHECK(n.neighbors().front().last_seen == 1.0);
  CHECK(n.two_hop().empty());  // new beacon listed no neighbors
}

TEST_CASE("neighbor table eviction prefers weak stale entries") {
  auto n = make_node(1);
  for (int i = 0; i < 16; ++i)
    n.process_beacon(beacon_from(static_cast<NodeId>(100 + i)),
                     -100 + i, 0.0);
  REQUIRE(n.neighbors().size() == 16);
  // Make node 100 (weakest) stale.
  for (int i = 1; i < 16; ++i)
    n.process_beacon(beacon_from(static_cast<NodeId>(100 + i)), -100 + i,
                     10.0);
  n.expire_neighbors(10.0);
  n.process_beacon(beacon_from(200), -50, 10.0);
  CHECK(n.neighbors().size() == 16);
  CHECK(n.resolve_route(100).kind == RouteDecision::Kind::StartDiscovery);
  CHECK(n.resolve_route(200).kind == RouteDecision::Kind::Direct);
}

TEST_CASE("expire_neighbors stales then removes") {
  auto n = make_node(1);
  n.process_beacon(beacon_from(2), -70, 0.0);
  n.process_beacon(beacon_from(3, {{9, 100}}), -70, 0.0);

  n.expire_neighbors(5.0);  // under 2 intervals (6 s)
  CHECK(n.neighbors()[0].status == NeighborStatus::Present);

  n.expire_neighbors(7.0);  // over 2 intervals
  CHECK(n.neighbors()[0].status == NeighborStatus::Stale);
  CHECK(n.resolve_route(2).kind == RouteDecision::Kind::StartDiscovery);

  n.expire_neighbors(13.0);  // over 4 intervals: removed
  CHECK(n.neighbors().empty());
  CHECK(n.two_hop().empty());
}

TEST_CASE("resolve_route priority order") {
  auto n = make_node(1);

  CHECK(n.resolve_route(9).kind == RouteDecision::Kind::StartDiscovery);

  // Two-hop beats table; direct beats two-hop.
  n.process_beacon(beacon_from(2, {{9, 150}}), -70, 0.0);
  auto d = n.resolve_route(9);
  CHECK(d.kind == RouteDecision::Kind::TwoHop);
  CHECK(d.next_hop == 2);

  n.process_beacon(beacon_from(9), -90, 0.0);
  d = n.resolve_route(9);
  CHECK(d.kind == RouteDecision::Kind::Direct);
  CHECK(d.next_hop == 9);
}

TEST_CASE("two-hop choice takes lowest combined cost, ties by lower id") {
  auto n = make_node(1);
  n.process_beacon(beacon_from(5, {{9, 100}}), -70, 0.0);  // 96 + 156 = 252
  n.process_beacon(beacon_from(3, {{9, 200}}), -80, 0.0);  // 136 + 56 = 192
  auto d = n.resolve_route(9);
  CHECK(d.kind == RouteDecision::Kind::TwoHop);
  CHECK(d.next_hop == 3);

  // Equal combined cost: prefer the lower relay id.
  auto m = make_node(1);
  m.process_beacon(beacon_from(4, {{9, 150}}), -70, 0.0);
  m.process_beacon(beacon_from(2, {{9, 150}}), -70, 0.0);
  auto e = m.resolve_route(9);
  CHECK(e.next_hop == 2);
}

TEST_CASE("rreq handling: reply, duplicate suppression, ring boundary") {
  auto n = make_node(5);
  n.process_beacon(beacon_from(4), -70, 0.0);

  wire::Rreq rreq;
  rreq.rreq_id = 1;
  rreq.origin = 2;
  rreq.origin_seq = 10;
  rreq.dest = 5;
  rreq.ttl = 3;
  rreq.path_cost = 96;
  rreq.hop_count = 1;

  SUBCASE("self is destination: unicast RREP back") {
    auto actions = n.handle_rreq(rreq, 4, -70, 1.0);
    auto sends = pick<SendBle>(actions);
    REQUIRE(sends.size() == 1);
    CHECK(sends[0].envelope_to == 4);
    auto frame = decode_ble_frame(sends[0].bytes);
    const auto& rrep = std::get<wire::Rrep>(frame);
    CHECK(rrep.origin == 2);
    CHECK(rrep.dest == 5);
    CHECK(rrep.hop_count == 0);
    CHECK(rrep.path_cost == 0);
    // Reverse route to the origin was installed with the accumulated cost.
    REQUIRE(n.routes().size() == 1);
    CHECK(n.routes()[0].dest == 2);
    CHECK(n.routes()[0].next_hop == 4);
    CHECK(n.routes()[0].path_cost == 96 + (256 - 160));
  }

  SUBCASE("duplicate with equal or higher cost dropped") {
    n.handle_rreq(rreq, 4, -70, 1.0);
    auto again = n.handle_rreq(rreq, 4, -70, 1.1);
    CHECK(again.empty());
    CHECK(n.counters().dup_rreq_dropped == 1);
    // Strictly lower cost is reprocessed.
    auto better = rreq;
    better.path_cost = 0;
    auto actions = n.handle_rreq(better, 4, -70, 1.2);
    CHECK(!actions.empty());
  }

  SUBCASE("ttl 1 and not destination: no rebroadcast") {
    auto fwd = rreq;
    fwd.dest = 9;
    fwd.ttl = 1;
    auto actions = n.handle_rreq(fwd, 4, -70, 1.0);
    CHECK(pick<SendBle>(actions).empty());
  }

  SUBCASE("relay rebroadcasts with ttl-1 and accumulated cost") {
    auto fwd = rreq;
    fwd.dest = 9;
    auto actions = n.handle_rreq(fwd, 4, -70, 1.0);
    auto sends = pick<SendBle>(actions);
    REQUIRE(sends.size() == 1);
    CHECK(sends[0].envelope_to == kBroadcast);
    CHECK(sends[0].delay >= 0.0);
    CHECK(sends[0].delay <= 0.05);
    const auto& out = std::get<wire::Rreq>(decode_ble_frame(sends[0].bytes));
    CHECK(out.ttl == 2);
    CHECK(out.hop_count == 2);
    CHECK(out.path_cost == 96 + (256 - 160));
  }
}

TEST_CASE("rrep handling installs, forwards and flushes") {
  Config cfg;

  SUBCASE("origin flushes staged traffic when the route arrives") {
    NodeState origin(1, cfg, 7);
    origin.process_beacon(beacon_from(2), -70, 0.0);
    std::vector<std::uint8_t> payload{1, 2, 3};
    auto actions = origin.send_message(9, payload, 0.0);
    // No route: discovery started, nothing sent yet.
    CHECK(pick<SendBle>(actions).size() == 1);  // the RREQ
    CHECK(origin.pending().size() == 1);

    wire::Rrep rrep;
    rrep.origin = 1;
    rrep.dest = 9;
    rrep.dest_seq = 4;
    rrep.hop_count = 1;
    rrep.path_cost = 60;
    rrep.lifetime_s = 60;
    auto flush = origin.handle_rrep(rrep, 2, -70, 0.5);
    auto sends = pick<SendBle>(flush);
    REQUIRE(sends.size() == 1);
    const auto& frag = std::get<wire::DataFragment>(
        decode_ble_frame(sends[0].bytes));
    CHECK(frag.dst == 9);
    CHECK(sends[0].envelope_to == 2);
    CHECK(origin.pending().empty());
  }

  SUBCASE("better-cost rrep replaces an existing route") {
    NodeState n(1, cfg, 7);
    n.process_beacon(beacon_from(2), -70, 0.0);
    n.process_beacon(beacon_from(3), -70, 0.0);
    wire::Rrep a;
    a.origin = 1;
    a.dest = 9;
    a.dest_seq = 4;
    a.path_cost = 300;
    a.lifetime_s = 60;
    n.handle_rrep(a, 2, -70, 0.0);
    REQUIRE(n.routes().size() == 1);
    CHECK(n.routes()[0].next_hop == 2);
    wire::Rrep b = a;
    b.path_cost = 10;
    n.handle_rrep(b, 3, -70, 0.1);
    REQUIRE(n.routes().size() == 1);
    CHECK(n.routes()[0].next_hop == 3);
    CHECK(n.routes()[0].path_cost == 10 + 96);
  }

  SUBCASE("no reverse route: dropped and counted") {
    NodeState n(7, cfg, 7);
    wire::Rrep rrep;
    rrep.origin = 1;
    rrep.dest = 9;
    auto actions = n.handle_rrep(rrep, 2, -70, 0.0);
    CHECK(pick<SendBle>(actions).empty());
    CHECK(n.counters().rrep_no_reverse_route == 1);
  }
}

TEST_CASE("forward_data paths") {
  Config cfg;
  NodeState n(5, cfg, 3);
  n.process_beacon(beacon_from(6), -70, 0.0);

  wire::DataFragment frag;
  frag.src = 1;
  frag.dst = 6;
  frag.msg_seq = 11;
  frag.ttl = 4;
  frag.frag_index = 0;
  frag.frag_count = 1;
  frag.payload = {42};

  SUBCASE("forwards with ttl-1 to a resolved next hop") {
    auto actions = n.forward_data(frag, false, 1.0);
    auto sends = pick<SendBle>(actions);
    REQUIRE(sends.size() == 1);
    CHECK(sends[0].envelope_to == 6);
    const auto& out =
        std::get<wire::DataFragment>(decode_ble_frame(sends[0].bytes));
    CHECK(out.ttl == 3);
  }

  SUBCASE("ttl 0 dropped") {
    auto dead = frag;
    dead.ttl = 0;
    auto actions = n.forward_data(dead, false, 1.0);
    CHECK(pick<SendBle>(actions).empty());
    CHECK(n.counters().ttl_dropped == 1);
    auto drops = pick<DroppedData>(actions);
    REQUIRE(drops.size() == 1);
    CHECK(drops[0].reason == DroppedData::Reason::Ttl);
  }

  SUBCASE("duplicate dropped exactly once") {
    n.forward_data(frag, false, 1.0);
    auto again = n.forward_data(frag, false, 1.1);
    CHECK(again.empty());
    CHECK(n.counters().dup_fragment_dropped == 1);
  }

  SUBCASE("fragment addressed to self reassembles and delivers") {
    auto mine = frag;
    mine.dst = 5;
    auto actions = n.forward_data(mine, false, 1.0);
    auto deliveries = pick<Deliver>(actions);
    REQUIRE(deliveries.size() == 1);
    CHECK(deliveries[0].payload == std::vector<std::uint8_t>{42});
    CHECK(n.counters().delivered == 1);
  }
}

TEST_CASE("expanding ring discovery escalates through TTL 3, 6, 12") {
  Config cfg;
  NodeState n(1, cfg, 3);
  n.set_role(false, 7);             // member of cluster 7
  n.process_beacon(beacon_from(7), -70, 0.0);  // the CH is a neighbor

  std::vector<std::uint8_t> payload{9, 9};
  auto a0 = n.send_message(42, payload, 0.0);
  auto sends = pick<SendBle>(a0);
  REQUIRE(sends.size() == 1);
  CHECK(std::get<wire::Rreq>(decode_ble_frame(sends[0].bytes)).ttl == 3);
  REQUIRE(n.pending().size() == 1);

  // Ring 0 deadline (1 s) passes: reissue with ttl 6.
  auto a1 = n.tick(1.0);
  sends = pick<SendBle>(a1);
  REQUIRE(sends.size() == 1);
  CHECK(std::get<wire::Rreq>(decode_ble_frame(sends[0].bytes)).ttl == 6);

  // Ring 1 deadline (2 s more) passes: ttl 12.
  auto a2 = n.tick(3.0);
  sends = pick<SendBle>(a2);
  REQUIRE(sends.size() == 1);
  CHECK(std::get<wire::Rreq>(decode_ble_frame(sends[0].bytes)).ttl == 12);

  // Ring 2 deadline (4 s more) passes: member forwards staged data to CH.
  auto a3 = n.tick(7.0);
  sends = pick<SendBle>(a3);
  REQUIRE(sends.size() == 1);
  const auto& frag =
      std::get<wire::DataFragment>(decode_ble_frame(sends[0].bytes));
  CHECK(frag.dst == 42);
  CHECK(sends[0].envelope_to == 7);
  CHECK(n.pending().empty());

  // No pending discoveries: quiet tick.
  CHECK(n.tick(8.0).empty());
}

TEST_CASE("ring exhaustion at a CH escalates to the backbone") {
  Config cfg;
  NodeState n(7, cfg, 3);
  n.set_role(true, 7);
  std::vector<std::uint8_t> payload{1};
  n.send_message(42, payload, 0.0);
  n.tick(1.0);
  n.tick(3.0);
  auto actions = n.tick(7.0);
  auto esc = pick<Escalate>(actions);
  REQUIRE(esc.size() == 1);
  CHECK(esc[0].dest == 42);
  REQUIRE(esc[0].fragments.size() == 1);
  CHECK(esc[0].fragments[0].dst == 42);
}

TEST_CASE("backbone-injected fragments never re-escalate") {
  Config cfg;
  NodeState n(7, cfg, 3);
  n.set_role(true, 7);
  wire::DataFragment frag;
  frag.src = 1;
  frag.dst = 42;
  frag.msg_seq = 1;
  frag.ttl = 6;
  frag.payload = {1};
  n.forward_data(frag, true, 0.0);
  n.tick(1.0);
  n.tick(3.0);
  auto actions = n.tick(7.0);
  CHECK(pick<Escalate>(actions).empty());
  auto drops = pick<DroppedData>(actions);
  REQUIRE(drops.size() == 1);
  CHECK(drops[0].reason == DroppedData::Reason::NoRoute);
  CHECK(n.counters().no_route_dropped == 1);
}

TEST_CASE("beacon processing is idempotent for identical inputs") {
  auto a = make_node(1);
  auto b = make_node(1);
  auto beacon = beacon_from(2, {{7, 180}}, 9, true);
  a.process_beacon(beacon, -70, 1.0);
  b.process_beacon(beacon, -70, 1.0);
  b.process_beacon(beacon, -70, 1.0);  // twice
  REQUIRE(a.neighbors().size() == b.neighbors().size());
  CHECK(a.neighbors()[0].lq == b.neighbors()[0].lq);
  CHECK(a.neighbors()[0].last_seen == b.neighbors()[0].last_seen);
  CHECK(a.two_hop().size() == b.two_hop().size());
}

TEST_CASE("footprint counts reflect table occupancy") {
  auto n = make_node(1);
  auto base = n.footprint_counts();
  CHECK(base.neighbors == 0);
  n.process_beacon(beacon_from(2, {{7, 100}, {8, 100}}), -70, 0.0);
  auto c = n.footprint_counts();
  CHECK(c.neighbors == 1);
  CHECK(c.two_hop_pairs == 2);
  CHECK(dualmesh::protocol::state_footprint(c) -
            dualmesh::protocol::state_footprint(base) ==
        dualmesh::protocol::Footprint::kNeighborEntry +
            2 * dualmesh::protocol::Footprint::kTwoHopEntry);
}
