#include "dualmesh/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "dualmesh/rng.hpp"

namespace dualmesh::sim {

int rssi_dbm_from_distance(double d_m) {
  const double rssi = -40.0 - 25.0 * std::log10(std::max(d_m, 1.0) / 10.0);
  return static_cast<int>(std::llround(std::clamp(rssi, -110.0, -40.0)));
}

const char* to_string(MessageStatus status) {
  switch (status) {
    case MessageStatus::Delivered: return "delivered";
    case MessageStatus::InFlight: return "in_flight";
    case MessageStatus::DroppedTtl: return "dropped_ttl";
    case MessageStatus::DroppedCollision: return "dropped_collision";
    case MessageStatus::DroppedNoRoute: return "dropped_no_route";
    case MessageStatus::DroppedOverflow: return "dropped_overflow";
    case MessageStatus::DroppedTimeout: return "dropped_timeout";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (nodes.empty()) fail("scenario: needs at least one node");
  for (const auto& n : nodes) {
    if (n.id == kUnassigned || n.id == kBroadcast)
      fail("scenario: node ids 0x0000 and 0xFFFF are reserved");
    int count = 0;
    for (const auto& m : nodes) count += (m.id == n.id) ? 1 : 0;
    if (count != 1) fail("scenario: node ids must be unique");
  }
  if (duration_s <= 0) fail("scenario: duration must be > 0");
  if (payload_bytes < 1 ||
      payload_bytes > static_cast<int>(wire::kMaxMessagePayload))
    fail("scenario: payload_bytes must be 1..120");
  if (traffic.beta < 0 || traffic.beta > 1)
    fail("scenario: beta must be in [0,1]");
  if (traffic.rate_per_node_per_min < 0) fail("scenario: rate must be >= 0");
  if (ble_channels != 1 && ble_channels != 3)
    fail("scenario: ble_channels must be 1 or 3");
  if (beacon_interval_s <= 0) fail("scenario: beacon_interval must be > 0");
  if (ble_range_m < 0 || lora_range_m < 0) fail("scenario: ranges must be >= 0");
  auto has_node = [&](NodeId id) {
    for (const auto& n : nodes)
      if (n.id == id) return true;
    return false;
  };
  for (const auto& i : injections) {
    if (!has_node(i.src) || !has_node(i.dst) || i.src == i.dst)
      fail("scenario: injection needs distinct existing src/dst");
    if (i.time < 0 || i.time > duration_s)
      fail("scenario: injection time outside run");
  }
  for (const auto& b : battery_events)
    if (!has_node(b.node) || b.pct < 0 || b.pct > 100)
      fail("scenario: bad battery event");
  if (airtime_mode == AirtimeMode::Formula) lora_phy.validate();
}

RxOutcome propagate(const Transmission& tx, double rx_x, double rx_y,
                    std::span<const Transmission> concurrent, NodeId receiver,
                    const backbone::ListenSchedule* rx_listen) {
  auto dist = [](double ax, double ay, double bx, double by) {
    return std::hypot(ax - bx, ay - by);
  };
  if (dist(tx.x, tx.y, rx_x, rx_y) > tx.range) return RxOutcome::OutOfRange;

  if (tx.radio == Radio::Lora && rx_listen != nullptr) {
    // The whole frame must land inside one receive window.
    double phase = std::fmod(tx.start - rx_listen->offset_s,
                             rx_listen->period_s);
    if (phase < 0) phase += rx_listen->period_s;
    const double window_start = tx.start - phase;
    if (phase >= rx_listen->window_s ||
        tx.end > window_start + rx_listen->window_s + 1e-12)
      return RxOutcome::NotListening;
  }

  for (const auto& other : concurrent) {
    if (other.radio != tx.radio) continue;
    if (other.start == tx.start && other.end == tx.end &&
        other.sender == tx.sender)
      continue;  // the transmission under test
    const bool overlaps = other.start < tx.end && tx.start < other.end;
    if (!overlaps) continue;
    if (other.sender == receiver) return RxOutcome::SelfBusy;
    if (other.channel != tx.channel) continue;
    if (dist(other.x, other.y, rx_x, rx_y) <= other.range)
      return RxOutcome::CollisionLost;
  }
  return RxOutcome::Received;
}

AlohaResult run_aloha_experiment(double offered_load, int frames,
                                 double frame_time_s, std::uint64_t seed) {
  if (offered_load <= 0 || frames < 1 || frame_time_s <= 0)
    throw std::invalid_argument("aloha experiment: bad parameters");
  Rng rng(seed);
  const double mean_gap = frame_time_s / offered_load;
  std::vector<double> starts(frames);
  double t = 0.0;
  for (int i = 0; i < frames; ++i) {
    t += rng.exponential(mean_gap);
    starts[i] = t;
  }
  int successes = 0;
  for (int i = 0; i < frames; ++i) {
    const bool prev_clear = i == 0 || starts[i] - starts[i - 1] >= frame_time_s;
    const bool next_clear =
        i == frames - 1 || starts[i + 1] - starts[i] >= frame_time_s;
    successes += (prev_clear && next_clear) ? 1 : 0;
  }
  const double elapsed = starts.back() + frame_time_s - starts.front();
  AlohaResult result;
  result.offered_load = frames * frame_time_s / elapsed;
  result.throughput = successes * frame_time_s / elapsed;
  result.success_fraction = static_cast<double>(successes) / frames;
  return result;
}

namespace {

using mesh::NodeState;

enum class EventKind : std::uint8_t {
  BeaconTx,
  MeshTick,
  TrafficArrival,
  Inject,
  RxEnd,
  FlushCheck,
  DigestTimer,
  Battery,
};

struct Event {
  double time = 0.0;
  NodeId node = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::BeaconTx;
  std::uint64_t a = 0;  // tx id / injection index / battery index
};

struct EventOrder {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    if (x.node != y.node) return x.node > y.node;
    return x.seq > y.seq;
  }
};

struct MsgKey {
  NodeId src;
  std::uint16_t seq;
  bool operator<(const MsgKey& o) const {
    return src != o.src ? src < o.src : seq < o.seq;
  }
  bool operator==(const MsgKey& o) const {
    return src == o.src && seq == o.seq;
  }
};

struct FragKey {
  NodeId src;
  std::uint16_t seq;
  std::uint8_t idx;
  bool operator<(const FragKey& o) const {
    if (src != o.src) return src < o.src;
    if (seq != o.seq) return seq < o.seq;
    return idx < o.idx;
  }
};

struct FragTransit {
  int ble_hops = 0;
  int lora_hops = 0;
};

struct ActiveTx {
  Transmission tx;
  std::vector<std::uint8_t> bytes;
  NodeId envelope_to = kBroadcast;
  bool is_data = false;  // carries message fragments
  std::vector<MsgKey> msgs;
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    e_ble_ = cfg_.ble_tx_mw * 1e-3 * cfg_.ble_airtime_s;
    e_lora_paper_ = cfg_.lora_tx_mw * 1e-3 * cfg_.lora_airtime_s;
    build_nodes();
  }

  MetricsReport run();

 private:
  struct SimNode {
    NodePlacement place;
    NodeState mesh;
    cluster::ElectionState election;
    std::optional<backbone::ChState> ch;
    backbone::ListenSchedule listen;
    std::array<double, 2> radio_free{0.0, 0.0};
    double beacon_phase = 0.0;
    std::uint64_t beacon_count = 0;
    Rng rng;
    EnergyLedger ledger;
    double lora_airtime_sum = 0.0;
    double ch_since = -1.0;

    SimNode(const NodePlacement& p, const mesh::Config& mc,
            std::uint64_t seed)
        : place(p),
          mesh(p.id, mc, seed),
          election(cluster::make_election_state(p.id)),
          rng(Rng::for_stream(seed, 0x10000u + p.id)) {}
  };

  void build_nodes();
  SimNode& node(NodeId id) { return nodes_.at(index_.at(id)); }
  void schedule(double time, NodeId n, EventKind kind, std::uint64_t a = 0);
  void apply_actions(SimNode& n, mesh::Actions actions, double now);
  void schedule_ble_tx(SimNode& n, std::vector<std::uint8_t> bytes,
                       NodeId envelope_to, double earliest);
  void queue_lora_tx(SimNode& n, const wire::LoraFrame& frame, double now);
  double next_lora_slot(double t, double toa, NodeId id) const;
  void reevaluate_role(SimNode& n, double now);
  void handle_rx(const ActiveTx& atx, SimNode& rx, double now);
  void record_drop(const mesh::DroppedData& drop);
  void mark_collision(const ActiveTx& atx);
  void account_listen(SimNode& n, double upto);
  std::vector<NodeId> member_view(const SimNode& n) const;
  std::vector<std::uint8_t> payload_for(NodeId src, std::uint16_t seq) const;
  void originate(SimNode& n, NodeId dst, double now);
  void check_route_invariants() const;
  double lora_frame_airtime(std::size_t bytes) const;
  MetricsReport finalize();

  ScenarioConfig cfg_;
  std::vector<SimNode> nodes_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t event_seq_ = 0;
  double now_ = 0.0;

  std::unordered_map<std::uint64_t, ActiveTx> live_tx_;
  std::vector<Transmission> interference_;
  std::uint64_t next_tx_id_ = 1;

  std::map<MsgKey, std::size_t> msg_index_;
  std::vector<MessageRecord> messages_;
  std::map<MsgKey, int> msg_ble_txs_;
  std::map<MsgKey, double> msg_lora_energy_;
  std::map<MsgKey, double> msg_lora_airtime_;
  std::map<MsgKey, bool> msg_collision_;
  std::map<FragKey, FragTransit> frag_transit_;

  std::vector<ChRoleEvent> ch_events_;
  double ble_airtime_total_ = 0.0;
  double lora_airtime_total_ = 0.0;
  double e_ble_ = 0.0;
  double e_lora_paper_ = 0.0;
};

void Engine::build_nodes() {
  nodes_.reserve(cfg_.nodes.size());
  for (const auto& p : cfg_.nodes) {
    index_[p.id] = nodes_.size();
    mesh::Config mc = cfg_.mesh;
    mc.beacon_interval = cfg_.beacon_interval_s;
    nodes_.emplace_back(p, mc, cfg_.seed);
    SimNode& n = nodes_.back();
    n.listen = backbone::ListenSchedule{cfg_.backbone.listen_period_s,
                                        cfg_.backbone.listen_window_s,
                                        cfg_.backbone.epoch_offset_s};
    n.beacon_phase = n.rng.uniform(0.0, cfg_.beacon_interval_s);
  }
}

void Engine::schedule(double time, NodeId n, EventKind kind, std::uint64_t a) {
  queue_.push(Event{time, n, event_seq_++, kind, a});
}

double Engine::lora_frame_airtime(std::size_t bytes) const {
  if (cfg_.airtime_mode == AirtimeMode::PaperConstants)
    return cfg_.lora_airtime_s;
  return analytics::lora_time_on_air(cfg_.lora_phy, static_cast<int>(bytes));
}

double Engine::next_lora_slot(double t, double toa, NodeId id) const {
  const auto& bb = cfg_.backbone;
  const double slot_width = 0.4;
  int usable = 1;
  if (toa < bb.listen_window_s)
    usable = std::max(
        1, static_cast<int>(std::floor((bb.listen_window_s - toa) /
                                       slot_width)) + 1);
  const double slot_off = (id % usable) * slot_width;
  double k = std::ceil((t - bb.epoch_offset_s - slot_off) /
                           bb.listen_period_s - 1e-12);
  if (k < 0) k = 0;
  return bb.epoch_offset_s + k * bb.listen_period_s + slot_off;
}

std::vector<std::uint8_t> Engine::payload_for(NodeId src,
                                              std::uint16_t seq) const {
  std::vector<std::uint8_t> payload(cfg_.payload_bytes);
  for (std::size_t i = 0; i < payload.size(); ++i)
    payload[i] = static_cast<std::uint8_t>(src * 31 + seq * 7 + i);
  return payload;
}

void Engine::schedule_ble_tx(SimNode& n, std::vector<std::uint8_t> bytes,
                             NodeId envelope_to, double earliest) {
  const double start =
      std::max(earliest, n.radio_free[static_cast<int>(Radio::Ble)]);
  const double end = start + cfg_.ble_airtime_s;
  n.radio_free[static_cast<int>(Radio::Ble)] = end;

  ActiveTx atx;
  atx.tx = Transmission{n.place.id, Radio::Ble,
                        cfg_.ble_channels == 3
                            ? static_cast<int>(n.rng.uniform_int(3))
                            : 0,
                        start, end, n.place.x, n.place.y, cfg_.ble_range_m};
  atx.envelope_to = envelope_to;
  atx.bytes = std::move(bytes);

  auto decoded = wire::decode_ble(atx.bytes);
  if (decoded.ok()) {
    if (const auto* frag = std::get_if<wire::DataFragment>(&*decoded)) {
      atx.is_data = true;
      atx.msgs.push_back(MsgKey{frag->src, frag->msg_seq});
      msg_ble_txs_[atx.msgs.front()] += 1;
    }
  }

  n.ledger.ble_tx_count += 1;
  ble_airtime_total_ += cfg_.ble_airtime_s;

  const std::uint64_t id = next_tx_id_++;
  interference_.push_back(atx.tx);
  for (const auto& other : nodes_) {
    if (other.place.id == n.place.id) continue;
    schedule(end, other.place.id, EventKind::RxEnd, id);
  }
  live_tx_.emplace(id, std::move(atx));
}

void Engine::queue_lora_tx(SimNode& n, const wire::LoraFrame& frame,
                           double now) {
  std::vector<std::uint8_t> bytes = wire::encode(wire::Frame{frame});
  const double toa = lora_frame_airtime(bytes.size());
  const double earliest = std::max(
      now, n.radio_free[static_cast<int>(Radio::Lora)]);
  const double start = next_lora_slot(earliest, toa, n.place.id);
  const double end = start + toa;
  n.radio_free[static_cast<int>(Radio::Lora)] = end;

  ActiveTx atx;
  atx.tx = Transmission{n.place.id, Radio::Lora, 0, start, end,
                        n.place.x, n.place.y, cfg_.lora_range_m};
  atx.envelope_to = kBroadcast;
  atx.bytes = std::move(bytes);
  if (!frame.is_digest()) {
    atx.is_data = true;
    for (const auto& raw : frame.fragments) {
      auto decoded = wire::decode_ble(raw);
      if (!decoded.ok()) continue;
      if (const auto* frag = std::get_if<wire::DataFragment>(&*decoded)) {
        MsgKey key{frag->src, frag->msg_seq};
        if (std::find(atx.msgs.begin(), atx.msgs.end(), key) ==
            atx.msgs.end())
          atx.msgs.push_back(key);
      }
    }
    const double e_frame = cfg_.airtime_mode == AirtimeMode::PaperConstants
                               ? e_lora_paper_
                               : cfg_.lora_tx_mw * 1e-3 * toa;
    for (const auto& key : atx.msgs) {
      msg_lora_energy_[key] += e_frame / atx.msgs.size();
      msg_lora_airtime_[key] += toa;
    }
  }

  n.ledger.lora_tx_count += 1;
  n.lora_airtime_sum += toa;
  lora_airtime_total_ += toa;

  const std::uint64_t id = next_tx_id_++;
  interference_.push_back(atx.tx);
  for (const auto& other : nodes_) {
    if (other.place.id == n.place.id) continue;
    schedule(end, other.place.id, EventKind::RxEnd, id);
  }
  live_tx_.emplace(id, std::move(atx));
}

void Engine::record_drop(const mesh::DroppedData& drop) {
  auto it = msg_index_.find(MsgKey{drop.src, drop.msg_seq});
  if (it == msg_index_.end()) return;
  MessageRecord& rec = messages_[it->second];
  if (rec.status != MessageStatus::InFlight) return;  // first reason wins
  switch (drop.reason) {
    case mesh::DroppedData::Reason::Ttl:
      rec.status = MessageStatus::DroppedTtl;
      break;
    case mesh::DroppedData::Reason::NoRoute:
      rec.status = MessageStatus::DroppedNoRoute;
      break;
    case mesh::DroppedData::Reason::Overflow:
      rec.status = MessageStatus::DroppedOverflow;
      break;
    case mesh::DroppedData::Reason::Timeout:
      rec.status = MessageStatus::DroppedTimeout;
      break;
  }
}

void Engine::mark_collision(const ActiveTx& atx) {
  for (const auto& key : atx.msgs) msg_collision_[key] = true;
}

void Engine::account_listen(SimNode& n, double upto) {
  if (n.ch_since < 0) return;
  n.ledger.lora_listen_s +=
      backbone::listen_time_between(n.listen, n.ch_since, upto);
  n.ch_since = upto;
}

std::vector<NodeId> Engine::member_view(const SimNode& n) const {
  // Direct PRESENT claimers of this cluster plus two-hop nodes reachable
  // through them.
  std::vector<NodeId> members;
  auto add = [&](NodeId id) {
    if (id == n.place.id) return;
    if (std::find(members.begin(), members.end(), id) == members.end())
      members.push_back(id);
  };
  for (const auto& nb : n.mesh.neighbors()) {
    if (nb.status != mesh::NeighborStatus::Present) continue;
    if (nb.cluster != n.place.id) continue;
    add(nb.id);
    for (const auto& th : n.mesh.two_hop())
      if (th.via == nb.id) add(th.target);
  }
  std::sort(members.begin(), members.end());
  return members;
}

void Engine::reevaluate_role(SimNode& n, double now) {
  n.mesh.expire_neighbors(now);
  cluster::ElectionState next =
      cluster::evaluate_role(n.election, n.mesh.neighbors());
  const bool was_ch = n.election.is_ch;
  n.election = next;
  n.mesh.set_role(next.is_ch, next.cluster);
  if (next.is_ch == was_ch) return;

  ch_events_.push_back(ChRoleEvent{now, n.place.id, next.is_ch});
  if (next.is_ch) {
    n.ch = backbone::ChState(n.place.id, cfg_.backbone);
    n.ch_since = now;
  } else {
    account_listen(n, now);
    n.ch_since = -1.0;
    if (n.ch) {
      for (const auto& frag : n.ch->drain())
        record_drop(mesh::DroppedData{frag.src, frag.msg_seq,
                                      frag.frag_index,
                                      mesh::DroppedData::Reason::Overflow});
      n.ch.reset();
    }
  }
}

void Engine::apply_actions(SimNode& n, mesh::Actions actions, double now) {
  for (auto& action : actions) {
    if (auto* send = std::get_if<mesh::SendBle>(&action)) {
      schedule_ble_tx(n, std::move(send->bytes), send->envelope_to,
                      now + send->delay);
    } else if (auto* deliver = std::get_if<mesh::Deliver>(&action)) {
      auto it = msg_index_.find(MsgKey{deliver->src, deliver->msg_seq});
      if (it == msg_index_.end()) continue;
      MessageRecord& rec = messages_[it->second];
      if (rec.status == MessageStatus::Delivered) continue;
      if (rec.dst != n.place.id) continue;  // reassembled at a relay? ignore
      if (deliver->payload != payload_for(rec.src, rec.msg_seq))
        throw std::logic_error("sim: delivered payload mismatch");
      rec.status = MessageStatus::Delivered;
      rec.t_delivered = now;
    } else if (auto* esc = std::get_if<mesh::Escalate>(&action)) {
      if (!n.ch) continue;  // role lost while queued
      auto forced = n.ch->enqueue_for_backbone(esc->fragments, esc->dest, now);
      for (const auto& frame : forced) queue_lora_tx(n, frame, now);
      for (const auto& frame : n.ch->flush_aggregate(now))
        queue_lora_tx(n, frame, now);
      if (auto deadline = n.ch->next_flush_deadline())
        schedule(*deadline + 1e-6, n.place.id, EventKind::FlushCheck);
    } else if (auto* wake = std::get_if<mesh::WakeAt>(&action)) {
      schedule(wake->time, n.place.id, EventKind::MeshTick);
    } else if (auto* drop = std::get_if<mesh::DroppedData>(&action)) {
      record_drop(*drop);
    }
  }
}

void Engine::originate(SimNode& n, NodeId dst, double now) {
  const std::uint16_t seq = n.mesh.next_msg_seq();
  auto payload = payload_for(n.place.id, seq);

  auto cluster_of = [&](const SimNode& sn) {
    return sn.election.cluster == kUnassigned ? sn.place.id
                                              : sn.election.cluster;
  };
  MessageRecord rec;
  rec.src = n.place.id;
  rec.dst = dst;
  rec.msg_seq = seq;
  rec.t_origin = now;
  rec.inter_cluster = cluster_of(n) != cluster_of(node(dst));
  msg_index_[MsgKey{rec.src, seq}] = messages_.size();
  messages_.push_back(rec);

  apply_actions(n, n.mesh.send_message(dst, payload, now), now);
}

void Engine::handle_rx(const ActiveTx& atx, SimNode& rx, double now) {
  // Non-CH nodes keep their LoRa radio off entirely.
  if (atx.tx.radio == Radio::Lora && !rx.election.is_ch) return;

  const backbone::ListenSchedule* listen =
      atx.tx.radio == Radio::Lora ? &rx.listen : nullptr;
  const RxOutcome outcome = propagate(atx.tx, rx.place.x, rx.place.y,
                                      interference_, rx.place.id, listen);
  if (outcome == RxOutcome::OutOfRange) return;
  if (outcome != RxOutcome::Received) {
    const bool mattered =
        atx.is_data && (atx.tx.radio == Radio::Lora ||
                        atx.envelope_to == rx.place.id);
    if (mattered) mark_collision(atx);
    return;
  }

  if (atx.tx.radio == Radio::Ble) {
    if (atx.envelope_to != kBroadcast && atx.envelope_to != rx.place.id)
      return;  // overheard frame for someone else
    auto decoded = wire::decode_ble(atx.bytes);
    if (!decoded.ok()) return;
    const double d = std::hypot(atx.tx.x - rx.place.x, atx.tx.y - rx.place.y);
    const int rssi = rssi_dbm_from_distance(d);

    if (const auto* beacon = std::get_if<wire::Beacon>(&*decoded)) {
      apply_actions(rx, rx.mesh.process_beacon(*beacon, rssi, now), now);
      reevaluate_role(rx, now);
    } else if (const auto* rreq = std::get_if<wire::Rreq>(&*decoded)) {
      apply_actions(rx, rx.mesh.handle_rreq(*rreq, atx.tx.sender, rssi, now),
                    now);
    } else if (const auto* rrep = std::get_if<wire::Rrep>(&*decoded)) {
      apply_actions(rx, rx.mesh.handle_rrep(*rrep, atx.tx.sender, rssi, now),
                    now);
    } else if (const auto* frag = std::get_if<wire::DataFragment>(&*decoded)) {
      const std::uint64_t dups_before =
          rx.mesh.counters().dup_fragment_dropped;
      auto actions = rx.mesh.forward_data(*frag, false, now);
      if (rx.mesh.counters().dup_fragment_dropped == dups_before)
        frag_transit_[FragKey{frag->src, frag->msg_seq, frag->frag_index}]
            .ble_hops += 1;
      apply_actions(rx, std::move(actions), now);
    }
    return;
  }

  // LoRa frame at a cluster head.
  auto decoded = wire::decode_lora(atx.bytes);
  if (!decoded.ok()) return;
  auto result = rx.ch->handle_lora_frame(*decoded, now);
  if (result.rebroadcast) queue_lora_tx(rx, *result.rebroadcast, now);
  const int lora_hops =
      cfg_.backbone.hop_limit - decoded->header.hop_limit + 1;
  for (const auto& frag : result.deliver) {
    auto& transit =
        frag_transit_[FragKey{frag.src, frag.msg_seq, frag.frag_index}];
    transit.lora_hops = std::max(transit.lora_hops, lora_hops);
    apply_actions(rx, rx.mesh.forward_data(frag, true, now), now);
  }
}

void Engine::check_route_invariants() const {
  // The per-destination next_hop graph must stay acyclic.
  for (const auto& n : nodes_) {
    for (const auto& route : n.mesh.routes()) {
      NodeId at = n.place.id;
      NodeId hop = route.next_hop;
      std::size_t steps = 0;
      while (steps++ <= nodes_.size()) {
        if (hop == route.dest) break;
        auto it = index_.find(hop);
        if (it == index_.end()) break;
        const SimNode& next = nodes_[it->second];
        const mesh::RouteEntry* onward = nullptr;
        for (const auto& r : next.mesh.routes())
          if (r.dest == route.dest) onward = &r;
        if (onward == nullptr) break;
        at = hop;
        hop = onward->next_hop;
        if (hop == n.place.id || hop == at)
          throw std::logic_error("sim: routing loop detected");
      }
      if (steps > nodes_.size())
        throw std::logic_error("sim: routing loop detected");
    }
  }
}

MetricsReport Engine::run() {
  // Beacons.
  for (auto& n : nodes_)
    schedule(n.beacon_phase, n.place.id, EventKind::BeaconTx);
  // Poisson traffic.
  if (cfg_.traffic.rate_per_node_per_min > 0) {
    const double mean = 60.0 / cfg_.traffic.rate_per_node_per_min;
    for (auto& n : nodes_) {
      const double first = cfg_.traffic.start + n.rng.exponential(mean);
      schedule(first, n.place.id, EventKind::TrafficArrival);
    }
  }
  for (std::size_t i = 0; i < cfg_.injections.size(); ++i)
    schedule(cfg_.injections[i].time, cfg_.injections[i].src,
             EventKind::Inject, i);
  for (std::size_t i = 0; i < cfg_.battery_events.size(); ++i)
    schedule(cfg_.battery_events[i].time, cfg_.battery_events[i].node,
             EventKind::Battery, i);
  // Digest timers: one per node, fires only while CH.
  for (auto& n : nodes_)
    schedule(10.0 + 0.01 * (n.place.id % 100), n.place.id,
             EventKind::DigestTimer);

  double last_time = 0.0;
  while (!queue_.empty()) {
    const Event ev = queue_.top();
    queue_.pop();
    if (ev.time > cfg_.duration_s) break;
    if (ev.time < last_time - 1e-9)
      throw std::logic_error("sim: event processed out of order");
    last_time = std::max(last_time, ev.time);
    now_ = ev.time;

    SimNode& n = node(ev.node);
    switch (ev.kind) {
      case EventKind::BeaconTx: {
        reevaluate_role(n, now_);
        wire::Beacon b;
        b.version = 1;
        b.node = n.place.id;
        b.advertised_key = n.election.own_key;
        b.flags = static_cast<std::uint8_t>(
            (n.election.is_ch ? wire::kFlagClusterHead : 0) |
            (n.election.demoted ? wire::kFlagDemoting : 0));
        b.battery_pct = static_cast<std::uint8_t>(
            std::clamp(n.election.battery_pct, 0.0, 100.0));
        b.cluster = n.election.cluster;
        b.neighbors = n.mesh.beacon_neighbors();
        schedule_ble_tx(n, wire::encode(wire::Frame{b}), kBroadcast, now_);
        n.beacon_count += 1;
        schedule(n.beacon_phase + n.beacon_count * cfg_.beacon_interval_s,
                 n.place.id, EventKind::BeaconTx);
        apply_actions(n, n.mesh.tick(now_), now_);
        break;
      }
      case EventKind::MeshTick:
        apply_actions(n, n.mesh.tick(now_), now_);
        break;
      case EventKind::TrafficArrival: {
        const double mean = 60.0 / cfg_.traffic.rate_per_node_per_min;
        schedule(now_ + n.rng.exponential(mean), n.place.id,
                 EventKind::TrafficArrival);
        if (now_ < cfg_.traffic.start) break;
        // beta: in-cluster draw; otherwise uniform over all other nodes.
        auto cluster_of = [&](const SimNode& sn) {
          return sn.election.cluster == kUnassigned ? sn.place.id
                                                    : sn.election.cluster;
        };
        const NodeId own = cluster_of(n);
        NodeId dst = kUnassigned;
        if (n.rng.bernoulli(cfg_.traffic.beta)) {
          std::vector<NodeId> mates;
          for (const auto& other : nodes_)
            if (other.place.id != n.place.id && cluster_of(other) == own)
              mates.push_back(other.place.id);
          if (!mates.empty()) dst = mates[n.rng.uniform_int(mates.size())];
        }
        if (dst == kUnassigned) {
          std::vector<NodeId> others;
          for (const auto& other : nodes_)
            if (other.place.id != n.place.id) others.push_back(other.place.id);
          if (others.empty()) break;
          dst = others[n.rng.uniform_int(others.size())];
        }
        originate(n, dst, now_);
        break;
      }
      case EventKind::Inject: {
        const auto& inj = cfg_.injections[ev.a];
        originate(n, inj.dst, now_);
        break;
      }
      case EventKind::RxEnd: {
        auto it = live_tx_.find(ev.a);
        if (it != live_tx_.end()) handle_rx(it->second, n, now_);
        break;
      }
      case EventKind::FlushCheck: {
        if (!n.ch) break;
        for (const auto& frame : n.ch->flush_aggregate(now_))
          queue_lora_tx(n, frame, now_);
        if (auto deadline = n.ch->next_flush_deadline())
          schedule(*deadline + 1e-6, n.place.id, EventKind::FlushCheck);
        break;
      }
      case EventKind::DigestTimer: {
        schedule(now_ + cfg_.backbone.digest_period_s, n.place.id,
                 EventKind::DigestTimer);
        if (!n.election.is_ch || !n.ch) break;
        queue_lora_tx(n, n.ch->make_digest(member_view(n), now_), now_);
        break;
      }
      case EventKind::Battery: {
        const auto& be = cfg_.battery_events[ev.a];
        n.election =
            cluster::apply_battery_policy(n.election, be.pct, cfg_.election);
        reevaluate_role(n, now_);
        break;
      }
    }

    // Prune stale interference records (longest frame is well under 10 s).
    if (interference_.size() > 64) {
      std::erase_if(interference_, [&](const Transmission& t) {
        return t.end < now_ - 10.0;
      });
    }
    if (cfg_.check_invariants) check_route_invariants();
  }

  for (auto& n : nodes_) account_listen(n, cfg_.duration_s);
  return finalize();
}

MetricsReport Engine::finalize() {
  MetricsReport report;
  report.duration_s = cfg_.duration_s;

  const double e_lora_listen_w =
      cfg_.lora_listen_active_ma * 1e-3 * cfg_.supply_voltage;

  for (auto& n : nodes_) {
    report.node_ids.push_back(n.place.id);
    n.ledger.ble_tx_j = static_cast<double>(n.ledger.ble_tx_count) * e_ble_;
    n.ledger.lora_tx_j =
        cfg_.airtime_mode == AirtimeMode::PaperConstants
            ? static_cast<double>(n.ledger.lora_tx_count) * e_lora_paper_
            : cfg_.lora_tx_mw * 1e-3 * n.lora_airtime_sum;
    n.ledger.lora_listen_j = n.ledger.lora_listen_s * e_lora_listen_w;
    report.node_energy.push_back(n.ledger);
    report.final_cluster.push_back(n.election.cluster);
    report.final_is_ch.push_back(n.election.is_ch ? 1 : 0);
  }

  for (auto& rec : messages_) {
    const MsgKey key{rec.src, rec.msg_seq};
    rec.ble_frag_txs = msg_ble_txs_.count(key) ? msg_ble_txs_.at(key) : 0;
    // Hop profile: per-fragment transit, max across fragments.
    for (const auto& [fkey, transit] : frag_transit_) {
      if (fkey.src != key.src || fkey.seq != key.seq) continue;
      rec.ble_hops = std::max(rec.ble_hops, transit.ble_hops);
      rec.lora_hops = std::max(rec.lora_hops, transit.lora_hops);
    }
    const double lora_air =
        msg_lora_airtime_.count(key) ? msg_lora_airtime_.at(key) : 0.0;
    const double lora_energy =
        msg_lora_energy_.count(key) ? msg_lora_energy_.at(key) : 0.0;
    rec.airtime_latency_s =
        rec.ble_frag_txs * cfg_.ble_airtime_s + lora_air;
    rec.energy_j = rec.ble_frag_txs * e_ble_ + lora_energy;

    if (rec.status == MessageStatus::InFlight &&
        msg_collision_.count(key) && msg_collision_.at(key))
      rec.status = MessageStatus::DroppedCollision;

    const int cat = rec.inter_cluster ? 1 : 0;
    report.originated += 1;
    if (rec.inter_cluster)
      report.originated_inter += 1;
    else
      report.originated_intra += 1;
    switch (rec.status) {
      case MessageStatus::Delivered: {
        report.delivered += 1;
        report.cat_delivered[cat] += 1;
        if (rec.lora_hops == 0)
          report.latency_intra.push_back(rec.airtime_latency_s);
        else if (rec.lora_hops == 1)
          report.latency_inter_1lora.push_back(rec.airtime_latency_s);
        else
          report.latency_inter_2lora.push_back(rec.airtime_latency_s);
        break;
      }
      case MessageStatus::InFlight: report.cat_in_flight[cat] += 1; break;
      case MessageStatus::DroppedTtl: report.cat_dropped_ttl[cat] += 1; break;
      case MessageStatus::DroppedCollision:
        report.cat_dropped_collision[cat] += 1;
        break;
      case MessageStatus::DroppedNoRoute:
        report.cat_dropped_no_route[cat] += 1;
        break;
      case MessageStatus::DroppedOverflow:
        report.cat_dropped_overflow[cat] += 1;
        break;
      case MessageStatus::DroppedTimeout:
        report.cat_dropped_timeout[cat] += 1;
        break;
    }
  }
  report.messages = messages_;
  report.ch_events = ch_events_;

  report.delivery_ratio =
      report.originated == 0
          ? 1.0
          : static_cast<double>(report.delivered) / report.originated;
  report.measured_inter_fraction =
      report.originated == 0
          ? 0.0
          : static_cast<double>(report.originated_inter) / report.originated;
  report.ble_traffic_share =
      report.originated == 0
          ? 1.0
          : static_cast<double>(report.originated_intra) / report.originated;
  report.ble_utilization = ble_airtime_total_ / cfg_.duration_s;
  report.lora_utilization = lora_airtime_total_ / cfg_.duration_s;
  return report;
}

}  // namespace

MetricsReport run_scenario(const ScenarioConfig& config) {
  Engine engine(config);
  return engine.run();
}

}  // namespace dualmesh::sim
