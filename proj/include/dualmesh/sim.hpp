#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualmesh/analytics.hpp"
#include "dualmesh/backbone.hpp"
#include "dualmesh/election.hpp"
#include "dualmesh/mesh.hpp"
#include "dualmesh/types.hpp"

namespace dualmesh::sim {

enum class AirtimeMode { PaperConstants, Formula };

struct NodePlacement {
  NodeId id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct InjectedMessage {
  double time = 0.0;
  NodeId src = 0;
  NodeId dst = 0;
};

struct BatteryEvent {
  double time = 0.0;
  NodeId node = 0;
  double pct = 100.0;
};

struct TrafficConfig {
  double beta = 0.82;
  double rate_per_node_per_min = 0.0;  // Poisson rate; 0 disables
  double start = 0.0;                  // warmup before generation begins
};

struct ScenarioConfig {
  std::vector<NodePlacement> nodes;

  double ble_range_m = 800.0;
  double lora_range_m = 2500.0;

  AirtimeMode airtime_mode = AirtimeMode::PaperConstants;
  double ble_airtime_s = 0.016;   // per BLE packet (both modes)
  double lora_airtime_s = 0.370;  // per LoRa frame (paper-constants mode)
  analytics::LoraPhyConfig lora_phy;  // formula mode

  double ble_tx_mw = 8.0;
  double lora_tx_mw = 50.0;
  double lora_listen_active_ma = 4.2;
  double supply_voltage = 3.3;
  int ble_channels = 1;  // 1 = single logical channel, 3 = per-advert random

  TrafficConfig traffic;
  int payload_bytes = 50;  // 1..120
  std::vector<InjectedMessage> injections;
  std::vector<BatteryEvent> battery_events;

  double duration_s = 60.0;
  std::uint64_t seed = 1;
  double beacon_interval_s = 3.0;

  mesh::Config mesh;
  backbone::Config backbone;
  cluster::Config election;

  bool check_invariants = false;  // per-event routing-loop assertion

  void validate() const;  // throws std::invalid_argument
};

struct EnergyLedger {
  std::uint64_t ble_tx_count = 0;
  std::uint64_t lora_tx_count = 0;
  double ble_tx_j = 0.0;
  double lora_tx_j = 0.0;
  double lora_listen_s = 0.0;
  double lora_listen_j = 0.0;

  bool operator==(const EnergyLedger&) const = default;
};

enum class MessageStatus : std::uint8_t {
  Delivered = 0,
  InFlight,
  DroppedTtl,
  DroppedCollision,
  DroppedNoRoute,
  DroppedOverflow,
  DroppedTimeout,
};

const char* to_string(MessageStatus status);

struct MessageRecord {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint16_t msg_seq = 0;
  double t_origin = 0.0;
  double t_delivered = -1.0;  // < 0: not delivered
  int ble_hops = 0;           // fragment-path hops (per fragment, max)
  int lora_hops = 0;
  int ble_frag_txs = 0;  // fragment transmissions summed over hops
  double airtime_latency_s = 0.0;
  double energy_j = 0.0;
  bool inter_cluster = false;  // at origination
  MessageStatus status = MessageStatus::InFlight;

  bool operator==(const MessageRecord&) const = default;
};

struct ChRoleEvent {
  double time = 0.0;
  NodeId node = 0;
  bool is_ch = false;

  bool operator==(const ChRoleEvent&) const = default;
};

struct MetricsReport {
  double duration_s = 0.0;
  std::uint64_t originated = 0;
  std::uint64_t delivered = 0;
  double delivery_ratio = 1.0;

  std::uint64_t originated_intra = 0;
  std::uint64_t originated_inter = 0;
  double measured_inter_fraction = 0.0;
  double ble_traffic_share = 1.0;  // intra fraction (BLE-only carriage)

  // Drop/disposition accounting, per origination category
  // [0] intra, [1] inter. Conservation: originated = delivered + drops
  // + in-flight, per category.
  std::array<std::uint64_t, 2> cat_delivered{};
  std::array<std::uint64_t, 2> cat_dropped_ttl{};
  std::array<std::uint64_t, 2> cat_dropped_collision{};
  std::array<std::uint64_t, 2> cat_dropped_no_route{};
  std::array<std::uint64_t, 2> cat_dropped_overflow{};
  std::array<std::uint64_t, 2> cat_dropped_timeout{};
  std::array<std::uint64_t, 2> cat_in_flight{};

  // Latency samples by delivered-path category.
  std::vector<double> latency_intra;
  std::vector<double> latency_inter_1lora;
  std::vector<double> latency_inter_2lora;

  double ble_utilization = 0.0;   // sum of airtime / duration
  double lora_utilization = 0.0;

  std::vector<NodeId> node_ids;
  std::vector<EnergyLedger> node_energy;    // parallel to node_ids
  std::vector<NodeId> final_cluster;        // parallel to node_ids
  std::vector<std::uint8_t> final_is_ch;    // parallel to node_ids

  std::vector<MessageRecord> messages;
  std::vector<ChRoleEvent> ch_events;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport run_scenario(const ScenarioConfig& config);

// --- Propagation (pure, for tests and the engine) -------------------------

struct Transmission {
  NodeId sender = 0;
  Radio radio = Radio::Ble;
  int channel = 0;
  double start = 0.0;
  double end = 0.0;
  double x = 0.0;
  double y = 0.0;
  double range = 0.0;
};

enum class RxOutcome : std::uint8_t {
  Received = 0,
  OutOfRange,
  CollisionLost,
  SelfBusy,      // receiver was transmitting on that radio
  NotListening,  // LoRa frame not fully inside the receive window
};

// Disc propagation with pure-ALOHA collision semantics: the frame is heard
// iff the receiver is within `tx.range`; it is lost if any other audible
// transmission on the same radio/channel overlaps it in time (including the
// receiver's own). LoRa reception additionally requires the whole frame
// inside the receiver's listen window.
RxOutcome propagate(const Transmission& tx, double rx_x, double rx_y,
                    std::span<const Transmission> concurrent,
                    NodeId receiver,
                    const backbone::ListenSchedule* rx_listen);

// Distance -> integer RSSI map used for link quality:
// round(-40 - 25*log10(max(d, 1) / 10)), clamped to [-110, -40].
int rssi_dbm_from_distance(double d_m);

// --- Single-channel pure-ALOHA Monte-Carlo ---------------------------------

struct AlohaResult {
  double offered_load = 0.0;      // measured G
  double throughput = 0.0;        // successful airtime / elapsed time
  double success_fraction = 0.0;  // successful frames / frames
};

AlohaResult run_aloha_experiment(double offered_load, int frames,
                                 double frame_time_s, std::uint64_t seed);

}  // namespace dualmesh::sim
