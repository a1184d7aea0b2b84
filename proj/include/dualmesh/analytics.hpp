#pragma once

#include <cstdint>

namespace dualmesh::analytics {

// Traffic mix parameters: locality bias beta, cluster count C and the
// per-node message rate (messages per minute).
struct TrafficParams {
  double beta = 0.82;
  int clusters = 3;
  double rate_per_node = 1.0;

  void validate() const;  // throws std::invalid_argument
};

// One radio's transmit profile. Powers in mW, airtime in seconds, currents
// in mA. per_packet_energy_j() is tx_power * airtime by definition.
struct RadioProfile {
  double tx_power_mw = 0.0;
  double airtime_s = 0.0;
  double range_m = 0.0;
  double active_current_ma = 0.0;
  double sleep_current_ma = 0.0;

  double per_packet_energy_j() const { return tx_power_mw * 1e-3 * airtime_s; }
  void validate() const;
};

// Hop breakdown of an end-to-end path.
struct PathShape {
  int ble_hops = 0;
  int lora_hops = 0;

  int total_hops() const { return ble_hops + lora_hops; }
};

// LoRa PHY parameters for the airtime formula.
struct LoraPhyConfig {
  int spreading_factor = 10;   // 5..12
  double bandwidth_hz = 125000.0;  // 125k / 250k / 500k
  int coding_rate_index = 1;   // 1..4 -> 4/5..4/8
  int preamble_symbols = 16;
  bool explicit_header = true;
  bool crc_on = true;
  bool low_data_rate_opt = false;

  void validate() const;
};

// Fraction of messages that cross clusters: (1 - beta) * (1 - 1/C).
double inter_cluster_ratio(const TrafficParams& params);

// LoRa channel utilization reduction versus an all-LoRa mesh:
// 1 - alpha - alpha * lora_hops / total_hops.
double utilization_reduction(double alpha, const PathShape& shape);

// Energy of one transmission: P_tx * airtime, in joules.
double radio_energy_per_packet(const RadioProfile& profile);

// Energy of one message over a path: ble_hops * e_ble + lora_hops * e_lora.
double path_energy(const PathShape& shape, double e_ble_j, double e_lora_j);

// Traffic-weighted mean energy: (1 - alpha) * e_intra + alpha * e_inter.
double mean_message_energy(double alpha, double e_intra_j, double e_inter_j);

// Pure-ALOHA throughput S = G * exp(-2G). Peaks at G = 0.5 with S = 1/(2e).
double aloha_throughput(double offered_load);

// Per-cluster message capacity: channels * s_max / t_pkt, evaluated
// literally (msgs/s).
double ble_cluster_capacity(double s_max, double t_pkt_s, int channels);

// Backbone message capacity: s_max / toa (msgs/s).
double lora_backbone_capacity(double s_max, double toa_s);

// Largest network the backbone supports: capacity / (alpha * rate), as a
// real number (callers floor). Returns +infinity when alpha * rate == 0.
double max_network_size(double capacity_per_min, double alpha,
                        double rate_per_node_per_min);

// Standard LoRa airtime: preamble time plus payload symbols, with the
// SF/CR/CRC/header/low-data-rate terms. payload_bytes must be 1..255.
double lora_time_on_air(const LoraPhyConfig& phy, int payload_bytes);

// Mean current of a duty-cycled radio: duty * active + (1 - duty) * sleep.
double duty_cycled_current(double active_ma, double sleep_ma, double duty);

// capacity / (current * 24). Returns +infinity when current == 0.
double battery_life_days(double capacity_mah, double avg_current_ma);

// Transmission time of a path, no queueing: hops times per-hop airtime.
double path_latency(const PathShape& shape, double t_ble_s, double t_lora_s);

}  // namespace dualmesh::analytics
