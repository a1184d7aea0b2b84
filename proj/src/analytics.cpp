#include "dualmesh/analytics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dualmesh::analytics {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void TrafficParams::validate() const {
  require(beta >= 0.0 && beta <= 1.0, "traffic: beta must be in [0,1]");
  require(clusters >= 1, "traffic: clusters must be >= 1");
  require(rate_per_node >= 0.0, "traffic: rate_per_node must be >= 0");
}

void RadioProfile::validate() const {
  require(tx_power_mw >= 0.0, "radio: tx_power_mw must be >= 0");
  require(airtime_s >= 0.0, "radio: airtime_s must be >= 0");
  require(range_m >= 0.0, "radio: range_m must be >= 0");
  require(active_current_ma >= 0.0, "radio: active_current_ma must be >= 0");
  require(sleep_current_ma >= 0.0, "radio: sleep_current_ma must be >= 0");
}

void LoraPhyConfig::validate() const {
  require(spreading_factor >= 5 && spreading_factor <= 12,
          "lora phy: spreading_factor must be 5..12");
  require(bandwidth_hz == 125000.0 || bandwidth_hz == 250000.0 ||
              bandwidth_hz == 500000.0,
          "lora phy: bandwidth must be 125/250/500 kHz");
  require(coding_rate_index >= 1 && coding_rate_index <= 4,
          "lora phy: coding_rate_index must be 1..4");
  require(preamble_symbols >= 1, "lora phy: preamble_symbols must be >= 1");
}

double inter_cluster_ratio(const TrafficParams& params) {
  params.validate();
  return (1.0 - params.beta) * (1.0 - 1.0 / params.clusters);
}

double utilization_reduction(double alpha, const PathShape& shape) {
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0,1]");
  require(shape.ble_hops >= 0 && shape.lora_hops >= 0,
          "path shape: hop counts must be >= 0");
  require(shape.total_hops() > 0, "path shape: needs at least one hop");
  const double lora_share =
      static_cast<double>(shape.lora_hops) / shape.total_hops();
  return 1.0 - alpha - alpha * lora_share;
}

double radio_energy_per_packet(const RadioProfile& profile) {
  profile.validate();
  return profile.per_packet_energy_j();
}

double path_energy(const PathShape& shape, double e_ble_j, double e_lora_j) {
  require(e_ble_j >= 0.0 && e_lora_j >= 0.0, "energies must be >= 0");
  require(shape.ble_hops >= 0 && shape.lora_hops >= 0,
          "path shape: hop counts must be >= 0");
  return shape.ble_hops * e_ble_j + shape.lora_hops * e_lora_j;
}

double mean_message_energy(double alpha, double e_intra_j, double e_inter_j) {
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0,1]");
  return (1.0 - alpha) * e_intra_j + alpha * e_inter_j;
}

double aloha_throughput(double offered_load) {
  require(offered_load >= 0.0, "offered load must be >= 0");
  return offered_load * std::exp(-2.0 * offered_load);
}

double ble_cluster_capacity(double s_max, double t_pkt_s, int channels) {
  require(t_pkt_s > 0.0, "t_pkt must be > 0");
  require(channels >= 1, "channels must be >= 1");
  return channels * s_max / t_pkt_s;
}

double lora_backbone_capacity(double s_max, double toa_s) {
  require(toa_s > 0.0, "toa must be > 0");
  return s_max / toa_s;
}

double max_network_size(double capacity_per_min, double alpha,
                        double rate_per_node_per_min) {
  require(capacity_per_min >= 0.0, "capacity must be >= 0");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0,1]");
  require(rate_per_node_per_min >= 0.0, "rate must be >= 0");
  const double demand = alpha * rate_per_node_per_min;
  if (demand == 0.0) return std::numeric_limits<double>::infinity();
  return capacity_per_min / demand;
}

double lora_time_on_air(const LoraPhyConfig& phy, int payload_bytes) {
  phy.validate();
  if (payload_bytes < 1 || payload_bytes > 255)
    throw std::out_of_range("lora airtime: payload_bytes must be 1..255");

  const double t_sym =
      static_cast<double>(1 << phy.spreading_factor) / phy.bandwidth_hz;
  const double t_preamble = (phy.preamble_symbols + 4.25) * t_sym;

  // H = 0 with an explicit header, 1 without one.
  const int h = phy.explicit_header ? 0 : 1;
  const int crc = phy.crc_on ? 1 : 0;
  const int de = phy.low_data_rate_opt ? 1 : 0;

  const int num =
      8 * payload_bytes - 4 * phy.spreading_factor + 28 + 16 * crc - 20 * h;
  const int den = 4 * (phy.spreading_factor - 2 * de);
  const int extra =
      num > 0 ? ((num + den - 1) / den) * (phy.coding_rate_index + 4) : 0;

  return t_preamble + (8 + extra) * t_sym;
}

double duty_cycled_current(double active_ma, double sleep_ma, double duty) {
  require(duty >= 0.0 && duty <= 1.0, "duty must be in [0,1]");
  require(active_ma >= 0.0 && sleep_ma >= 0.0, "currents must be >= 0");
  return duty * active_ma + (1.0 - duty) * sleep_ma;
}

double battery_life_days(double capacity_mah, double avg_current_ma) {
  require(capacity_mah >= 0.0, "capacity must be >= 0");
  require(avg_current_ma >= 0.0, "current must be >= 0");
  if (avg_current_ma == 0.0) return std::numeric_limits<double>::infinity();
  return capacity_mah / (avg_current_ma * 24.0);
}

double path_latency(const PathShape& shape, double t_ble_s, double t_lora_s) {
  require(t_ble_s >= 0.0 && t_lora_s >= 0.0, "airtimes must be >= 0");
  require(shape.ble_hops >= 0 && shape.lora_hops >= 0,
          "path shape: hop counts must be >= 0");
  return shape.ble_hops * t_ble_s + shape.lora_hops * t_lora_s;
}

}  // namespace dualmesh::analytics
