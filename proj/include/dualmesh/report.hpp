#pragma once

#include <string>
#include <vector>

#include "dualmesh/analytics.hpp"
#include "dualmesh/sim.hpp"

namespace dualmesh::report {

// --- Metrics CSV -----------------------------------------------------------
//
// Versioned, fixed-column CSV. The first row is a mandatory schema header;
// doubles are printed with 17 significant digits so parsing recovers the
// report exactly.

inline constexpr const char* kMetricsSchema = "dualmesh.metrics";
inline constexpr int kMetricsSchemaVersion = 1;

std::string render_metrics_csv(const sim::MetricsReport& report);
sim::MetricsReport parse_metrics_csv(const std::string& csv);

// Human-readable run summary.
std::string render_summary(const sim::MetricsReport& report);

// --- Closed-form analysis report --------------------------------------------

struct AnalysisInputs {
  analytics::TrafficParams traffic;  // beta 0.82, C 3, 1 msg/min
  double ble_tx_mw = 8.0;
  double ble_airtime_s = 0.016;
  double lora_tx_mw = 50.0;
  double lora_airtime_s = 0.370;  // paper-constants SF10 frame time
  double sf7_airtime_s = 0.051;
  double sf12_airtime_s = 2.5;    // all-LoRa baseline per-hop time
  double s_max = 0.184;           // ALOHA peak used by the capacity chain
  int ble_channels = 3;
  double ble_capacity_reconcile_tpkt_s = 0.005;
  int payload_bytes = 50;
  double battery_mah = 500.0;
  double current_non_ch_ma = 6.5;
  double current_ch_ma = 9.2;
  double current_lora_only_ma = 12.8;
  double listen_active_ma = 4.2;
  double listen_sleep_ma = 0.0;
  double listen_duty = 2.0 / 30.0;
  analytics::PathShape intra_path{2, 0};
  analytics::PathShape inter_path_1{4, 1};
  analytics::PathShape inter_path_2{4, 2};
  // Standard-formula PHY echo (reference-calculator convention).
  analytics::LoraPhyConfig phy{10, 125000.0, 1, 8, true, true, false};
  // Backbone PHY used for the aggregation airtime ratio (long preamble for
  // duty-cycled listeners).
  analytics::LoraPhyConfig backbone_phy{10, 125000.0, 1, 16, true, true,
                                        false};
  sim::AirtimeMode mode = sim::AirtimeMode::PaperConstants;
};

struct AnalysisEntry {
  std::string name;
  double value = 0.0;
  std::string unit;
  std::string inputs;  // echoed operation inputs
};

// Every number in `entries` is the output of an analytics operation at the
// echoed inputs; `flags` list the places where the literal evaluation
// disagrees with the commonly cited reference figures. Flags are always
// rendered.
struct AnalysisReport {
  AnalysisInputs inputs;
  std::vector<AnalysisEntry> entries;
  std::vector<std::string> flags;
};

AnalysisReport build_analysis_report(const AnalysisInputs& inputs);
std::string render_analysis(const AnalysisReport& report);

// Entry lookup by name; throws std::out_of_range when missing.
double analysis_value(const AnalysisReport& report, const std::string& name);
bool has_entry(const AnalysisReport& report, const std::string& name);

}  // namespace dualmesh::report
