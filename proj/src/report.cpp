#include "dualmesh/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace dualmesh::report {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRIu64, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }
std::uint64_t to_u64(const std::string& s) { return std::strtoull(s.c_str(), nullptr, 10); }

sim::MessageStatus status_from(const std::string& s) {
  using sim::MessageStatus;
  for (auto st : {MessageStatus::Delivered, MessageStatus::InFlight,
                  MessageStatus::DroppedTtl, MessageStatus::DroppedCollision,
                  MessageStatus::DroppedNoRoute,
                  MessageStatus::DroppedOverflow,
                  MessageStatus::DroppedTimeout})
    if (s == sim::to_string(st)) return st;
  throw std::invalid_argument("metrics csv: unknown message status " + s);
}

}  // namespace

std::string render_metrics_csv(const sim::MetricsReport& r) {
  std::string out;
  auto row = [&](std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out += ',';
      out += c;
      first = false;
    }
    out += '\n';
  };

  row({"schema", kMetricsSchema, std::to_string(kMetricsSchemaVersion)});
  row({"field", "duration_s", fmt_double(r.duration_s)});
  row({"field", "originated", fmt_u64(r.originated)});
  row({"field", "delivered", fmt_u64(r.delivered)});
  row({"field", "delivery_ratio", fmt_double(r.delivery_ratio)});
  row({"field", "originated_intra", fmt_u64(r.originated_intra)});
  row({"field", "originated_inter", fmt_u64(r.originated_inter)});
  row({"field", "measured_inter_fraction",
       fmt_double(r.measured_inter_fraction)});
  row({"field", "ble_traffic_share", fmt_double(r.ble_traffic_share)});
  row({"field", "ble_utilization", fmt_double(r.ble_utilization)});
  row({"field", "lora_utilization", fmt_double(r.lora_utilization)});
  const char* cat_names[2] = {"intra", "inter"};
  for (int c = 0; c < 2; ++c) {
    const std::string suffix = std::string("_") + cat_names[c];
    row({"field", "cat_delivered" + suffix, fmt_u64(r.cat_delivered[c])});
    row({"field", "cat_dropped_ttl" + suffix, fmt_u64(r.cat_dropped_ttl[c])});
    row({"field", "cat_dropped_collision" + suffix,
         fmt_u64(r.cat_dropped_collision[c])});
    row({"field", "cat_dropped_no_route" + suffix,
         fmt_u64(r.cat_dropped_no_route[c])});
    row({"field", "cat_dropped_overflow" + suffix,
         fmt_u64(r.cat_dropped_overflow[c])});
    row({"field", "cat_dropped_timeout" + suffix,
         fmt_u64(r.cat_dropped_timeout[c])});
    row({"field", "cat_in_flight" + suffix, fmt_u64(r.cat_in_flight[c])});
  }
  for (double v : r.latency_intra) row({"latency", "intra", fmt_double(v)});
  for (double v : r.latency_inter_1lora)
    row({"latency", "inter1", fmt_double(v)});
  for (double v : r.latency_inter_2lora)
    row({"latency", "inter2", fmt_double(v)});
  for (std::size_t i = 0; i < r.node_ids.size(); ++i) {
    const auto& e = r.node_energy[i];
    row({"node", fmt_u64(r.node_ids[i]), fmt_u64(e.ble_tx_count),
         fmt_u64(e.lora_tx_count), fmt_double(e.ble_tx_j),
         fmt_double(e.lora_tx_j), fmt_double(e.lora_listen_s),
         fmt_double(e.lora_listen_j), fmt_u64(r.final_cluster[i]),
         fmt_u64(r.final_is_ch[i])});
  }
  for (const auto& m : r.messages) {
    row({"msg", fmt_u64(m.src), fmt_u64(m.dst), fmt_u64(m.msg_seq),
         fmt_double(m.t_origin), fmt_double(m.t_delivered),
         std::to_string(m.ble_hops), std::to_string(m.lora_hops),
         std::to_string(m.ble_frag_txs), fmt_double(m.airtime_latency_s),
         fmt_double(m.energy_j), m.inter_cluster ? "1" : "0",
         sim::to_string(m.status)});
  }
  for (const auto& c : r.ch_events)
    row({"ch", fmt_double(c.time), fmt_u64(c.node), c.is_ch ? "1" : "0"});
  return out;
}

sim::MetricsReport parse_metrics_csv(const std::string& csv) {
  sim::MetricsReport r;
  std::stringstream ss(csv);
  std::string line;
  bool saw_schema = false;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    const std::string& kind = cells[0];
    if (kind == "schema") {
      if (cells.size() != 3 || cells[1] != kMetricsSchema ||
          std::stoi(cells[2]) != kMetricsSchemaVersion)
        throw std::invalid_argument("metrics csv: bad schema header");
      saw_schema = true;
    } else if (!saw_schema) {
      throw std::invalid_argument("metrics csv: missing schema header");
    } else if (kind == "field") {
      const std::string& name = cells[1];
      const std::string& v = cells[2];
      auto cat_index = [&](const std::string& base) {
        return name == base + "_intra" ? 0 : name == base + "_inter" ? 1 : -1;
      };
      if (name == "duration_s") r.duration_s = to_double(v);
      else if (name == "originated") r.originated = to_u64(v);
      else if (name == "delivered") r.delivered = to_u64(v);
      else if (name == "delivery_ratio") r.delivery_ratio = to_double(v);
      else if (name == "originated_intra") r.originated_intra = to_u64(v);
      else if (name == "originated_inter") r.originated_inter = to_u64(v);
      else if (name == "measured_inter_fraction")
        r.measured_inter_fraction = to_double(v);
      else if (name == "ble_traffic_share") r.ble_traffic_share = to_double(v);
      else if (name == "ble_utilization") r.ble_utilization = to_double(v);
      else if (name == "lora_utilization") r.lora_utilization = to_double(v);
      else if (int c = cat_index("cat_delivered"); c >= 0)
        r.cat_delivered[c] = to_u64(v);
      else if (int c = cat_index("cat_dropped_ttl"); c >= 0)
        r.cat_dropped_ttl[c] = to_u64(v);
      else if (int c = cat_index("cat_dropped_collision"); c >= 0)
        r.cat_dropped_collision[c] = to_u64(v);
      else if (int c = cat_index("cat_dropped_no_route"); c >= 0)
        r.cat_dropped_no_route[c] = to_u64(v);
      else if (int c = cat_index("cat_dropped_overflow"); c >= 0)
        r.cat_dropped_overflow[c] = to_u64(v);
      else if (int c = cat_index("cat_dropped_timeout"); c >= 0)
        r.cat_dropped_timeout[c] = to_u64(v);
      else if (int c = cat_index("cat_in_flight"); c >= 0)
        r.cat_in_flight[c] = to_u64(v);
      else
        throw std::invalid_argument("metrics csv: unknown field " + name);
    } else if (kind == "latency") {
      const double v = to_double(cells[2]);
      if (cells[1] == "intra") r.latency_intra.push_back(v);
      else if (cells[1] == "inter1") r.latency_inter_1lora.push_back(v);
      else if (cells[1] == "inter2") r.latency_inter_2lora.push_back(v);
      else throw std::invalid_argument("metrics csv: bad latency category");
    } else if (kind == "node") {
      if (cells.size() != 10)
        throw std::invalid_argument("metrics csv: bad node row");
      r.node_ids.push_back(static_cast<NodeId>(to_u64(cells[1])));
      sim::EnergyLedger e;
      e.ble_tx_count = to_u64(cells[2]);
      e.lora_tx_count = to_u64(cells[3]);
      e.ble_tx_j = to_double(cells[4]);
      e.lora_tx_j = to_double(cells[5]);
      e.lora_listen_s = to_double(cells[6]);
      e.lora_listen_j = to_double(cells[7]);
      r.node_energy.push_back(e);
      r.final_cluster.push_back(static_cast<NodeId>(to_u64(cells[8])));
      r.final_is_ch.push_back(static_cast<std::uint8_t>(to_u64(cells[9])));
    } else if (kind == "msg") {
      if (cells.size() != 13)
        throw std::invalid_argument("metrics csv: bad msg row");
      sim::MessageRecord m;
      m.src = static_cast<NodeId>(to_u64(cells[1]));
      m.dst = static_cast<NodeId>(to_u64(cells[2]));
      m.msg_seq = static_cast<std::uint16_t>(to_u64(cells[3]));
      m.t_origin = to_double(cells[4]);
      m.t_delivered = to_double(cells[5]);
      m.ble_hops = std::stoi(cells[6]);
      m.lora_hops = std::stoi(cells[7]);
      m.ble_frag_txs = std::stoi(cells[8]);
      m.airtime_latency_s = to_double(cells[9]);
      m.energy_j = to_double(cells[10]);
      m.inter_cluster = cells[11] == "1";
      m.status = status_from(cells[12]);
      r.messages.push_back(m);
    } else if (kind == "ch") {
      if (cells.size() != 4)
        throw std::invalid_argument("metrics csv: bad ch row");
      sim::ChRoleEvent c;
      c.time = to_double(cells[1]);
      c.node = static_cast<NodeId>(to_u64(cells[2]));
      c.is_ch = cells[3] == "1";
      r.ch_events.push_back(c);
    } else {
      throw std::invalid_argument("metrics csv: unknown row kind " + kind);
    }
  }
  if (!saw_schema)
    throw std::invalid_argument("metrics csv: missing schema header");
  return r;
}

std::string render_summary(const sim::MetricsReport& r) {
  std::ostringstream out;
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
  };
  out << "run: " << r.duration_s << " s, " << r.node_ids.size() << " nodes\n";
  out << "messages: " << r.originated << " originated, " << r.delivered
      << " delivered (ratio " << r.delivery_ratio << ")\n";
  out << "traffic split: " << r.originated_intra << " intra / "
      << r.originated_inter << " inter (measured inter fraction "
      << r.measured_inter_fraction << ", BLE share " << r.ble_traffic_share
      << ")\n";
  out << "airtime latency (s): intra " << mean(r.latency_intra) << " ("
      << r.latency_intra.size() << "), inter-1-lora "
      << mean(r.latency_inter_1lora) << " (" << r.latency_inter_1lora.size()
      << "), inter-2-lora " << mean(r.latency_inter_2lora) << " ("
      << r.latency_inter_2lora.size() << ")\n";
  out << "channel utilization: ble " << r.ble_utilization << ", lora "
      << r.lora_utilization << "\n";
  double ble_j = 0, lora_j = 0, listen_j = 0;
  int chs = 0;
  for (std::size_t i = 0; i < r.node_ids.size(); ++i) {
    ble_j += r.node_energy[i].ble_tx_j;
    lora_j += r.node_energy[i].lora_tx_j;
    listen_j += r.node_energy[i].lora_listen_j;
    chs += r.final_is_ch[i] ? 1 : 0;
  }
  out << "energy (J): ble tx " << ble_j << ", lora tx " << lora_j
      << ", lora listen " << listen_j << "\n";
  out << "cluster heads at end: " << chs << ", role changes: "
      << r.ch_events.size() << "\n";
  std::uint64_t drops = 0;
  for (int c = 0; c < 2; ++c)
    drops += r.cat_dropped_ttl[c] + r.cat_dropped_collision[c] +
             r.cat_dropped_no_route[c] + r.cat_dropped_overflow[c] +
             r.cat_dropped_timeout[c];
  out << "drops: " << drops << ", in flight at end: "
      << r.cat_in_flight[0] + r.cat_in_flight[1] << "\n";
  return out.str();
}

// --- Analysis ----------------------------------------------------------------

namespace {

std::string fmt_inputs(std::initializer_list<std::pair<const char*, double>>
                           kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    if (!out.empty()) out += ", ";
    out += k;
    out += '=';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    out += buf;
  }
  return out;
}

}  // namespace

AnalysisReport build_analysis_report(const AnalysisInputs& in) {
  namespace an = analytics;
  AnalysisReport rep;
  rep.inputs = in;
  auto add = [&](std::string name, double value, std::string unit,
                 std::string inputs) {
    rep.entries.push_back(
        AnalysisEntry{std::move(name), value, std::move(unit),
                      std::move(inputs)});
  };

  // Traffic model.
  const double alpha = an::inter_cluster_ratio(in.traffic);
  add("traffic.alpha", alpha, "",
      fmt_inputs({{"beta", in.traffic.beta},
                  {"C", static_cast<double>(in.traffic.clusters)}}));
  an::TrafficParams no_locality = in.traffic;
  no_locality.beta = 0.0;
  add("traffic.alpha_beta0", an::inter_cluster_ratio(no_locality), "",
      fmt_inputs({{"beta", 0.0},
                  {"C", static_cast<double>(in.traffic.clusters)}}));
  add("traffic.utilization_reduction",
      an::utilization_reduction(alpha, in.inter_path_1), "",
      fmt_inputs({{"alpha", alpha},
                  {"ble_hops", static_cast<double>(in.inter_path_1.ble_hops)},
                  {"lora_hops",
                   static_cast<double>(in.inter_path_1.lora_hops)}}));
  add("traffic.utilization_reduction_alpha08",
      an::utilization_reduction(0.08, in.inter_path_1), "",
      fmt_inputs({{"alpha", 0.08}}));

  // Energy model.
  an::RadioProfile ble{in.ble_tx_mw, in.ble_airtime_s, 0, 0, 0};
  an::RadioProfile lora{in.lora_tx_mw, in.lora_airtime_s, 0, 0, 0};
  const double e_ble = an::radio_energy_per_packet(ble);
  const double e_lora = an::radio_energy_per_packet(lora);
  add("energy.e_ble", e_ble, "J",
      fmt_inputs({{"mW", in.ble_tx_mw}, {"s", in.ble_airtime_s}}));
  add("energy.e_lora", e_lora, "J",
      fmt_inputs({{"mW", in.lora_tx_mw}, {"s", in.lora_airtime_s}}));
  const double e_dual = an::path_energy(in.inter_path_1, e_ble, e_lora);
  const an::PathShape lora_only_path{0, 5};
  const double e_lora_only = an::path_energy(lora_only_path, e_ble, e_lora);
  add("energy.e_dual_inter", e_dual, "J",
      fmt_inputs({{"ble_hops", 4}, {"lora_hops", 1}}));
  add("energy.e_lora_only_5hop", e_lora_only, "J",
      fmt_inputs({{"lora_hops", 5}}));
  add("energy.savings_inter", 1.0 - e_dual / e_lora_only, "",
      fmt_inputs({{"e_dual", e_dual}, {"e_lora_only", e_lora_only}}));
  const double e_intra2 = an::path_energy(in.intra_path, e_ble, e_lora);
  add("energy.e_intra_2hop", e_intra2, "J", fmt_inputs({{"ble_hops", 2}}));
  const double mean2 = an::mean_message_energy(alpha, e_intra2, e_dual);
  const double mean1 = an::mean_message_energy(alpha, e_ble, e_dual);
  add("energy.mean_2hop_intra", mean2, "J",
      fmt_inputs({{"alpha", alpha}, {"e_intra", e_intra2}, {"e_inter", e_dual}}));
  add("energy.mean_1hop_intra", mean1, "J",
      fmt_inputs({{"alpha", alpha}, {"e_intra", e_ble}, {"e_inter", e_dual}}));
  add("energy.network_reduction", 1.0 - mean2 / e_lora, "",
      fmt_inputs({{"mean", mean2}, {"e_lora_1hop", e_lora}}));

  // Capacity.
  add("aloha.smax", an::aloha_throughput(0.5), "", fmt_inputs({{"G", 0.5}}));
  const double c_ble =
      an::ble_cluster_capacity(in.s_max, in.ble_airtime_s, in.ble_channels);
  add("capacity.c_ble_literal", c_ble, "msg/s",
      fmt_inputs({{"s_max", in.s_max},
                  {"t_pkt", in.ble_airtime_s},
                  {"channels", static_cast<double>(in.ble_channels)}}));
  add("capacity.c_ble_reconciled",
      an::ble_cluster_capacity(in.s_max, in.ble_capacity_reconcile_tpkt_s,
                               in.ble_channels),
      "msg/s", fmt_inputs({{"t_pkt", in.ble_capacity_reconcile_tpkt_s}}));
  const double c_lora = an::lora_backbone_capacity(in.s_max, in.lora_airtime_s);
  add("capacity.c_lora", c_lora, "msg/s",
      fmt_inputs({{"s_max", in.s_max}, {"toa", in.lora_airtime_s}}));
  add("capacity.c_lora_per_min", c_lora * 60.0, "msg/min",
      fmt_inputs({{"c_lora", c_lora}}));
  add("capacity.n_max_rounded",
      an::max_network_size(30.0, alpha, in.traffic.rate_per_node), "nodes",
      fmt_inputs({{"capacity", 30.0},
                  {"alpha", alpha},
                  {"rate", in.traffic.rate_per_node}}));
  add("capacity.n_max_exact",
      an::max_network_size(c_lora * 60.0, alpha, in.traffic.rate_per_node),
      "nodes",
      fmt_inputs({{"capacity", c_lora * 60.0}, {"alpha", alpha}}));
  const double c_sf7 = an::lora_backbone_capacity(in.s_max, in.sf7_airtime_s);
  add("capacity.c_lora_sf7", c_sf7, "msg/s",
      fmt_inputs({{"s_max", in.s_max}, {"toa", in.sf7_airtime_s}}));
  add("capacity.n_max_sf7",
      an::max_network_size(c_sf7 * 60.0, alpha, in.traffic.rate_per_node),
      "nodes", fmt_inputs({{"capacity", c_sf7 * 60.0}, {"alpha", alpha}}));

  // Airtime.
  add("toa.formula_sf10", an::lora_time_on_air(in.phy, in.payload_bytes), "s",
      fmt_inputs({{"sf", 10}, {"preamble", 8},
                  {"bytes", static_cast<double>(in.payload_bytes)}}));
  an::LoraPhyConfig sf7 = in.phy;
  sf7.spreading_factor = 7;
  add("toa.formula_sf7", an::lora_time_on_air(sf7, in.payload_bytes), "s",
      fmt_inputs({{"sf", 7}, {"preamble", 8},
                  {"bytes", static_cast<double>(in.payload_bytes)}}));

  // Aggregation airtime ratio: 8 single-fragment frames versus one
  // 8-fragment frame, at the backbone PHY.
  const int single_frame_bytes = 33;  // 7-byte frame header + 26-byte entry
  const int aggregate_frame_bytes = 7 + 8 * 26;
  const double toa_single =
      an::lora_time_on_air(in.backbone_phy, single_frame_bytes);
  const double toa_aggregate =
      an::lora_time_on_air(in.backbone_phy, aggregate_frame_bytes);
  add("aggregation.airtime_ratio", 8.0 * toa_single / toa_aggregate, "",
      fmt_inputs({{"single_B", static_cast<double>(single_frame_bytes)},
                  {"aggregate_B", static_cast<double>(aggregate_frame_bytes)},
                  {"preamble",
                   static_cast<double>(in.backbone_phy.preamble_symbols)}}));

  // Latency table (s).
  const double t_ble = in.ble_airtime_s;
  const double t_lora = in.mode == sim::AirtimeMode::PaperConstants
                            ? in.lora_airtime_s
                            : an::lora_time_on_air(in.phy, in.payload_bytes);
  add("latency.dual_intra_2hop", an::path_latency(in.intra_path, t_ble, t_lora),
      "s", fmt_inputs({{"ble_hops", 2}, {"t_ble", t_ble}}));
  add("latency.dual_inter_1lora",
      an::path_latency(in.inter_path_1, t_ble, t_lora), "s",
      fmt_inputs({{"ble_hops", 4}, {"lora_hops", 1}, {"t_lora", t_lora}}));
  add("latency.dual_inter_2lora",
      an::path_latency(in.inter_path_2, t_ble, t_lora), "s",
      fmt_inputs({{"ble_hops", 4}, {"lora_hops", 2}, {"t_lora", t_lora}}));
  add("latency.ble_only_2hop",
      an::path_latency(in.intra_path, t_ble, 0.0), "s",
      fmt_inputs({{"ble_hops", 2}}));
  add("latency.lora_only_intra_2hop",
      an::path_latency(an::PathShape{0, 2}, 0.0, in.sf12_airtime_s), "s",
      fmt_inputs({{"lora_hops", 2}, {"t_lora", in.sf12_airtime_s}}));
  add("latency.lora_only_inter_1hop",
      an::path_latency(an::PathShape{0, 1}, 0.0, in.sf12_airtime_s), "s",
      fmt_inputs({{"lora_hops", 1}, {"t_lora", in.sf12_airtime_s}}));
  add("latency.lora_only_inter_2hop",
      an::path_latency(an::PathShape{0, 2}, 0.0, in.sf12_airtime_s), "s",
      fmt_inputs({{"lora_hops", 2}, {"t_lora", in.sf12_airtime_s}}));

  // Battery table.
  add("battery.non_ch_days",
      an::battery_life_days(in.battery_mah, in.current_non_ch_ma), "days",
      fmt_inputs({{"mAh", in.battery_mah}, {"mA", in.current_non_ch_ma}}));
  add("battery.ch_days",
      an::battery_life_days(in.battery_mah, in.current_ch_ma), "days",
      fmt_inputs({{"mAh", in.battery_mah}, {"mA", in.current_ch_ma}}));
  add("battery.lora_only_days",
      an::battery_life_days(in.battery_mah, in.current_lora_only_ma), "days",
      fmt_inputs({{"mAh", in.battery_mah}, {"mA", in.current_lora_only_ma}}));
  add("battery.duty_cycled_current",
      an::duty_cycled_current(in.listen_active_ma, in.listen_sleep_ma,
                              in.listen_duty),
      "mA",
      fmt_inputs({{"active_mA", in.listen_active_ma},
                  {"sleep_mA", in.listen_sleep_ma},
                  {"duty", in.listen_duty}}));

  // Reference-figure discrepancies, always reported.
  {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "FLAG capacity.c_ble_literal: %.1f msg/s from "
                  "channels*s_max/t_pkt; the commonly cited figure is "
                  "110 msg/s, which needs t_pkt near %.0f ms (that gives "
                  "%.1f msg/s)",
                  c_ble, in.ble_capacity_reconcile_tpkt_s * 1e3,
                  an::ble_cluster_capacity(in.s_max,
                                           in.ble_capacity_reconcile_tpkt_s,
                                           in.ble_channels));
    rep.flags.push_back(buf);
    std::snprintf(buf, sizeof buf,
                  "FLAG capacity.n_max_sf7: %.0f nodes from the capacity "
                  "chain at %.0f ms airtime; the commonly cited figure of "
                  "562 nodes does not follow from these formulas",
                  an::max_network_size(c_sf7 * 60.0, alpha,
                                       in.traffic.rate_per_node),
                  in.sf7_airtime_s * 1e3);
    rep.flags.push_back(buf);
    std::snprintf(buf, sizeof buf,
                  "FLAG toa.formula_sf10: the standard airtime formula gives "
                  "%.0f ms for %d bytes (explicit header, CRC, CR 4/5, "
                  "8-symbol preamble), not the 370 ms constant; the exact "
                  "PHY options behind that constant are unstated",
                  an::lora_time_on_air(in.phy, in.payload_bytes) * 1e3,
                  in.payload_bytes);
    rep.flags.push_back(buf);
    std::snprintf(buf, sizeof buf,
                  "FLAG aggregation.airtime_ratio: measured %.2fx with the "
                  "standard formula at SF10 (16-symbol preamble); the "
                  "commonly cited 5x gain is not reproduced",
                  8.0 * toa_single / toa_aggregate);
    rep.flags.push_back(buf);
  }
  return rep;
}

double analysis_value(const AnalysisReport& report, const std::string& name) {
  for (const auto& e : report.entries)
    if (e.name == name) return e.value;
  throw std::out_of_range("analysis entry not found: " + name);
}

bool has_entry(const AnalysisReport& report, const std::string& name) {
  for (const auto& e : report.entries)
    if (e.name == name) return true;
  return false;
}

std::string render_analysis(const AnalysisReport& report) {
  std::ostringstream out;
  out << "closed-form analysis ("
      << (report.inputs.mode == sim::AirtimeMode::PaperConstants
              ? "paper-constants airtime"
              : "formula airtime")
      << ")\n";
  std::string section;
  for (const auto& e : report.entries) {
    const std::string prefix = e.name.substr(0, e.name.find('.'));
    if (prefix != section) {
      section = prefix;
      out << "\n[" << section << "]\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", e.value);
    out << "  " << e.name << " = " << buf;
    if (!e.unit.empty()) out << " " << e.unit;
    out << "   (" << e.inputs << ")\n";
  }
  out << "\n[flags]\n";
  for (const auto& f : report.flags) out << "  " << f << "\n";
  return out.str();
}

}  // namespace dualmesh::report
