// dualmesh CLI: closed-form analysis, scenario runs, parameter sweeps and a
// self-check suite.
//
// Exit codes: 0 success, 2 input error, 3 invariant violation,
// 4 validation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualmesh/analytics.hpp"
#include "dualmesh/mesh.hpp"
#include "dualmesh/report.hpp"
#include "dualmesh/scenario.hpp"
#include "dualmesh/sim.hpp"

namespace {

using namespace dualmesh;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitValidation = 4;

sim::AirtimeMode parse_mode(const std::string& mode) {
  if (mode == "paper") return sim::AirtimeMode::PaperConstants;
  if (mode == "formula") return sim::AirtimeMode::Formula;
  throw std::invalid_argument("airtime mode must be 'paper' or 'formula'");
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/" + name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
  out << content;
}

int cmd_analyze(const std::string& mode, double beta, int clusters,
                double rate, const std::string& out_dir) {
  report::AnalysisInputs in;
  in.mode = parse_mode(mode);
  in.traffic.beta = beta;
  in.traffic.clusters = clusters;
  in.traffic.rate_per_node = rate;
  auto rep = report::build_analysis_report(in);
  const auto text = report::render_analysis(rep);
  std::cout << text;
  if (!out_dir.empty()) write_file(out_dir, "analysis.txt", text);
  return kExitOk;
}

int cmd_simulate(const std::string& path, std::uint64_t seed, bool seed_set,
                 const std::string& mode, bool mode_set, bool csv,
                 const std::string& out_dir) {
  auto cfg = sim::load_scenario(path);
  if (seed_set) cfg.seed = seed;
  if (mode_set) cfg.airtime_mode = parse_mode(mode);
  auto rep = sim::run_scenario(cfg);
  std::cout << report::render_summary(rep);
  if (csv || !out_dir.empty()) {
    const auto text = report::render_metrics_csv(rep);
    if (!out_dir.empty())
      write_file(out_dir, "metrics.csv", text);
    else
      std::cout << text;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& path, const std::string& param,
              const std::vector<double>& values, std::uint64_t seed,
              bool seed_set, const std::string& out_dir) {
  auto base = sim::load_scenario(path);
  if (seed_set) base.seed = seed;

  auto apply = [&](sim::ScenarioConfig cfg, double v) {
    if (param == "beta") cfg.traffic.beta = v;
    else if (param == "rate_per_node") cfg.traffic.rate_per_node_per_min = v;
    else if (param == "payload_bytes") cfg.payload_bytes = static_cast<int>(v);
    else if (param == "duration") cfg.duration_s = v;
    else if (param == "seed") cfg.seed = static_cast<std::uint64_t>(v);
    else
      throw std::invalid_argument(
          "sweep parameter must be one of: beta, rate_per_node, "
          "payload_bytes, duration, seed");
    cfg.validate();
    return cfg;
  };

  // Fan the runs out across workers; aggregate in value order.
  std::vector<std::future<sim::MetricsReport>> runs;
  for (double v : values) {
    auto cfg = apply(base, v);
    runs.push_back(std::async(std::launch::async,
                              [cfg]() { return sim::run_scenario(cfg); }));
  }

  std::string out =
      "param,value,originated,delivered,delivery_ratio,inter_fraction,"
      "ble_share,ble_utilization,lora_utilization\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto rep = runs[i].get();
    char line[256];
    std::snprintf(line, sizeof line, "%s,%g,%llu,%llu,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  param.c_str(), values[i],
                  static_cast<unsigned long long>(rep.originated),
                  static_cast<unsigned long long>(rep.delivered),
                  rep.delivery_ratio, rep.measured_inter_fraction,
                  rep.ble_traffic_share, rep.ble_utilization,
                  rep.lora_utilization);
    out += line;
  }
  std::cout << out;
  if (!out_dir.empty()) write_file(out_dir, "sweep.csv", out);
  return kExitOk;
}

// --- validate ---------------------------------------------------------------

struct ValidationRun {
  bool all_pass = true;
  void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %-32s %s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.c_str());
    all_pass = all_pass && ok;
  }
};

// Route-cost cross-check over a hand-driven line topology. `rssi_skew`
// models a mis-tuned link-quality feed: the check must fail when the
// reported RSSI disagrees with the ground truth used for the expectation.
bool path_cost_crosscheck(int rssi_skew) {
  const double spacing = 600.0;
  const int n = 4;
  std::vector<mesh::NodeState> nodes;
  for (int i = 0; i < n; ++i)
    nodes.emplace_back(static_cast<NodeId>(i + 1), mesh::Config{}, 99);

  const int rssi = sim::rssi_dbm_from_distance(spacing);
  auto beacon_of = [&](int i) {
    wire::Beacon b;
    b.node = static_cast<NodeId>(i + 1);
    b.advertised_key = b.node;
    for (int j = 0; j < n; ++j)
      if (std::abs(i - j) == 1)
        b.neighbors.push_back({static_cast<NodeId>(j + 1),
                               mesh::link_quality(rssi)});
    return b;
  };
  // Two beacon rounds so every node knows its one-hop neighborhood.
  for (int round = 0; round < 2; ++round)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(i - j) == 1)
          nodes[j].process_beacon(beacon_of(i), rssi + rssi_skew,
                                  0.1 * round);

  // Drive a discovery from node 1 to node 4 by flooding by hand.
  auto actions = nodes[0].send_message(4, std::vector<std::uint8_t>{1}, 1.0);
  struct InAir {
    int from;
    std::vector<std::uint8_t> bytes;
    NodeId target;
  };
  std::vector<InAir> air;
  auto collect = [&](int from, const mesh::Actions& acts) {
    for (const auto& a : acts)
      if (const auto* s = std::get_if<mesh::SendBle>(&a))
        air.push_back({from, s->bytes, s->envelope_to});
  };
  collect(0, actions);
  for (int hop = 0; hop < 16 && !air.empty(); ++hop) {
    std::vector<InAir> next;
    for (const auto& tx : air) {
      for (int j = 0; j < n; ++j) {
        if (std::abs(tx.from - j) != 1) continue;
        if (tx.target != kBroadcast &&
            tx.target != static_cast<NodeId>(j + 1))
          continue;
        auto decoded = wire::decode_ble(tx.bytes);
        if (!decoded.ok()) continue;
        mesh::Actions acts;
        const NodeId sender = static_cast<NodeId>(tx.from + 1);
        if (const auto* rreq = std::get_if<wire::Rreq>(&*decoded))
          acts = nodes[j].handle_rreq(*rreq, sender, rssi + rssi_skew, 1.0);
        else if (const auto* rrep = std::get_if<wire::Rrep>(&*decoded))
          acts = nodes[j].handle_rrep(*rrep, sender, rssi + rssi_skew, 1.0);
        else if (const auto* frag = std::get_if<wire::DataFragment>(&*decoded))
          acts = nodes[j].forward_data(*frag, false, 1.0);
        for (const auto& a : acts)
          if (const auto* s = std::get_if<mesh::SendBle>(&a))
            next.push_back({j, s->bytes, s->envelope_to});
      }
    }
    air = std::move(next);
  }

  // Ground truth: three hops, each costing 256 - LQ(spacing).
  const std::uint16_t per_hop = static_cast<std::uint16_t>(
      256 - mesh::link_quality(rssi));
  for (const auto& r : nodes[0].routes())
    if (r.dest == 4) return r.path_cost == 3 * per_hop;
  return false;
}

int cmd_validate() {
  namespace an = analytics;
  ValidationRun v;

  {
    const double a = an::inter_cluster_ratio({0.82, 3, 1.0});
    v.report("closed-form traffic split", std::abs(a - 0.12) < 1e-12,
             "alpha(0.82, 3) = " + std::to_string(a));
  }
  {
    const double e_ble = an::radio_energy_per_packet({8, 0.016, 0, 0, 0});
    const double e_lora = an::radio_energy_per_packet({50, 0.370, 0, 0, 0});
    const double dual = an::path_energy({4, 1}, e_ble, e_lora);
    v.report("per-path energy model", std::abs(dual - 19.012e-3) < 1e-12,
             std::to_string(dual * 1e3) + " mJ for 4 BLE + 1 LoRa");
  }
  {
    const double t1 = an::path_latency({2, 0}, 0.016, 0.370);
    const double t2 = an::path_latency({4, 1}, 0.016, 0.370);
    v.report("latency table",
             std::abs(t1 - 0.032) < 1e-12 && std::abs(t2 - 0.434) < 1e-12,
             "32 ms intra, 434 ms inter");
  }
  {
    double best_g = 0, best_s = -1;
    for (double g = 0; g <= 2.0; g += 1e-4)
      if (an::aloha_throughput(g) > best_s) {
        best_s = an::aloha_throughput(g);
        best_g = g;
      }
    auto mc = sim::run_aloha_experiment(0.5, 20000, 0.016, 17);
    v.report("aloha curve",
             std::abs(best_g - 0.5) <= 1e-3 &&
                 std::abs(mc.throughput - 0.184) <= 0.03,
             "peak at G=" + std::to_string(best_g) + ", measured S=" +
                 std::to_string(mc.throughput));
  }
  {
    sim::ScenarioConfig cfg;
    NodeId id = 1;
    for (int g = 0; g < 3; ++g)
      for (int i = 0; i < 10; ++i)
        cfg.nodes.push_back({id++, g * 8000.0 + (i % 5) * 350.0,
                             (i / 5) * 350.0});
    cfg.lora_range_m = 20000.0;
    cfg.duration_s = 560.0;
    cfg.seed = 2024;
    cfg.payload_bytes = 15;
    cfg.traffic = {0.82, 20.0, 20.0};
    auto rep = sim::run_scenario(cfg);
    v.report("measured traffic split",
             rep.originated >= 5000 &&
                 std::abs(rep.measured_inter_fraction - 0.12) <= 0.01 &&
                 rep.ble_traffic_share >= 0.82 &&
                 rep.ble_traffic_share <= 0.90,
             "alpha=" + std::to_string(rep.measured_inter_fraction) +
                 ", BLE share=" + std::to_string(rep.ble_traffic_share));
  }
  {
    sim::ScenarioConfig cfg;
    cfg.nodes = {{1, 0, 0},    {2, 600, 0},  {3, 1200, 0},
                 {4, 5400, 0}, {5, 4800, 0}, {6, 4200, 0}};
    cfg.lora_range_m = 5000.0;
    cfg.duration_s = 90.0;
    cfg.seed = 42;
    cfg.payload_bytes = 12;
    cfg.injections = {{20.0, 1, 4}};
    auto rep = sim::run_scenario(cfg);
    bool ok = rep.delivered == 1;
    std::string detail = "message not delivered";
    if (ok) {
      const auto& m = rep.messages.front();
      const double want = an::path_energy(
          {4, 1}, an::radio_energy_per_packet({8, 0.016, 0, 0, 0}),
          an::radio_energy_per_packet({50, 0.370, 0, 0, 0}));
      ok = m.ble_hops == 4 && m.lora_hops == 1 &&
           std::abs(m.energy_j - want) <= 1e-12 &&
           std::abs(m.airtime_latency_s - 0.434) <= 1e-12;
      detail = "energy " + std::to_string(m.energy_j * 1e3) + " mJ, latency " +
               std::to_string(m.airtime_latency_s * 1e3) + " ms";
    }
    v.report("ledger vs per-path energy", ok, detail);
  }
  {
    // A handful of line/grid placements must elect exactly one CH each.
    bool ok = true;
    for (int n = 2; n <= 6 && ok; ++n) {
      sim::ScenarioConfig cfg;
      for (int i = 0; i < n; ++i)
        cfg.nodes.push_back({static_cast<NodeId>(i + 1), i * 700.0, 0.0});
      cfg.duration_s = 40.0;
      cfg.seed = 404;
      auto rep = sim::run_scenario(cfg);
      int chs = 0;
      for (auto f : rep.final_is_ch) chs += f ? 1 : 0;
      ok = ok && chs >= 1;
      std::map<NodeId, std::size_t> at;
      for (std::size_t i = 0; i < rep.node_ids.size(); ++i)
        at[rep.node_ids[i]] = i;
      for (std::size_t i = 0; i < rep.node_ids.size() && ok; ++i) {
        auto it = at.find(rep.final_cluster[i]);
        ok = it != at.end() && rep.final_is_ch[it->second];
      }
    }
    v.report("election convergence", ok, "line topologies, 2..6 nodes");
  }
  {
    const bool straight = path_cost_crosscheck(0);
    const bool skewed = path_cost_crosscheck(5);  // negative control
    v.report("path-cost ground truth", straight && !skewed,
             std::string("clean feed matches; skewed feed ") +
                 (skewed ? "wrongly matched" : "detected"));
  }

  std::printf("%s\n", v.all_pass ? "validation passed" : "validation FAILED");
  return v.all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-radio mesh simulator and analytics toolkit"};
  app.require_subcommand(1);

  std::string mode = "paper";
  std::uint64_t seed = 0;
  std::string out_dir;

  auto* analyze = app.add_subcommand("analyze", "closed-form model report");
  double beta = 0.82;
  int clusters = 3;
  double rate = 1.0;
  analyze->add_option("--airtime-mode", mode, "paper | formula");
  analyze->add_option("--beta", beta, "locality bias");
  analyze->add_option("--clusters", clusters, "cluster count");
  analyze->add_option("--rate", rate, "messages per node per minute");
  analyze->add_option("--out", out_dir, "directory for analysis.txt");

  auto* simulate = app.add_subcommand("simulate", "run a scenario file");
  std::string scenario_path;
  bool csv = false;
  simulate->add_option("file", scenario_path, "scenario file")->required();
  auto* sim_seed = simulate->add_option("--seed", seed, "override seed");
  auto* sim_mode =
      simulate->add_option("--airtime-mode", mode, "override airtime mode");
  simulate->add_flag("--csv", csv, "print the metrics CSV");
  simulate->add_option("--out", out_dir, "directory for metrics.csv");

  auto* sweep = app.add_subcommand("sweep", "run a scenario across values");
  std::string param;
  std::string values_csv;
  sweep->add_option("file", scenario_path, "scenario file")->required();
  sweep->add_option("--param", param, "parameter to vary")->required();
  sweep->add_option("--values", values_csv, "comma-separated values")
      ->required();
  auto* sweep_seed = sweep->add_option("--seed", seed, "override seed");
  sweep->add_option("--out", out_dir, "directory for sweep.csv");

  auto* validate =
      app.add_subcommand("validate", "run the self-check suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (analyze->parsed())
      return cmd_analyze(mode, beta, clusters, rate, out_dir);
    if (simulate->parsed())
      return cmd_simulate(scenario_path, seed, sim_seed->count() > 0, mode,
                          sim_mode->count() > 0, csv, out_dir);
    if (sweep->parsed()) {
      std::vector<double> values;
      std::stringstream ss(values_csv);
      std::string item;
      while (std::getline(ss, item, ','))
        values.push_back(std::stod(item));
      if (values.empty())
        throw std::invalid_argument("sweep needs at least one value");
      return cmd_sweep(scenario_path, param, values, seed,
                       sweep_seed->count() > 0, out_dir);
    }
    if (validate->parsed()) return cmd_validate();
  } catch (const sim::ScenarioParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvariant;
  }
  return kExitInput;
}
