// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run via ctest or directly from the build directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dualmesh/analytics.hpp"
#include "dualmesh/election.hpp"
#include "dualmesh/footprint.hpp"
#include "dualmesh/fragment.hpp"
#include "dualmesh/report.hpp"
#include "dualmesh/rng.hpp"
#include "dualmesh/scenario.hpp"
#include "dualmesh/sim.hpp"
#include "dualmesh/wire.hpp"

using namespace dualmesh;

namespace {

struct Checker {
  int index = 0;
  bool all_pass = true;

  void check(const std::string& name, bool ok, const std::string& detail) {
    ++index;
    std::printf("[%s] %2d. %s — %s\n", ok ? "PASS" : "FAIL", index,
                name.c_str(), detail.c_str());
    all_pass = all_pass && ok;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------------------
// Election topology harness (criterion 10)

struct Placement {
  double spacing = 700.0;
  std::vector<std::pair<int, int>> cells;  // cell of node i (id = i + 1)
};

sim::ScenarioConfig election_config(const Placement& p, double duration) {
  sim::ScenarioConfig cfg;
  for (std::size_t i = 0; i < p.cells.size(); ++i)
    cfg.nodes.push_back({static_cast<NodeId>(i + 1),
                         p.cells[i].first * p.spacing,
                         p.cells[i].second * p.spacing});
  cfg.duration_s = duration;
  cfg.seed = 404;
  cfg.payload_bytes = 15;
  return cfg;
}

bool roles_valid(const sim::MetricsReport& r) {
  std::map<NodeId, std::size_t> at;
  for (std::size_t i = 0; i < r.node_ids.size(); ++i) at[r.node_ids[i]] = i;
  for (std::size_t i = 0; i < r.node_ids.size(); ++i) {
    const NodeId cl = r.final_cluster[i];
    auto it = at.find(cl);
    if (it == at.end()) return false;
    if (!r.final_is_ch[it->second]) return false;
    if (r.final_cluster[it->second] != cl) return false;
    const bool self_head = cl == r.node_ids[i];
    if (self_head != (r.final_is_ch[i] != 0)) return false;
  }
  return true;
}

double last_role_change(const sim::MetricsReport& r) {
  double t = 0.0;
  for (const auto& e : r.ch_events) t = std::max(t, e.time);
  return t;
}

std::vector<Placement> enumerate_placements() {
  const std::vector<std::pair<int, int>> grid{{0, 0}, {1, 0}, {2, 0},
                                              {0, 1}, {1, 1}, {2, 1}};
  std::vector<Placement> out;
  std::set<std::string> seen;

  for (double spacing : {700.0, 500.0}) {
    auto adjacent = [&](std::pair<int, int> a, std::pair<int, int> b) {
      const double dx = (a.first - b.first) * spacing;
      const double dy = (a.second - b.second) * spacing;
      return std::hypot(dx, dy) <= 800.0;
    };
    for (int n = 2; n <= 6; ++n) {
      // All ordered selections of n distinct cells: the order assigns ids.
      std::vector<int> pick(n, 0);
      std::vector<bool> used(grid.size(), false);
      std::vector<int> stack;
      // Iterative enumeration of permutations of size n over 6 cells.
      std::vector<int> idx(n, -1);
      int depth = 0;
      while (depth >= 0) {
        if (depth == n) {
          Placement p;
          p.spacing = spacing;
          for (int k = 0; k < n; ++k) p.cells.push_back(grid[idx[k]]);
          // Connectivity over the implied disc graph.
          std::vector<int> dist(n, -1);
          dist[0] = 0;
          std::vector<int> queue{0};
          for (std::size_t qi = 0; qi < queue.size(); ++qi)
            for (int j = 0; j < n; ++j)
              if (dist[j] < 0 && adjacent(p.cells[queue[qi]], p.cells[j])) {
                dist[j] = dist[queue[qi]] + 1;
                queue.push_back(j);
              }
          bool connected = true;
          for (int j = 0; j < n; ++j) connected = connected && dist[j] >= 0;
          if (connected) {
            // Dedupe by the id-labeled adjacency matrix; geometry only
            // matters once a node can have more than 4 neighbors (beacon
            // truncation), so keep the spacing in the key in that case.
            std::string key = std::to_string(n) + ":";
            int max_deg = 0;
            for (int a = 0; a < n; ++a) {
              int deg = 0;
              for (int b = 0; b < n; ++b) {
                const bool adj = a != b && adjacent(p.cells[a], p.cells[b]);
                key += adj ? '1' : '0';
                deg += adj ? 1 : 0;
              }
              max_deg = std::max(max_deg, deg);
            }
            if (max_deg > 4) key += ":s" + std::to_string(int(spacing));
            if (seen.insert(key).second) out.push_back(std::move(p));
          }
          --depth;
          continue;
        }
        int start = idx[depth] + 1;
        if (idx[depth] >= 0) used[idx[depth]] = false;
        idx[depth] = -1;
        bool advanced = false;
        for (int c = start; c < static_cast<int>(grid.size()); ++c) {
          if (used[c]) continue;
          idx[depth] = c;
          used[c] = true;
          advanced = true;
          break;
        }
        if (!advanced) {
          --depth;
        } else {
          ++depth;
          if (depth < n) idx[depth] = -1;
        }
      }
      (void)pick;
      (void)stack;
    }
  }
  return out;
}

}  // namespace

int main() {
  Checker c;
  namespace an = analytics;

  // 1. Closed-form inter-cluster ratio.
  {
    const double a1 = an::inter_cluster_ratio({0.82, 3, 1.0});
    const double a2 = an::inter_cluster_ratio({0.0, 3, 1.0});
    c.check("inter-cluster ratio closed form",
            close(a1, 0.12, 1e-12) && close(a2, 2.0 / 3.0, 1e-12),
            "alpha(0.82,3)=" + fmt(a1) + ", alpha(0,3)=" + fmt(a2));
  }

  // 2. Per-path energy and the inter-cluster savings figure.
  {
    const double e_ble = an::radio_energy_per_packet({8, 0.016, 0, 0, 0});
    const double e_lora = an::radio_energy_per_packet({50, 0.370, 0, 0, 0});
    const double dual = an::path_energy({4, 1}, e_ble, e_lora);
    const double lora5 = an::path_energy({0, 5}, e_ble, e_lora);
    const double savings = 1.0 - dual / lora5;
    c.check("path energy and savings",
            close(dual, 19.012e-3, 1e-12) && close(lora5, 92.5e-3, 1e-12) &&
                close(savings, 0.794, 5e-4),
            "dual=" + fmt(dual * 1e3) + " mJ, lora-only=" +
                fmt(lora5 * 1e3) + " mJ, savings=" + fmt(savings * 100) + "%");
  }

  // 3. Mean message energy, both intra-path interpretations printed.
  {
    auto rep = report::build_analysis_report({});
    const double m2 = report::analysis_value(rep, "energy.mean_2hop_intra");
    const double m1 = report::analysis_value(rep, "energy.mean_1hop_intra");
    c.check("mean message energy (both interpretations)",
            m2 * 1e3 >= 2.4 && m2 * 1e3 <= 2.6 && close(m1, 2.39408e-3, 1e-8),
            "2-hop intra: " + fmt(m2 * 1e3) + " mJ in [2.4, 2.6]; 1-hop: " +
                fmt(m1 * 1e3) + " mJ");
  }

  // 4. ALOHA: analytic peak by grid search plus Monte-Carlo agreement.
  {
    double best_g = 0, best_s = -1;
    for (double g = 0.0; g <= 2.0; g += 1e-4) {
      const double s = an::aloha_throughput(g);
      if (s > best_s) {
        best_s = s;
        best_g = g;
      }
    }
    auto mc = sim::run_aloha_experiment(0.5, 20000, 0.016, 17);
    const bool ok = close(best_g, 0.5, 1e-3) && close(best_s, 0.1839, 1e-4) &&
                    close(mc.throughput, 0.184, 0.03);
    c.check("aloha peak and monte-carlo",
            ok,
            "argmax G=" + fmt(best_g) + ", S=" + fmt(best_s) +
                "; measured S at G=0.5: " + fmt(mc.throughput) + " (" +
                fmt(20000) + " frames)");
  }

  // 5. Backbone capacity chain.
  {
    const double c_lora = an::lora_backbone_capacity(0.184, 0.370);
    const double n_rounded = an::max_network_size(30.0, 0.12, 1.0);
    const double n_exact = an::max_network_size(c_lora * 60.0, 0.12, 1.0);
    c.check("backbone capacity and max network size",
            close(c_lora, 0.497, 5e-4) &&
                std::abs(n_rounded - 250.0) / 250.0 <= 0.01 &&
                close(n_exact, 248.6, 0.1),
            "C_lora=" + fmt(c_lora) + " msg/s, N(30 msg/min)=" +
                fmt(n_rounded) + ", exact=" + fmt(n_exact));
  }

  // 6. Latency table, paper-constants airtime.
  {
    const double i2 = an::path_latency({2, 0}, 0.016, 0.370);
    const double x1 = an::path_latency({4, 1}, 0.016, 0.370);
    const double x2 = an::path_latency({4, 2}, 0.016, 0.370);
    const double l2 = an::path_latency({0, 2}, 0.0, 2.5);
    const double l1 = an::path_latency({0, 1}, 0.0, 2.5);
    c.check("latency table (paper constants)",
            close(i2, 0.032, 1e-12) && close(x1, 0.434, 1e-12) &&
                close(x2, 0.804, 1e-12) && close(l2, 5.0, 1e-12) &&
                close(l1, 2.5, 1e-12),
            "dual: " + fmt(i2) + " / " + fmt(x1) + " / " + fmt(x2) +
                " s; all-lora: " + fmt(l2) + " / " + fmt(l1) + " / " +
                fmt(l2) + " s");
  }

  // 7. Battery table and duty-cycled current.
  {
    const double d1 = an::battery_life_days(500, 6.5);
    const double d2 = an::battery_life_days(500, 9.2);
    const double d3 = an::battery_life_days(500, 12.8);
    const double duty = an::duty_cycled_current(4.2, 0.0, 2.0 / 30.0);
    auto rounds_to = [](double v, double target) {
      return close(std::round(v * 10.0) / 10.0, target, 1e-9);
    };
    c.check("battery life table",
            close(d1, 3.21, 5e-3) && close(d2, 2.26, 5e-3) &&
                close(d3, 1.63, 5e-3) && rounds_to(d1, 3.2) &&
                rounds_to(d2, 2.3) && rounds_to(d3, 1.6) &&
                close(duty, 0.28, 1e-12),
            fmt(d1) + " / " + fmt(d2) + " / " + fmt(d3) +
                " days; duty current " + fmt(duty) + " mA");
  }

  // 8. Simulated traffic split versus the closed form.
  {
    const auto t0 = std::chrono::steady_clock::now();
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
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    const bool ok = rep.originated >= 5000 &&
                    close(rep.measured_inter_fraction, 0.12, 0.01) &&
                    rep.ble_traffic_share >= 0.82 &&
                    rep.ble_traffic_share <= 0.90 && elapsed < 30.0;
    c.check("simulated inter-cluster fraction vs closed form",
            ok,
            fmt(static_cast<double>(rep.originated)) +
                " messages, measured alpha=" +
                fmt(rep.measured_inter_fraction) + ", BLE share=" +
                fmt(rep.ble_traffic_share) + ", " + fmt(elapsed) + " s");
  }

  // 9. Two-cluster end-to-end scenario: exact hops, energy, latency.
  {
    auto cfg = sim::load_scenario(std::string(SCENARIO_DIR) +
                                  "/fig1.scenario");
    auto rep = sim::run_scenario(cfg);
    bool ok = rep.originated == 1 && rep.delivered == 1;
    std::string detail = "not delivered";
    if (ok) {
      const auto& m = rep.messages.front();
      const double e_ble = an::radio_energy_per_packet({8, 0.016, 0, 0, 0});
      const double e_lora = an::radio_energy_per_packet({50, 0.370, 0, 0, 0});
      const double want_e = an::path_energy({4, 1}, e_ble, e_lora);
      const double want_t = an::path_latency({4, 1}, 0.016, 0.370);
      ok = m.ble_hops == 4 && m.lora_hops == 1 &&
           std::abs(m.energy_j - want_e) <= 1e-12 &&
           std::abs(m.airtime_latency_s - want_t) <= 1e-12;
      detail = "hops " + std::to_string(m.ble_hops) + " BLE + " +
               std::to_string(m.lora_hops) + " LoRa, energy " +
               fmt(m.energy_j * 1e3) + " mJ, latency " +
               fmt(m.airtime_latency_s * 1e3) + " ms";
    }
    c.check("two-cluster end-to-end: 2 BLE + 1 LoRa + 2 BLE", ok, detail);
  }

  // 10. Election over the exhaustive placement set, with demotion.
  {
    auto placements = enumerate_placements();
    int checked = 0, valid = 0, converged = 0;
    int demotions = 0, transfers = 0;
    bool all_ok = true;
    for (const auto& p : placements) {
      ++checked;
      auto cfg = election_config(p, 40.0);
      auto rep = sim::run_scenario(cfg);
      const bool v = roles_valid(rep);
      const bool conv = last_role_change(rep) <= 34.0;  // quiet final 6 s
      valid += v ? 1 : 0;
      converged += conv ? 1 : 0;
      all_ok = all_ok && v && conv;

      // Demote the busiest CH and require a transfer within 6 s.
      NodeId victim = kUnassigned;
      int best_members = 0;
      for (std::size_t i = 0; i < rep.node_ids.size(); ++i) {
        if (!rep.final_is_ch[i]) continue;
        int members = 0;
        for (std::size_t j = 0; j < rep.node_ids.size(); ++j)
          members += (j != i && rep.final_cluster[j] == rep.node_ids[i]) ? 1
                                                                         : 0;
        if (members > best_members ||
            (members == best_members && victim == kUnassigned)) {
          best_members = members;
          victim = rep.node_ids[i];
        }
      }
      if (victim == kUnassigned || best_members == 0) continue;  // singletons
      ++demotions;
      auto cfg2 = election_config(p, 52.0);
      cfg2.battery_events = {{40.0, victim, 15.0}};
      auto rep2 = sim::run_scenario(cfg2);
      bool lost_in_time = false, gained_in_time = false;
      for (const auto& e : rep2.ch_events) {
        if (e.node == victim && !e.is_ch && e.time >= 40.0 && e.time <= 46.0)
          lost_in_time = true;
        if (e.node != victim && e.is_ch && e.time >= 40.0 && e.time <= 46.0)
          gained_in_time = true;
      }
      const bool transferred =
          lost_in_time && gained_in_time && roles_valid(rep2);
      transfers += transferred ? 1 : 0;
      all_ok = all_ok && transferred;
    }
    c.check("election: one CH per cluster over exhaustive placements",
            all_ok && checked > 500,
            std::to_string(checked) + " placements, " +
                std::to_string(valid) + " valid, " +
                std::to_string(converged) + " quiet, " +
                std::to_string(transfers) + "/" + std::to_string(demotions) +
                " demotions transferred");
  }

  // 11. Protocol state budget at maximum occupancy.
  {
    const std::size_t max = protocol::max_state_footprint();
    c.check("state footprint at maximum occupancy",
            max <= protocol::Footprint::kBudget,
            std::to_string(max) + " B <= 3072 B");
  }

  // 12. Codec round trip at scale plus fragmentation identity.
  {
    Rng rng(777);
    bool ok = true;
    int count = 0;
    for (int i = 0; i < 100000 && ok; ++i, ++count) {
      wire::Frame frame;
      switch (rng.uniform_int(4)) {
        case 0: {
          wire::Beacon b;
          b.version = static_cast<std::uint8_t>(rng.uniform_int(16));
          b.node = static_cast<NodeId>(rng.uniform_int(65536));
          b.advertised_key = static_cast<std::uint16_t>(rng.uniform_int(65536));
          b.flags = static_cast<std::uint8_t>(rng.uniform_int(16));
          b.battery_pct = static_cast<std::uint8_t>(rng.uniform_int(101));
          b.cluster = static_cast<NodeId>(rng.uniform_int(65536));
          const auto n = rng.uniform_int(5);
          for (std::uint64_t k = 0; k < n; ++k)
            b.neighbors.push_back(
                {static_cast<NodeId>(rng.uniform_int(65536)),
                 static_cast<std::uint8_t>(rng.uniform_int(256))});
          frame = b;
          break;
        }
        case 1: {
          wire::Rreq r;
          r.rreq_id = static_cast<std::uint8_t>(rng.uniform_int(256));
          r.origin = static_cast<NodeId>(rng.uniform_int(65536));
          r.origin_seq = static_cast<std::uint16_t>(rng.uniform_int(65536));
          r.dest = static_cast<NodeId>(rng.uniform_int(65536));
          r.dest_seq = static_cast<std::uint16_t>(rng.uniform_int(65536));
          r.hop_count = static_cast<std::uint8_t>(rng.uniform_int(256));
          r.path_cost = static_cast<std::uint16_t>(rng.uniform_int(65536));
          r.ttl = static_cast<std::uint8_t>(rng.uniform_int(256));
          frame = r;
          break;
        }
        case 2: {
          wire::Rrep r;
          r.origin = static_cast<NodeId>(rng.uniform_int(65536));
          r.origin_seq = static_cast<std::uint16_t>(rng.uniform_int(65536));
          r.dest = static_cast<NodeId>(rng.uniform_int(65536));
          r.dest_seq = static_cast<std::uint16_t>(rng.uniform_int(65536));
          r.hop_count = static_cast<std::uint8_t>(rng.uniform_int(256));
          r.path_cost = static_cast<std::uint16_t>(rng.uniform_int(65536));
          r.lifetime_s = static_cast<std::uint8_t>(rng.uniform_int(256));
          frame = r;
          break;
        }
        default: {
          wire::DataFragment f;
          f.src = static_cast<NodeId>(rng.uniform_int(65536));
          f.dst = static_cast<NodeId>(rng.uniform_int(65536));
          f.msg_seq = static_cast<std::uint16_t>(rng.uniform_int(65536));
          f.ttl = static_cast<std::uint8_t>(rng.uniform_int(256));
          f.frag_count = static_cast<std::uint8_t>(1 + rng.uniform_int(8));
          f.frag_index =
              static_cast<std::uint8_t>(rng.uniform_int(f.frag_count));
          const auto len = rng.uniform_int(16);
          for (std::uint64_t k = 0; k < len; ++k)
            f.payload.push_back(
                static_cast<std::uint8_t>(rng.uniform_int(256)));
          frame = f;
          break;
        }
      }
      const auto bytes = wire::encode(frame);
      ok = ok && bytes.size() <= wire::kMaxBleFrameBytes;
      auto decoded = wire::decode_ble(bytes);
      ok = ok && decoded.ok() && *decoded == frame;
    }
    // Fragment / reassemble identity under random order and duplicates.
    for (int trial = 0; trial < 200 && ok; ++trial) {
      const std::size_t len = 1 + rng.uniform_int(120);
      std::vector<std::uint8_t> payload(len);
      for (auto& b : payload)
        b = static_cast<std::uint8_t>(rng.uniform_int(256));
      auto frags = protocol::fragment_message(
          1, 2, static_cast<std::uint16_t>(trial), 12, payload);
      auto arrivals = frags;
      for (int d = 0; d < 4; ++d)
        arrivals.push_back(frags[rng.uniform_int(frags.size())]);
      for (std::size_t i = arrivals.size(); i > 1; --i)
        std::swap(arrivals[i - 1], arrivals[rng.uniform_int(i)]);
      protocol::Reassembler r;
      bool complete = false;
      for (const auto& f : arrivals) {
        auto result = r.add(f, 0.0);
        if (result.kind == protocol::ReassemblyResult::Kind::Complete) {
          complete = true;
          ok = ok && result.payload == payload;
        }
      }
      ok = ok && complete;
    }
    c.check("codec round trip and reassembly identity", ok,
            std::to_string(count) + " frames round-tripped, 200 reassemblies");
  }

  // 13. Aggregation: 8-fragment frame plus the airtime ratio report.
  {
    backbone::ChState ch(7, backbone::Config{});
    std::vector<std::uint8_t> payload(120, 0x42);
    auto frags = protocol::fragment_message(1, 42, 0, 12, payload);
    ch.enqueue_for_backbone(frags, 42, 0.0);
    auto frames = ch.flush_aggregate(0.0);
    const bool eight = frames.size() == 1 && frames[0].fragments.size() == 8;

    auto rep = report::build_analysis_report({});
    const double ratio =
        report::analysis_value(rep, "aggregation.airtime_ratio");
    bool flagged = false;
    for (const auto& f : rep.flags)
      if (f.find("airtime_ratio") != std::string::npos &&
          f.find("5x") != std::string::npos)
        flagged = true;
    c.check("fragment aggregation and airtime ratio",
            eight && ratio >= 2.0 && flagged,
            "8-fragment frame emitted; ratio " + fmt(ratio) +
                " >= 2.0; 5x figure flagged as not reproduced");
  }

  // 14. Documented-discrepancy flags in the analysis report.
  {
    auto rep = report::build_analysis_report({});
    bool eq7 = false, sf7 = false;
    for (const auto& f : rep.flags) {
      if (f.find("c_ble_literal") != std::string::npos &&
          f.find("110") != std::string::npos)
        eq7 = true;
      if (f.find("n_max_sf7") != std::string::npos &&
          f.find("562") != std::string::npos)
        sf7 = true;
    }
    const double literal =
        report::analysis_value(rep, "capacity.c_ble_literal");
    const double sf7_n = report::analysis_value(rep, "capacity.n_max_sf7");
    c.check("discrepancy flags present",
            eq7 && sf7 && close(literal, 34.5, 1e-9) &&
                close(sf7_n, 1803.9, 0.1),
            "literal capacity " + fmt(literal) +
                " msg/s flagged vs 110; SF7 N_max " + fmt(sf7_n) +
                " flagged vs 562");
  }

  std::printf("%s\n", c.all_pass ? "ALL CRITERIA PASS" : "CRITERIA FAILED");
  return c.all_pass ? 0 : 1;
}
