#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "dualmesh/analytics.hpp"

using namespace dualmesh::analytics;

namespace {

// Independent airtime oracle: integer symbol arithmetic, rational symbol
// time. Kept separate from the library implementation on purpose.
double oracle_toa(int sf, double bw, int cr, int preamble, int pl, bool hdr,
                  bool crc, bool ldro) {
  const double t_sym = std::ldexp(1.0, sf) / bw;
  const long num = 8L * pl - 4L * sf + 28 + (crc ? 16 : 0) - (hdr ? 0 : 20);
  const long den = 4L * (sf - (ldro ? 2 : 0));
  long ceil_div = (num + den - 1) / den;
  if (num <= 0) ceil_div = 0;
  const long n_payload = 8 + (ceil_div > 0 ? ceil_div * (cr + 4) : 0);
  return (preamble + 4.25) * t_sym + n_payload * t_sym;
}

}  // namespace

TEST_CASE("inter_cluster_ratio matches the closed form") {
  CHECK(inter_cluster_ratio({0.82, 3, 1.0}) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(inter_cluster_ratio({0.0, 3, 1.0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(inter_cluster_ratio({1.0, 10, 1.0}) == 0.0);
  CHECK_THROWS_AS(inter_cluster_ratio({1.5, 3, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(inter_cluster_ratio({0.5, 0, 1.0}), std::invalid_argument);
}

TEST_CASE("inter_cluster_ratio monotonicity and endpoints") {
  for (int c = 1; c <= 12; ++c) {
    CHECK(inter_cluster_ratio({1.0, c, 1.0}) == 0.0);
    CHECK(inter_cluster_ratio({0.0, c, 1.0}) ==
          doctest::Approx(1.0 - 1.0 / c).epsilon(1e-12));
    double prev = 2.0;
    for (double beta = 0.0; beta <= 1.0; beta += 0.05) {
      const double a = inter_cluster_ratio({beta, c, 1.0});
      CHECK(a <= prev + 1e-12);  // decreasing in beta
      prev = a;
    }
  }
  for (double beta : {0.0, 0.3, 0.82}) {
    double prev = -1.0;
    for (int c = 1; c <= 12; ++c) {
      const double a = inter_cluster_ratio({beta, c, 1.0});
      CHECK(a >= prev - 1e-12);  // increasing in C
      prev = a;
    }
  }
}

TEST_CASE("utilization_reduction evaluates and keeps its identity") {
  CHECK(utilization_reduction(0.12, {4, 1}) == doctest::Approx(0.856).epsilon(1e-12));
  CHECK(utilization_reduction(0.0, {2, 1}) == 1.0);
  CHECK(utilization_reduction(0.08, {4, 1}) == doctest::Approx(0.904).epsilon(1e-12));
  // eta + alpha*(1 + lora/total) == 1
  for (double alpha : {0.0, 0.05, 0.12, 0.3, 0.9, 1.0}) {
    for (int ble = 0; ble <= 5; ++ble) {
      for (int lora = 0; lora <= 3; ++lora) {
        if (ble + lora == 0) continue;
        const PathShape shape{ble, lora};
        const double eta = utilization_reduction(alpha, shape);
        const double ratio = static_cast<double>(lora) / (ble + lora);
        CHECK(eta + alpha * (1.0 + ratio) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(utilization_reduction(0.1, {0, 0}), std::invalid_argument);
}

TEST_CASE("radio energy per packet") {
  CHECK(radio_energy_per_packet({8.0, 0.016, 0, 0, 0}) ==
        doctest::Approx(128e-6).epsilon(1e-12));
  CHECK(radio_energy_per_packet({50.0, 0.370, 0, 0, 0}) ==
        doctest::Approx(18.5e-3).epsilon(1e-12));
  CHECK(radio_energy_per_packet({123.0, 0.0, 0, 0, 0}) == 0.0);
}

TEST_CASE("path energy values and linearity") {
  const double e_ble = 128e-6, e_lora = 18.5e-3;
  CHECK(path_energy({4, 1}, e_ble, e_lora) == doctest::Approx(19.012e-3).epsilon(1e-12));
  CHECK(path_energy({0, 5}, e_ble, e_lora) == doctest::Approx(92.5e-3).epsilon(1e-12));
  CHECK(path_energy({2, 0}, e_ble, e_lora) == doctest::Approx(0.256e-3).epsilon(1e-12));
  // f(a + b) = f(a) + f(b) over concatenated shapes
  for (int b1 = 0; b1 <= 3; ++b1)
    for (int l1 = 0; l1 <= 2; ++l1)
      for (int b2 = 0; b2 <= 3; ++b2)
        for (int l2 = 0; l2 <= 2; ++l2) {
          const double joint =
              path_energy({b1 + b2, l1 + l2}, e_ble, e_lora);
          const double split = path_energy({b1, l1}, e_ble, e_lora) +
                               path_energy({b2, l2}, e_ble, e_lora);
          CHECK(joint == doctest::Approx(split).epsilon(1e-12));
        }
}

TEST_CASE("mean message energy") {
  CHECK(mean_message_energy(0.12, 0.256e-3, 19.012e-3) ==
        doctest::Approx(2.50672e-3).epsilon(1e-12));
  CHECK(mean_message_energy(0.12, 128e-6, 19.012e-3) ==
        doctest::Approx(2.39408e-3).epsilon(1e-12));
  CHECK(mean_message_energy(0.0, 42.0, 7.0) == 42.0);
  CHECK(mean_message_energy(1.0, 42.0, 7.0) == 7.0);
}

TEST_CASE("aloha throughput curve") {
  CHECK(aloha_throughput(0.5) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(aloha_throughput(0.0) == 0.0);
  CHECK(aloha_throughput(1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  // Global maximum at G = 0.5 with value 1/(2e), by fine grid search.
  double best_g = 0.0, best_s = -1.0;
  for (double g = 0.0; g <= 3.0; g += 1e-4) {
    const double s = aloha_throughput(g);
    if (s > best_s) {
      best_s = s;
      best_g = g;
    }
  }
  CHECK(best_g == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(best_s == doctest::Approx(1.0 / (2.0 * std::exp(1.0))).epsilon(1e-6));
}

TEST_CASE("capacity chain") {
  CHECK(ble_cluster_capacity(0.184, 0.016, 3) == doctest::Approx(34.5).epsilon(1e-12));
  CHECK(ble_cluster_capacity(0.184, 0.005, 3) == doctest::Approx(110.4).epsilon(1e-12));
  CHECK(ble_cluster_capacity(0.0, 0.016, 3) == 0.0);
  CHECK(lora_backbone_capacity(0.184, 0.370) == doctest::Approx(0.497297297).epsilon(1e-9));
  CHECK(lora_backbone_capacity(0.184, 0.051) == doctest::Approx(3.607843137).epsilon(1e-9));
  CHECK(lora_backbone_capacity(0.184, 1.0) == doctest::Approx(0.184).epsilon(1e-12));
  CHECK(max_network_size(30.0, 0.12, 1.0) == doctest::Approx(250.0).epsilon(1e-12));
  CHECK(max_network_size(29.837837837837835, 0.12, 1.0) ==
        doctest::Approx(248.64864864864865).epsilon(1e-12));
  CHECK(max_network_size(30.0, 0.24, 1.0) == doctest::Approx(125.0).epsilon(1e-12));
  CHECK(std::isinf(max_network_size(30.0, 0.0, 1.0)));
}

TEST_CASE("capacity round trip consistency") {
  // max_network_size(lora_backbone_capacity(s,t)*60, a, r) * a * r == s/t*60
  for (double s : {0.1, 0.184, 0.3})
    for (double t : {0.051, 0.37, 1.2})
      for (double a : {0.05, 0.12, 0.5})
        for (double r : {0.5, 1.0, 4.0}) {
          const double n = max_network_size(
              lora_backbone_capacity(s, t) * 60.0, a, r);
          CHECK(n * a * r == doctest::Approx(s / t * 60.0).epsilon(1e-9));
        }
}

TEST_CASE("lora time on air matches the independent oracle") {
  LoraPhyConfig sf7{7, 125000.0, 1, 8, true, true, false};
  CHECK(lora_time_on_air(sf7, 50) == doctest::Approx(0.097536).epsilon(1e-9));
  LoraPhyConfig sf10{10, 125000.0, 1, 8, true, true, false};
  CHECK(lora_time_on_air(sf10, 50) == doctest::Approx(0.616448).epsilon(1e-9));

  for (int sf = 5; sf <= 12; ++sf)
    for (int pl : {1, 13, 50, 128, 255})
      for (int cr : {1, 4})
        for (bool crc : {false, true})
          for (bool hdr : {false, true}) {
            LoraPhyConfig phy{sf, 125000.0, cr, 8, hdr, crc, false};
            CHECK(lora_time_on_air(phy, pl) ==
                  doctest::Approx(oracle_toa(sf, 125000.0, cr, 8, pl, hdr,
                                             crc, false))
                      .epsilon(1e-12));
          }
}

TEST_CASE("lora time on air monotonicity") {
  for (int sf = 5; sf <= 12; ++sf) {
    LoraPhyConfig phy{sf, 125000.0, 1, 8, true, true, false};
    double prev = 0.0;
    for (int pl = 1; pl <= 255; ++pl) {
      const double t = lora_time_on_air(phy, pl);
      CHECK(t >= prev);
      prev = t;
    }
  }
  for (int pl : {1, 50, 255}) {
    double prev = 0.0;
    for (int sf = 5; sf <= 12; ++sf) {
      LoraPhyConfig phy{sf, 125000.0, 1, 8, true, true, false};
      const double t = lora_time_on_air(phy, pl);
      CHECK(t >= prev);
      prev = t;
    }
  }
  // Doubling the payload strictly increases airtime.
  LoraPhyConfig phy{10, 125000.0, 1, 8, true, true, false};
  for (int pl : {10, 50, 100})
    CHECK(lora_time_on_air(phy, 2 * pl) > lora_time_on_air(phy, pl));
  CHECK_THROWS_AS(lora_time_on_air(phy, 0), std::out_of_range);
  CHECK_THROWS_AS(lora_time_on_air(phy, 256), std::out_of_range);
}

TEST_CASE("duty cycled current and battery life") {
  CHECK(duty_cycled_current(4.2, 0.0, 2.0 / 30.0) == doctest::Approx(0.28).epsilon(1e-12));
  CHECK(duty_cycled_current(7.0, 2.0, 1.0) == 7.0);
  CHECK(duty_cycled_current(7.0, 2.0, 0.0) == 2.0);
  CHECK(battery_life_days(500, 6.5) == doctest::Approx(3.2051282).epsilon(1e-6));
  CHECK(battery_life_days(500, 9.2) == doctest::Approx(2.2644928).epsilon(1e-6));
  CHECK(battery_life_days(500, 12.8) == doctest::Approx(1.6276042).epsilon(1e-6));
  CHECK(std::isinf(battery_life_days(500, 0.0)));
}

TEST_CASE("path latency values and linearity") {
  CHECK(path_latency({2, 0}, 0.016, 0.37) == doctest::Approx(0.032).epsilon(1e-12));
  CHECK(path_latency({4, 1}, 0.016, 0.37) == doctest::Approx(0.434).epsilon(1e-12));
  CHECK(path_latency({0, 2}, 0.016, 2.5) == doctest::Approx(5.0).epsilon(1e-12));
  for (int b1 = 0; b1 <= 3; ++b1)
    for (int l1 = 0; l1 <= 2; ++l1)
      for (int b2 = 0; b2 <= 3; ++b2)
        for (int l2 = 0; l2 <= 2; ++l2) {
          const double joint = path_latency({b1 + b2, l1 + l2}, 0.016, 0.37);
          const double split = path_latency({b1, l1}, 0.016, 0.37) +
                               path_latency({b2, l2}, 0.016, 0.37);
          CHECK(joint == doctest::Approx(split).epsilon(1e-12));
        }
}

TEST_CASE("radio profile invariant") {
  RadioProfile p{8.0, 0.016, 800.0, 4.2, 0.0};
  CHECK(p.per_packet_energy_j() ==
        doctest::Approx(p.tx_power_mw * 1e-3 * p.airtime_s).epsilon(1e-9));
  RadioProfile bad{-1.0, 0.016, 0, 0, 0};
  CHECK_THROWS_AS(radio_energy_per_packet(bad), std::invalid_argument);
}
