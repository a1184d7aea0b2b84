#pragma once

#include <cmath>
#include <cstdint>

namespace dualmesh {

// Seeded PRNG (splitmix64 core) with hand-rolled samplers.
//
// std::random distributions are not bit-identical across standard library
// implementations, so everything that has to be reproducible across
// platforms samples through this class instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Decorrelated per-stream RNG (one per node, per traffic source, ...).
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    r.next_u64();
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + uniform() * (b - a); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at the n used here.
  std::uint64_t uniform_int(std::uint64_t n) { return n ? next_u64() % n : 0; }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace dualmesh
