#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace agentnet::sim {

/// Deterministic splitmix64 stream. Self-contained so traces stay byte-equal
/// across standard-library versions; substreams are derived by hashing a
/// (seed, tag, a, b) tuple, so adding one consumer never perturbs another.
class Rng {
 public:
  explicit Rng(uint64_t state) : state_(state) {}

  static Rng derive(uint64_t master_seed, std::string_view tag, uint64_t a = 0, uint64_t b = 0);

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  bool chance(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; no spare caching so the draw count per
  /// call is fixed.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  /// Exponential with the given mean (inverse-CDF).
  double exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
  }

 private:
  uint64_t state_;
};

}  // namespace agentnet::sim
