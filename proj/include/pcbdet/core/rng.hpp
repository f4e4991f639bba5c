#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pcbdet/common.hpp"

namespace pcbdet {

// Seeded RNG wrapper. Distribution helpers are hand-rolled on top of the
// standard-defined mt19937_64 bit stream so that the draw sequence does not
// depend on the standard library's unspecified distribution algorithms.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_stream(seed, stream));
  }

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; one value per call, deterministic draw count.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586477 * u2);
  }

  // Pick an index with the given (unnormalized) weights.
  template <class V>
  int weighted_index(const V& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Fisher-Yates with our own index draws.
  template <class V>
  void shuffle(V& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform() * i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace pcbdet
