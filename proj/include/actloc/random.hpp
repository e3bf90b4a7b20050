#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace actloc {

// Seeded generator with portable distributions.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard <random> distributions are implementation-defined,
// so the ones used by the simulator are written out here:
//   uniform01  : top 53 bits of one draw, scaled by 2^-53
//   below(n)   : floor(uniform01 * n)
//   normal     : Box-Muller, one value per two uniforms (no caching)
//   poisson    : Knuth's product-of-uniforms method
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sigma * z;
  }

  int poisson(double rate) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double prod = uniform01();
    while (prod > limit) {
      ++k;
      prod *= uniform01();
    }
    return k;
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used for position-keyed procedural textures.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace actloc
