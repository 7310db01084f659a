#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace als {

// Seed-derivation and sampling helpers. Every random stream in the project is
// keyed by (seed, purpose salt, index...) so that any sample or step can be
// regenerated independently of every other one.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Stream salts. Values are part of the reproducibility contract.
namespace salt {
inline constexpr std::uint64_t kTrainSamples = 0x5452'4149'4eULL;
inline constexpr std::uint64_t kValSamples = 0x56'414cULL;
inline constexpr std::uint64_t kSamplerStep = 0x53'5445'50ULL;
inline constexpr std::uint64_t kSamplerEpoch = 0x45'504fULL;
inline constexpr std::uint64_t kContextDraw = 0x43'5458ULL;
inline constexpr std::uint64_t kInit = 0x49'4e49'54ULL;
inline constexpr std::uint64_t kBootstrap = 0x42'4f4fULL;
}  // namespace salt

/// 64-bit Mersenne twister with portable conversions (the std distributions
/// are implementation-defined, these are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace als
