// Deterministic random streams. Every sampling routine in the library goes
// through this wrapper so that a (seed, stream) pair pins the output bits
// regardless of platform defaults or thread schedule.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace rareclass {

// SplitMix64 finalizer; used to decorrelate seeds and derive substreams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  // Counter-based substream derivation: derive(s, i) and derive(s, j) are
  // independent streams for i != j, independent of call order.
  static Rng derive(std::uint64_t master_seed, std::uint64_t stream) {
    return Rng(mix64(master_seed) ^ mix64(stream + 0x51ED2701ull));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n) by rejection.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t limit = (UINT64_MAX / n) * n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Selection sampling (Knuth's Algorithm S): k indices from [0, population)
// without replacement, returned in ascending order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                           std::size_t k,
                                                           Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t remaining = population;
  std::size_t needed = k;
  for (std::size_t i = 0; i < population && needed > 0; ++i, --remaining) {
    if (rng.uniform01() * static_cast<double>(remaining) <
        static_cast<double>(needed)) {
      out.push_back(i);
      --needed;
    }
  }
  return out;
}

}  // namespace rareclass
