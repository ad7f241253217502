#pragma once

#include <cstdint>
#include <random>

namespace dlocker {

// Deterministic random source. mt19937_64 output is fully specified by the
// standard; the derived draws below avoid std distributions, whose results
// are implementation-defined, so traces replay bit-identically everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}
  explicit Rng(std::uint64_t seed, std::uint64_t stream)
      : eng_(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, bound) without modulo bias (rejection sampling).
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % bound;
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dlocker
