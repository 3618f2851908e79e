#pragma once

#include <cmath>
#include <cstdint>

namespace ceff {

/// Counter-based generator keyed by (seed, degree, index): the stream for a
/// net depends only on its key, so generation order does not matter.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t degree, std::uint64_t index, std::uint64_t stream = 0)
      : key_(mix(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) ^ degree) ^ index) ^ (stream * 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t next() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) { return lo * std::exp(std::log(hi / lo) * uniform()); }

  /// Uniform integer in [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
      const std::uint64_t r = next();
      if (r < limit) return r % n;
    }
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ceff
