#pragma once

#include <cstdint>
#include <random>

namespace ipg {

// Deterministic sampling helper. Draws bits from mt19937_64 directly so the
// produced doubles do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }
  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ipg
