#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "rabigauge/matrix.hpp"

namespace rabigauge {

// Platform-independent draws from a seeded mt19937_64 (the standard
// distributions are implementation-defined, so they are avoided here).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  cplx complex_normal() { return {normal(), normal()}; }

 private:
  std::mt19937_64 engine_;
};

// Haar-like random unitary via Gram-Schmidt on a complex Gaussian matrix.
ComplexMatrix random_unitary(std::size_t n, Rng& rng);
// U diag(lambda) U^dag
ComplexMatrix planted_hermitian(const ComplexMatrix& u, std::span<const double> lambda);

}  // namespace rabigauge
