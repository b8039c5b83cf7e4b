#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cpflow/types.hpp"

namespace cpflow {

/// Deterministic RNG. Uniform doubles are derived from raw 64-bit draws
/// (never through distribution objects, whose output is implementation
/// defined), so a fixed seed reproduces byte-identical experiment output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vec in_box(const Box& box) {
    Vec x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
    return x;
  }

  /// Unit direction via rejection-free normalization of symmetric uniforms.
  Vec direction(int d) {
    Vec v(d);
    double n = 0.0;
    do {
      for (int i = 0; i < d; ++i) v[i] = uniform(-1.0, 1.0);
      n = v.norm();
    } while (n < 1e-3);
    return v / n;
  }

 private:
  std::mt19937_64 gen_;
};

/// Halton low-discrepancy point, component i uses the i-th prime base.
double halton(std::uint64_t index, int base);

/// `count` low-discrepancy probes filling `box` (deterministic, no RNG).
std::vector<Vec> halton_probes(const Box& box, int count);

}  // namespace cpflow
