#include "cpflow/rng.hpp"

#include <stdexcept>

namespace cpflow {

double halton(std::uint64_t index, int base) {
  if (base < 2) throw std::invalid_argument("halton: base must be at least 2");
  double result = 0.0;
  double f = 1.0;
  std::uint64_t i = index;
  while (i > 0) {
    f /= base;
    result += f * static_cast<double>(i % base);
    i /= base;
  }
  return result;
}

std::vector<Vec> halton_probes(const Box& box, int count) {
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                    41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
  const int d = box.dim();
  if (d > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
    throw std::invalid_argument("halton_probes: dimension too large for the prime table");
  if (count < 0) throw std::invalid_argument("halton_probes: count must be nonnegative");
  std::vector<Vec> probes;
  probes.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vec x(d);
    for (int j = 0; j < d; ++j) {
      const double u = halton(static_cast<std::uint64_t>(k) + 1, kPrimes[j]);
      x[j] = box.lo[j] + u * (box.hi[j] - box.lo[j]);
    }
    probes.push_back(std::move(x));
  }
  return probes;
}

}  // namespace cpflow
