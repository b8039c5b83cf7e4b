#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace cpflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Axis-aligned box; used for probe sampling and per-function sampling ranges.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x) const {
    if (x.size() != lo.size()) return false;
    for (int i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  static Box centered(int d, double half_width) {
    Box b;
    b.lo = Vec::Constant(d, -half_width);
    b.hi = Vec::Constant(d, half_width);
    return b;
  }
};

/// Shared tolerance knobs. Field defaults are the documented contract values;
/// callers override per experiment, never silently.
struct Tolerances {
  double grad = 1e-6;        // Moreau-Yosida refinement stop (tol_grad)
  double cp = 1e-3;          // direction-estimate agreement (tol_cp)
  double slope_eq = 1e-5;    // slope-audit mismatch threshold (eps_slope)
  double constant = 1e-6;    // constancy spread threshold (eps_const)
  double mono = 1e-8;        // monotone-speed slack (eps_mono)
  double contraction = 1e-8; // distance-gap slack for flow pairs
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require_dim(const Vec& x, int d, const char* what) {
  if (static_cast<int>(x.size()) != d)
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(d) +
                         ", got " + std::to_string(x.size()));
}

}  // namespace cpflow
