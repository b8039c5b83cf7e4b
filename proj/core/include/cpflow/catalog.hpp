#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpflow/constructions.hpp"
#include "cpflow/convex_fn.hpp"
#include "cpflow/types.hpp"

namespace cpflow {

/// 0.5 ||x - a||^2.
class QuadraticFn : public ConvexFn {
 public:
  explicit QuadraticFn(Vec a) : a_(std::move(a)) {}

  int dimension() const override { return static_cast<int>(a_.size()); }
  double value(const Vec& x) const override;
  bool smooth() const override { return true; }
  std::optional<Vec> prox_analytic(const Vec& x, double lambda) const override;
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override;
  std::optional<Mat> hessian_analytic(const Vec& x) const override;
  const Vec& center() const { return a_; }

 private:
  Vec a_;
};

/// <a, x> + b.
class AffineFn : public ConvexFn {
 public:
  AffineFn(Vec a, double b) : a_(std::move(a)), b_(b) {}

  int dimension() const override { return static_cast<int>(a_.size()); }
  double value(const Vec& x) const override;
  bool smooth() const override { return true; }
  std::optional<Vec> prox_analytic(const Vec& x, double lambda) const override;
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override;
  std::optional<Mat> hessian_analytic(const Vec& x) const override;
  const Vec& slope_vector() const { return a_; }

 private:
  Vec a_;
  double b_;
};

/// ||x|| (Euclidean; |x| when d = 1). Prox is the block soft threshold.
class NormFn : public ConvexFn {
 public:
  explicit NormFn(int d) : d_(d) {}

  int dimension() const override { return d_; }
  double value(const Vec& x) const override;
  std::optional<Vec> prox_analytic(const Vec& x, double lambda) const override;
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override;

 private:
  int d_;
};

/// A catalog entry: a function plus the analytic ground truth tests compare
/// against (asymptotic direction, minimal slope, closed-form flow when known).
struct CatalogEntry {
  std::string id;
  std::string summary;
  std::shared_ptr<const ConvexFn> fn;

  Vec cp_direction;                    // analytic projection of 0 on closure(range of subdifferential)
  double min_slope = 0.0;              // inf of the slope = ||cp_direction||
  std::optional<Vec> cp_attained_at;   // point whose minimal subgradient equals cp_direction
  std::function<Vec(const Vec&, double)> exact_flow;  // (x0, t) -> flow point; null if unknown

  Box sample_box;                      // where probes and random starts live
  bool twice_differentiable = false;   // eligible for finite-difference Hessian checks
  double moreau_rate = 0.0;            // bound: ||moreau_gradient(x,l) - min_subgrad(x)|| <= rate * l on the box
  std::function<double(const Vec&)> dist_to_kinks;  // distance to the non-differentiability set; null if none
};

/// Named registry of test functions. `standard()` assembles the fixed suite:
/// quadratic, affine, norm, abs-plus-linear, a second separable sum, Moreau
/// envelopes, the 1-D builder output for phi(s) = 1/(1+s), and the 2-D
/// oscillating-secant construction.
class Catalog {
 public:
  void add(CatalogEntry entry);
  const CatalogEntry& get(const std::string& id) const;
  bool has(const std::string& id) const;
  std::vector<std::string> ids() const;  // insertion order

  static Catalog standard();

 private:
  std::vector<std::string> order_;
  std::map<std::string, CatalogEntry> entries_;
};

/// Entry wrapping a built counterexample; declares cp_direction = 0 (the
/// ideal untruncated object) and records the truncation level in `summary`.
CatalogEntry make_counterexample_entry(const Counterexample2D& ce, std::string id);

}  // namespace cpflow
