#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cpflow/types.hpp"

namespace cpflow {

/// A proper convex function on R^d. Instances are immutable after
/// construction and safe to share across threads.
///
/// Analytic pieces (prox, minimal-norm subgradient, Hessian) are optional;
/// the free operations below route through them when present and fall back
/// to numeric solvers otherwise.
class ConvexFn {
 public:
  virtual ~ConvexFn() = default;

  virtual int dimension() const = 0;

  /// Extended-real value; +inf only outside the declared domain.
  virtual double value(const Vec& x) const = 0;

  virtual bool in_domain(const Vec& /*x*/) const { return true; }

  /// True when a gradient exists everywhere (the subdifferential is a
  /// singleton at every point).
  virtual bool smooth() const { return false; }

  /// argmin_u f(u) + ||u - x||^2 / (2 lambda), when known in closed form
  /// (or via an exact 1-D monotone solve owned by the instance).
  virtual std::optional<Vec> prox_analytic(const Vec& /*x*/, double /*lambda*/) const {
    return std::nullopt;
  }

  /// Projection of 0 onto the subdifferential at x, when known.
  virtual std::optional<Vec> min_subgrad_analytic(const Vec& /*x*/) const {
    return std::nullopt;
  }

  virtual std::optional<Mat> hessian_analytic(const Vec& /*x*/) const {
    return std::nullopt;
  }
};

struct ProxOptions {
  double tol = 1e-13;   // residual tolerance, relative to max(1, |x|, |u|)
  int max_iter = 300;
  double fd_step = 1e-7;  // finite-difference step for the numeric fallbacks
};

struct SubgradOptions {
  double tol_grad = 1e-6;     // stop when successive Moreau gradients differ less
  double lambda0 = 1e-1;      // first smoothing parameter of the refinement
  double lambda_min = 1e-11;  // refinement floor; reaching it means no convergence
  bool force_numeric = false; // ignore analytic subgradients (used by tests)
};

/// Raised when a numeric prox solve exhausts its budget; carries the last
/// optimality residual so callers can report it.
class ProxSolveError : public std::runtime_error {
 public:
  ProxSolveError(const std::string& msg, double residual, int iterations)
      : std::runtime_error(msg), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

/// Raised when the Moreau-Yosida refinement fails to settle; the usual cause
/// is a point outside dom(subdifferential), where the slope may be +inf.
class SubgradRefineError : public std::runtime_error {
 public:
  SubgradRefineError(const std::string& msg, double last_gap)
      : std::runtime_error(msg), last_gap(last_gap) {}
  double last_gap;
};

/// f(x), with a dimension check. Infinite values are legal (outside domain).
double eval(const ConvexFn& f, const Vec& x);

/// Proximal point: argmin_u f(u) + ||u - x||^2/(2 lambda). Uses the analytic
/// prox when available; otherwise derivative-sign bisection (d = 1) or damped
/// Newton with finite-difference derivatives (d >= 2) on the strongly convex
/// prox objective. Throws ProxSolveError if the solver budget is exhausted.
Vec prox_point(const ConvexFn& f, const Vec& x, double lambda,
               const ProxOptions& opts = {});

/// Gradient of the Moreau envelope: (x - prox_point(x, lambda)) / lambda.
Vec moreau_gradient(const ConvexFn& f, const Vec& x, double lambda,
                    const ProxOptions& opts = {});

/// Minimal-norm subgradient. Analytic when the instance provides it, else a
/// Moreau-Yosida limit: moreau_gradient with decreasing lambda until two
/// successive estimates differ by less than opts.tol_grad.
Vec min_norm_subgrad(const ConvexFn& f, const Vec& x,
                     const SubgradOptions& opts = {});

/// Symmetrized central-difference Hessian with step h. Only meaningful where
/// f is twice differentiable; callers pick points accordingly.
Mat fd_hessian(const ConvexFn& f, const Vec& x, double h);

/// Central-difference gradient with step h (used by numeric fallbacks and by
/// the determination cross-checks).
Vec fd_gradient(const ConvexFn& f, const Vec& x, double h);

// ---------------------------------------------------------------------------
// Combinators
// ---------------------------------------------------------------------------

/// f + c. The prox map and subgradients of an additive shift are those of f.
class OffsetFn : public ConvexFn {
 public:
  OffsetFn(std::shared_ptr<const ConvexFn> base, double offset)
      : base_(std::move(base)), offset_(offset) {}

  int dimension() const override { return base_->dimension(); }
  double value(const Vec& x) const override { return base_->value(x) + offset_; }
  bool in_domain(const Vec& x) const override { return base_->in_domain(x); }
  bool smooth() const override { return base_->smooth(); }
  std::optional<Vec> prox_analytic(const Vec& x, double lambda) const override {
    return base_->prox_analytic(x, lambda);
  }
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override {
    return base_->min_subgrad_analytic(x);
  }
  std::optional<Mat> hessian_analytic(const Vec& x) const override {
    return base_->hessian_analytic(x);
  }
  const ConvexFn& base() const { return *base_; }
  double offset() const { return offset_; }

 private:
  std::shared_ptr<const ConvexFn> base_;
  double offset_;
};

/// f(x) = sum_i f_i(x_i) over consecutive coordinate blocks. Value, prox,
/// subgradients and Hessians all decompose blockwise.
class SeparableSumFn : public ConvexFn {
 public:
  explicit SeparableSumFn(std::vector<std::shared_ptr<const ConvexFn>> blocks);

  int dimension() const override { return dim_; }
  double value(const Vec& x) const override;
  bool in_domain(const Vec& x) const override;
  bool smooth() const override;
  std::optional<Vec> prox_analytic(const Vec& x, double lambda) const override;
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override;
  std::optional<Mat> hessian_analytic(const Vec& x) const override;

  const std::vector<std::shared_ptr<const ConvexFn>>& blocks() const { return blocks_; }

 private:
  std::vector<std::shared_ptr<const ConvexFn>> blocks_;
  std::vector<int> offsets_;  // start index of each block
  int dim_ = 0;
};

/// Moreau envelope f_lambda(x) = min_u f(u) + ||u - x||^2/(2 lambda).
/// C^{1,1} regardless of f; gradient (x - prox_f(x, lambda))/lambda.
/// Its own prox reduces to a prox of the base at parameter lambda + mu.
class MoreauEnvelopeFn : public ConvexFn {
 public:
  MoreauEnvelopeFn(std::shared_ptr<const ConvexFn> base, double lambda);

  int dimension() const override { return base_->dimension(); }
  double value(const Vec& x) const override;
  bool smooth() const override { return true; }
  std::optional<Vec> prox_analytic(const Vec& x, double mu) const override;
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override;

  double lambda() const { return lambda_; }
  const ConvexFn& base() const { return *base_; }

 private:
  std::shared_ptr<const ConvexFn> base_;
  double lambda_;
};

}  // namespace cpflow
