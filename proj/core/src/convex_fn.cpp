#include "cpflow/convex_fn.hpp"

#include <algorithm>
#include <cmath>

namespace cpflow {

namespace {

double prox_objective(const ConvexFn& f, const Vec& u, const Vec& x, double lambda) {
  return f.value(u) + (u - x).squaredNorm() / (2.0 * lambda);
}

// Derivative-sign bisection for d = 1: the prox objective is strongly convex,
// so the sign of a central-difference slope brackets the minimizer even when
// f has kinks. A short Newton-style polish tightens the bracket midpoint.
Vec prox_bisect_1d(const ConvexFn& f, const Vec& x, double lambda,
                   const ProxOptions& opts) {
  const double scale = std::max(1.0, std::abs(x[0]));
  auto dP = [&](double u) {
    const double d = opts.fd_step * std::max(1.0, std::abs(u));
    Vec up(1), um(1);
    up[0] = u + d;
    um[0] = u - d;
    return (prox_objective(f, up, x, lambda) - prox_objective(f, um, x, lambda)) / (2.0 * d);
  };

  // Expand a bracket around x until the slope changes sign.
  double w = std::max(1.0, lambda);
  double lo = x[0] - w, hi = x[0] + w;
  int expand = 0;
  while (dP(lo) > 0.0 && expand++ < 200) {
    w *= 2.0;
    lo = x[0] - w;
  }
  expand = 0;
  while (dP(hi) < 0.0 && expand++ < 200) {
    w *= 2.0;
    hi = x[0] + w;
  }
  if (dP(lo) > 0.0 || dP(hi) < 0.0)
    throw ProxSolveError("prox bisection: could not bracket the minimizer", kInf, expand);

  for (int it = 0; it < opts.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-14 * std::max(scale, std::abs(mid))) break;
    const double s = dP(mid);
    if (s > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  Vec u(1);
  u[0] = 0.5 * (lo + hi);
  return u;
}

// Damped Newton with finite-difference derivatives on the strongly convex
// prox objective. The 1/lambda curvature of the quadratic term keeps the
// Hessian positive definite; a Levenberg ridge guards the factorization.
Vec prox_newton(const ConvexFn& f, const Vec& x, double lambda, const ProxOptions& opts) {
  const int d = f.dimension();
  Vec u = x;
  double fu = prox_objective(f, u, x, lambda);
  double resid = kInf;

  auto grad = [&](const Vec& v) {
    Vec g(d);
    for (int i = 0; i < d; ++i) {
      const double h = opts.fd_step * std::max(1.0, std::abs(v[i]));
      Vec vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      g[i] = (prox_objective(f, vp, x, lambda) - prox_objective(f, vm, x, lambda)) / (2.0 * h);
    }
    return g;
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    const Vec g = grad(u);
    resid = g.norm();
    const double scale = std::max({1.0, x.norm(), u.norm()});
    if (resid <= opts.tol * scale / lambda * std::max(1.0, lambda)) return u;

    Mat H(d, d);
    for (int i = 0; i < d; ++i) {
      const double hi = opts.fd_step * std::max(1.0, std::abs(u[i]));
      for (int j = i; j < d; ++j) {
        const double hj = opts.fd_step * std::max(1.0, std::abs(u[j]));
        Vec upp = u, upm = u, ump = u, umm = u;
        upp[i] += hi; upp[j] += hj;
        upm[i] += hi; upm[j] -= hj;
        ump[i] -= hi; ump[j] += hj;
        umm[i] -= hi; umm[j] -= hj;
        const double v = (prox_objective(f, upp, x, lambda) - prox_objective(f, upm, x, lambda) -
                          prox_objective(f, ump, x, lambda) + prox_objective(f, umm, x, lambda)) /
                         (4.0 * hi * hj);
        H(i, j) = v;
        H(j, i) = v;
      }
    }

    double ridge = 0.0;
    Vec step;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::LDLT<Mat> ldlt(H + ridge * Mat::Identity(d, d));
      if (ldlt.info() == Eigen::Success) {
        step = ldlt.solve(-g);
        if (step.allFinite() && g.dot(step) < 0.0) break;
      }
      ridge = (ridge == 0.0) ? 1e-8 : ridge * 10.0;
      step.resize(0);
    }
    if (step.size() == 0) step = -lambda * g;  // gradient fallback

    double t = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = u + t * step;
      const double fc = prox_objective(f, cand, x, lambda);
      if (fc <= fu + 0.25 * t * g.dot(step)) {
        u = cand;
        fu = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }

  const double scale = std::max({1.0, x.norm(), u.norm()});
  if (resid <= 1e-8 * scale) return u;  // accept a looser but serviceable solve
  throw ProxSolveError("prox Newton: residual stayed above tolerance", resid, opts.max_iter);
}

}  // namespace

double eval(const ConvexFn& f, const Vec& x) {
  require_dim(x, f.dimension(), "eval");
  if (!all_finite(x)) throw std::invalid_argument("eval: point has non-finite coordinates");
  return f.value(x);
}

Vec prox_point(const ConvexFn& f, const Vec& x, double lambda, const ProxOptions& opts) {
  require_dim(x, f.dimension(), "prox_point");
  if (!(lambda > 0.0)) throw std::invalid_argument("prox_point: lambda must be positive");
  if (!all_finite(x)) throw std::invalid_argument("prox_point: point has non-finite coordinates");
  if (auto p = f.prox_analytic(x, lambda)) return *p;
  if (f.dimension() == 1) return prox_bisect_1d(f, x, lambda, opts);
  return prox_newton(f, x, lambda, opts);
}

Vec moreau_gradient(const ConvexFn& f, const Vec& x, double lambda, const ProxOptions& opts) {
  return (x - prox_point(f, x, lambda, opts)) / lambda;
}

Vec min_norm_subgrad(const ConvexFn& f, const Vec& x, const SubgradOptions& opts) {
  require_dim(x, f.dimension(), "min_norm_subgrad");
  if (!opts.force_numeric) {
    if (auto g = f.min_subgrad_analytic(x)) return *g;
  }
  // Moreau-Yosida limit: the envelope gradient converges to the minimal
  // subgradient as lambda -> 0; stop when two refinements agree.
  double lambda = opts.lambda0;
  Vec prev = moreau_gradient(f, x, lambda);
  double gap = kInf;
  while (lambda > opts.lambda_min) {
    lambda *= 0.1;
    Vec cur = moreau_gradient(f, x, lambda);
    gap = (cur - prev).norm();
    if (gap < opts.tol_grad) return cur;
    prev = std::move(cur);
  }
  throw SubgradRefineError(
      "min_norm_subgrad: refinement did not settle (x likely outside the subdifferential domain)",
      gap);
}

Vec fd_gradient(const ConvexFn& f, const Vec& x, double h) {
  require_dim(x, f.dimension(), "fd_gradient");
  const int d = f.dimension();
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f.value(xp) - f.value(xm)) / (2.0 * h);
  }
  return g;
}

Mat fd_hessian(const ConvexFn& f, const Vec& x, double h) {
  require_dim(x, f.dimension(), "fd_hessian");
  if (!(h > 0.0)) throw std::invalid_argument("fd_hessian: step must be positive");
  const int d = f.dimension();
  Mat H(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Vec xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      const double v =
          (f.value(xpp) - f.value(xpm) - f.value(xmp) + f.value(xmm)) / (4.0 * h * h);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return 0.5 * (H + H.transpose());
}

// --------------------------------------------------------------------------
// SeparableSumFn
// --------------------------------------------------------------------------

SeparableSumFn::SeparableSumFn(std::vector<std::shared_ptr<const ConvexFn>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("SeparableSumFn: needs at least one block");
  offsets_.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    offsets_.push_back(dim_);
    dim_ += b->dimension();
  }
}

double SeparableSumFn::value(const Vec& x) const {
  double v = 0.0;
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    v += blocks_[k]->value(x.segment(offsets_[k], blocks_[k]->dimension()));
  return v;
}

bool SeparableSumFn::in_domain(const Vec& x) const {
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    if (!blocks_[k]->in_domain(x.segment(offsets_[k], blocks_[k]->dimension()))) return false;
  return true;
}

bool SeparableSumFn::smooth() const {
  for (const auto& b : blocks_)
    if (!b->smooth()) return false;
  return true;
}

std::optional<Vec> SeparableSumFn::prox_analytic(const Vec& x, double lambda) const {
  // Blockwise prox; numeric block solves are exact to solver tolerance, so
  // the assembled map is still a faithful prox.
  Vec u(dim_);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const int d = blocks_[k]->dimension();
    u.segment(offsets_[k], d) = prox_point(*blocks_[k], x.segment(offsets_[k], d), lambda);
  }
  return u;
}

std::optional<Vec> SeparableSumFn::min_subgrad_analytic(const Vec& x) const {
  Vec g(dim_);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const int d = blocks_[k]->dimension();
    auto gb = blocks_[k]->min_subgrad_analytic(x.segment(offsets_[k], d));
    if (!gb) return std::nullopt;
    g.segment(offsets_[k], d) = *gb;
  }
  return g;
}

std::optional<Mat> SeparableSumFn::hessian_analytic(const Vec& x) const {
  Mat H = Mat::Zero(dim_, dim_);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const int d = blocks_[k]->dimension();
    auto Hb = blocks_[k]->hessian_analytic(x.segment(offsets_[k], d));
    if (!Hb) return std::nullopt;
    H.block(offsets_[k], offsets_[k], d, d) = *Hb;
  }
  return H;
}

// --------------------------------------------------------------------------
// MoreauEnvelopeFn
// --------------------------------------------------------------------------

MoreauEnvelopeFn::MoreauEnvelopeFn(std::shared_ptr<const ConvexFn> base, double lambda)
    : base_(std::move(base)), lambda_(lambda) {
  if (!(lambda_ > 0.0)) throw std::invalid_argument("MoreauEnvelopeFn: lambda must be positive");
}

double MoreauEnvelopeFn::value(const Vec& x) const {
  const Vec p = prox_point(*base_, x, lambda_);
  return base_->value(p) + (x - p).squaredNorm() / (2.0 * lambda_);
}

std::optional<Vec> MoreauEnvelopeFn::prox_analytic(const Vec& x, double mu) const {
  // Joint minimization over (u, w) of f(w) + |w-u|^2/(2l) + |u-x|^2/(2m)
  // collapses to a base prox at parameter l+m:
  //   w* = prox_f(x, l+m),  u* = (l x + m w*) / (l + m).
  const Vec w = prox_point(*base_, x, lambda_ + mu);
  return Vec((lambda_ * x + mu * w) / (lambda_ + mu));
}

std::optional<Vec> MoreauEnvelopeFn::min_subgrad_analytic(const Vec& x) const {
  return Vec((x - prox_point(*base_, x, lambda_)) / lambda_);
}

}  // namespace cpflow
