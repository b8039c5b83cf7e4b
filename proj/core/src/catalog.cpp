#include "cpflow/catalog.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cpflow {

// ---------------------------------------------------------------------------
// Concrete functions
// ---------------------------------------------------------------------------

double QuadraticFn::value(const Vec& x) const {
  require_dim(x, dimension(), "QuadraticFn::value");
  return 0.5 * (x - a_).squaredNorm();
}

std::optional<Vec> QuadraticFn::prox_analytic(const Vec& x, double lambda) const {
  return Vec((x + lambda * a_) / (1.0 + lambda));
}

std::optional<Vec> QuadraticFn::min_subgrad_analytic(const Vec& x) const {
  return Vec(x - a_);
}

std::optional<Mat> QuadraticFn::hessian_analytic(const Vec& x) const {
  return Mat(Mat::Identity(x.size(), x.size()));
}

double AffineFn::value(const Vec& x) const {
  require_dim(x, dimension(), "AffineFn::value");
  return a_.dot(x) + b_;
}

std::optional<Vec> AffineFn::prox_analytic(const Vec& x, double lambda) const {
  return Vec(x - lambda * a_);
}

std::optional<Vec> AffineFn::min_subgrad_analytic(const Vec&) const { return a_; }

std::optional<Mat> AffineFn::hessian_analytic(const Vec& x) const {
  return Mat(Mat::Zero(x.size(), x.size()));
}

double NormFn::value(const Vec& x) const {
  require_dim(x, d_, "NormFn::value");
  return x.norm();
}

std::optional<Vec> NormFn::prox_analytic(const Vec& x, double lambda) const {
  const double n = x.norm();
  if (n <= lambda) return Vec(Vec::Zero(d_));
  return Vec((1.0 - lambda / n) * x);
}

std::optional<Vec> NormFn::min_subgrad_analytic(const Vec& x) const {
  const double n = x.norm();
  if (n == 0.0) return Vec(Vec::Zero(d_));  // 0 lies in the unit-ball subdifferential
  return Vec(x / n);
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

void Catalog::add(CatalogEntry entry) {
  if (entries_.count(entry.id)) throw std::invalid_argument("Catalog: duplicate id " + entry.id);
  order_.push_back(entry.id);
  entries_.emplace(entry.id, std::move(entry));
}

const CatalogEntry& Catalog::get(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::out_of_range("Catalog: unknown id " + id);
  return it->second;
}

bool Catalog::has(const std::string& id) const { return entries_.count(id) != 0; }

std::vector<std::string> Catalog::ids() const { return order_; }

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}

double shrink(double y, double t) {
  const double m = std::abs(y) - t;
  return m <= 0.0 ? 0.0 : (y < 0.0 ? -m : m);
}

// Steepest-descent path of the radial Huber function with parameter lambda:
// unit radial speed outside radius lambda, exponential decay inside.
Vec huber_flow(const Vec& x0, double lambda, double t) {
  const double n = x0.norm();
  if (n == 0.0) return Vec(Vec::Zero(x0.size()));
  if (n <= lambda) return Vec(std::exp(-t / lambda) * x0);
  const double t_star = n - lambda;
  if (t <= t_star) return Vec((1.0 - t / n) * x0);
  return Vec((lambda * std::exp(-(t - t_star) / lambda) / n) * x0);
}

}  // namespace

Catalog Catalog::standard() {
  Catalog c;

  // -- quadratic ------------------------------------------------------------
  {
    const Vec a = vec2(1.0, -0.5);
    auto fn = std::make_shared<QuadraticFn>(a);
    CatalogEntry e;
    e.id = "quadratic";
    e.summary = "0.5*||x - a||^2 with a = (1, -0.5); flow contracts to a at rate e^{-t}";
    e.fn = fn;
    e.cp_direction = Vec::Zero(2);
    e.min_slope = 0.0;
    e.cp_attained_at = a;
    e.exact_flow = [a](const Vec& x0, double t) { return Vec(a + std::exp(-t) * (x0 - a)); };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = true;
    e.moreau_rate = 5.5;  // sup over the box of ||x - a||, with margin
    c.add(std::move(e));
  }

  // -- affine ---------------------------------------------------------------
  {
    const Vec a = vec2(1.0, 0.0);
    auto fn = std::make_shared<AffineFn>(a, 0.0);
    CatalogEntry e;
    e.id = "affine";
    e.summary = "<a, x> with a = (1, 0); constant-velocity flow, direction attained everywhere";
    e.fn = fn;
    e.cp_direction = a;
    e.min_slope = a.norm();
    e.cp_attained_at = Vec::Zero(2);
    e.exact_flow = [a](const Vec& x0, double t) { return Vec(x0 - t * a); };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = true;
    e.moreau_rate = 0.0;  // envelope gradient is exactly the slope vector
    c.add(std::move(e));
  }

  // -- norm -----------------------------------------------------------------
  {
    auto fn = std::make_shared<NormFn>(2);
    CatalogEntry e;
    e.id = "norm";
    e.summary = "||x||; radial unit-speed flow reaching the minimizer in finite time";
    e.fn = fn;
    e.cp_direction = Vec::Zero(2);
    e.min_slope = 0.0;
    e.cp_attained_at = Vec::Zero(2);
    e.exact_flow = [](const Vec& x0, double t) {
      const double n = x0.norm();
      if (n == 0.0) return Vec(Vec::Zero(x0.size()));
      return Vec(std::max(0.0, 1.0 - t / n) * x0);
    };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = false;
    e.moreau_rate = 0.0;  // exact away from the kink; tests stay outside radius lambda
    e.dist_to_kinks = [](const Vec& x) { return x.norm(); };
    c.add(std::move(e));
  }

  // -- abs plus linear ------------------------------------------------------
  {
    std::vector<std::shared_ptr<const ConvexFn>> blocks;
    blocks.push_back(std::make_shared<AffineFn>(vec1(1.0), 0.0));
    blocks.push_back(std::make_shared<NormFn>(1));
    auto fn = std::make_shared<SeparableSumFn>(std::move(blocks));
    CatalogEntry e;
    e.id = "abs_plus_linear";
    e.summary = "x + |y|; unbounded below with minimal slope 1 attained on the y = 0 axis";
    e.fn = fn;
    e.cp_direction = vec2(1.0, 0.0);
    e.min_slope = 1.0;
    e.cp_attained_at = Vec::Zero(2);
    e.exact_flow = [](const Vec& x0, double t) { return vec2(x0[0] - t, shrink(x0[1], t)); };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = false;
    e.moreau_rate = 0.0;
    e.dist_to_kinks = [](const Vec& x) { return std::abs(x[1]); };
    c.add(std::move(e));
  }

  // -- quadratic plus abs ---------------------------------------------------
  {
    std::vector<std::shared_ptr<const ConvexFn>> blocks;
    blocks.push_back(std::make_shared<QuadraticFn>(vec1(1.0)));
    blocks.push_back(std::make_shared<NormFn>(1));
    auto fn = std::make_shared<SeparableSumFn>(std::move(blocks));
    CatalogEntry e;
    e.id = "quad_abs_sum";
    e.summary = "0.5*(x-1)^2 + |y|; minimized at (1, 0), kink along y = 0";
    e.fn = fn;
    e.cp_direction = Vec::Zero(2);
    e.min_slope = 0.0;
    e.cp_attained_at = vec2(1.0, 0.0);
    e.exact_flow = [](const Vec& x0, double t) {
      return vec2(1.0 + std::exp(-t) * (x0[0] - 1.0), shrink(x0[1], t));
    };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = false;
    e.moreau_rate = 4.5;  // quadratic block: sup |x - 1| over the box, with margin
    e.dist_to_kinks = [](const Vec& x) { return std::abs(x[1]); };
    c.add(std::move(e));
  }

  // -- Moreau envelope of the quadratic --------------------------------------
  {
    const Vec a = vec2(1.0, -0.5);
    const double lam = 0.5;
    auto base = std::make_shared<QuadraticFn>(a);
    auto fn = std::make_shared<MoreauEnvelopeFn>(base, lam);
    CatalogEntry e;
    e.id = "moreau_quadratic";
    e.summary = "Moreau envelope (lambda = 0.5) of 0.5*||x - a||^2; quadratic with curvature 2/3";
    e.fn = fn;
    e.cp_direction = Vec::Zero(2);
    e.min_slope = 0.0;
    e.cp_attained_at = a;
    e.exact_flow = [a, lam](const Vec& x0, double t) {
      return Vec(a + std::exp(-t / (1.0 + lam)) * (x0 - a));
    };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = true;
    e.moreau_rate = 3.0;  // curvature^2 * sup ||x - a||, with margin
    c.add(std::move(e));
  }

  // -- Moreau envelope of the norm -------------------------------------------
  {
    const double lam = 0.5;
    auto base = std::make_shared<NormFn>(2);
    auto fn = std::make_shared<MoreauEnvelopeFn>(base, lam);
    CatalogEntry e;
    e.id = "moreau_norm";
    e.summary = "Moreau envelope (lambda = 0.5) of ||x||: radial Huber function";
    e.fn = fn;
    e.cp_direction = Vec::Zero(2);
    e.min_slope = 0.0;
    e.cp_attained_at = Vec::Zero(2);
    e.exact_flow = [lam](const Vec& x0, double t) { return huber_flow(x0, lam, t); };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = false;  // Hessian jumps across ||x|| = lambda
    e.moreau_rate = 2.5;             // Lipschitz gradient constant 1/lambda, slope <= 1
    c.add(std::move(e));
  }

  // -- Moreau envelope of x + |y| ---------------------------------------------
  {
    const double lam = 0.5;
    std::vector<std::shared_ptr<const ConvexFn>> blocks;
    blocks.push_back(std::make_shared<AffineFn>(vec1(1.0), 0.0));
    blocks.push_back(std::make_shared<NormFn>(1));
    auto base = std::make_shared<SeparableSumFn>(std::move(blocks));
    auto fn = std::make_shared<MoreauEnvelopeFn>(base, lam);
    CatalogEntry e;
    e.id = "moreau_abs_plus_linear";
    e.summary = "Moreau envelope (lambda = 0.5) of x + |y|; smooth, unbounded below, slope -> 1";
    e.fn = fn;
    e.cp_direction = vec2(1.0, 0.0);
    e.min_slope = 1.0;
    e.cp_attained_at = Vec::Zero(2);
    e.exact_flow = [lam](const Vec& x0, double t) {
      const Vec y = huber_flow(vec1(x0[1]), lam, t);
      return vec2(x0[0] - t, y[0]);
    };
    e.sample_box = Box::centered(2, 3.0);
    e.twice_differentiable = false;  // Huber block has a curvature jump
    e.moreau_rate = 3.0;
    c.add(std::move(e));
  }

  // -- 1-D builder output for phi(s) = 1/(1+s) --------------------------------
  {
    const double t_max = 100.0;
    Potential1D pot = build_potential([](double s) { return 1.0 / (1.0 + s); }, t_max);
    auto fn = std::make_shared<PotentialFn>(pot);
    CatalogEntry e;
    e.id = "potential1d";
    e.summary =
        "1-D potential built from the speed profile phi(s) = 1/(1+s) on [0, 100]; "
        "flow speed phi(t) by construction, slope floor 1/101";
    e.fn = fn;
    const double floor_slope = 1.0 / (1.0 + t_max);
    e.cp_direction = vec1(-floor_slope);
    e.min_slope = floor_slope;
    e.cp_attained_at = vec1(pot.valid_range().second);
    e.exact_flow = [pot](const Vec& x0, double t) { return vec1(pot.r(pot.r_inv(x0[0]) + t)); };
    e.sample_box = Box::centered(1, 1.0);
    e.twice_differentiable = true;
    e.moreau_rate = 1.5;  // |Phi''| <= 1 and |Phi'| <= 1 on the box
    c.add(std::move(e));
  }

  // -- 2-D oscillating-secant construction ------------------------------------
  {
    Counterexample2D ce = build_counterexample(alpha_quadratic_exponent(8), 6);
    c.add(make_counterexample_entry(ce, "counterexample2d"));
  }

  return c;
}

CatalogEntry make_counterexample_entry(const Counterexample2D& ce, std::string id) {
  CatalogEntry e;
  e.id = std::move(id);
  const int n = ce.depth;
  const double trunc =
      std::hypot(ce.alpha[static_cast<std::size_t>(n)], ce.alpha[static_cast<std::size_t>(n) + 1]);
  std::ostringstream s;
  s << "2-D separable potential with interleaved speed drops (depth " << n
    << "); flow escapes with oscillating secant directions; ideal object has "
       "minimal slope 0, truncated realization has slope floor about "
    << trunc;
  e.summary = s.str();
  e.fn = ce.fn;
  e.cp_direction = Vec::Zero(2);  // declared for the ideal (untruncated) object
  e.min_slope = 0.0;
  e.cp_attained_at = std::nullopt;
  const Potential1D phi_pot = ce.phi_potential;
  const Potential1D psi_pot = ce.psi_potential;
  e.exact_flow = [phi_pot, psi_pot](const Vec& x0, double t) {
    Vec y(2);
    y[0] = phi_pot.r(phi_pot.r_inv(x0[0]) + t);
    y[1] = psi_pot.r(psi_pot.r_inv(x0[1]) + t);
    return y;
  };
  e.sample_box = Box::centered(2, 1.0);
  e.twice_differentiable = true;  // C^1 profile gives a continuous second derivative
  e.moreau_rate = 25.0;           // |Phi''| bound across the first blend window
  e.dist_to_kinks = nullptr;
  return e;
}

}  // namespace cpflow
