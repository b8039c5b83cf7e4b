#include "cpflow/constructions.hpp"

#include <algorithm>
#include <cmath>

#include "cpflow/csv.hpp"

namespace cpflow {

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

double blend(double a, double b, double c, double t) {
  return a + (b - a) * smoothstep(t - c);
}

namespace {

// Exact antiderivatives of the smoothstep and its square on [0, x], x in [0,1].
double smoothstep_int(double x) { return x * x * x - 0.5 * x * x * x * x; }
double smoothstep_sq_int(double x) {
  const double x5 = x * x * x * x * x;
  return 1.8 * x5 - 2.0 * x5 * x + (4.0 / 7.0) * x5 * x * x;
}

// Integrals of the blend a -> b over local coordinate [0, x], x in [0,1].
double blend_int(double a, double b, double x) {
  return a * x + (b - a) * smoothstep_int(x);
}
double blend_sq_int(double a, double b, double x) {
  const double d = b - a;
  return a * a * x + 2.0 * a * d * smoothstep_int(x) + d * d * smoothstep_sq_int(x);
}

}  // namespace

// ---------------------------------------------------------------------------
// SpeedProfile
// ---------------------------------------------------------------------------

SpeedProfile::SpeedProfile(double initial_level, std::vector<Drop> drops, double horizon)
    : initial_level_(initial_level), drops_(std::move(drops)), horizon_(horizon) {
  if (!(initial_level_ > 0.0))
    throw std::invalid_argument("SpeedProfile: initial level must be positive");
  double level = initial_level_;
  double prev_end = 0.0;
  for (const auto& d : drops_) {
    if (!(d.t >= prev_end))
      throw std::invalid_argument("SpeedProfile: drops must leave room for blend windows");
    if (d.from != level)
      throw std::invalid_argument("SpeedProfile: drop does not start at the current level");
    if (!(d.to > 0.0) || !(d.to < d.from))
      throw std::invalid_argument("SpeedProfile: drops must strictly decrease to a positive level");
    level = d.to;
    prev_end = d.t + 1.0;
  }
  if (!(horizon_ >= prev_end))
    throw std::invalid_argument("SpeedProfile: horizon must cover the last blend window");

  // Segment boundaries: 0, (t, t+1) per drop, horizon. Blend windows have
  // unit width by construction; at breakpoints beyond 2^53 the window is
  // narrower than one ulp and degenerates to a step pointwise, while the
  // closed-form integral bookkeeping below stays exact.
  bounds_.push_back(0.0);
  for (const auto& d : drops_) {
    bounds_.push_back(d.t);
    bounds_.push_back(d.t + 1.0);
  }
  bounds_.push_back(horizon_);

  nodes_.resize(bounds_.size());
  nodes_[0] = {0.0, 0.0, 0.0};
  for (std::size_t s = 0; s + 1 < bounds_.size(); ++s) {
    const double len = bounds_[s + 1] - bounds_[s];
    double di1 = 0.0, di2 = 0.0;
    if (s % 2 == 1) {  // blend segment for drop (s-1)/2; unit width exactly
      const auto& d = drops_[(s - 1) / 2];
      di1 = blend_int(d.from, d.to, 1.0);
      di2 = blend_sq_int(d.from, d.to, 1.0);
    } else {  // plateau
      const double lv = (s == 0) ? initial_level_ : drops_[s / 2 - 1].to;
      di1 = lv * len;
      di2 = lv * lv * len;
    }
    nodes_[s + 1] = {bounds_[s + 1], nodes_[s].i1 + di1, nodes_[s].i2 + di2};
  }
}

double SpeedProfile::final_level() const {
  return drops_.empty() ? initial_level_ : drops_.back().to;
}

int SpeedProfile::segment_of(double t) const {
  // Largest s with bounds_[s] <= t; empty (degenerate) segments are skipped
  // naturally because upper_bound lands past both equal boundaries.
  auto it = std::upper_bound(bounds_.begin(), bounds_.end(), t);
  int s = static_cast<int>(it - bounds_.begin()) - 1;
  return std::clamp(s, 0, static_cast<int>(bounds_.size()) - 2);
}

double SpeedProfile::phi(double t) const {
  if (t <= 0.0) return initial_level_;
  if (t >= horizon_) return final_level();
  const int s = segment_of(t);
  if (s % 2 == 1) {
    const auto& d = drops_[(s - 1) / 2];
    return blend(d.from, d.to, d.t, t);
  }
  return (s == 0) ? initial_level_ : drops_[s / 2 - 1].to;
}

double SpeedProfile::dphi(double t) const {
  if (t <= 0.0 || t >= horizon_) return 0.0;
  const int s = segment_of(t);
  if (s % 2 != 1) return 0.0;
  const auto& d = drops_[(s - 1) / 2];
  const double x = std::clamp(t - d.t, 0.0, 1.0);
  return (d.to - d.from) * 6.0 * x * (1.0 - x);
}

double SpeedProfile::int_phi(double t) const {
  if (t <= 0.0) return initial_level_ * t;
  if (t >= horizon_) return nodes_.back().i1 + final_level() * (t - horizon_);
  const int s = segment_of(t);
  const double x = t - bounds_[s];
  if (s % 2 == 1) {
    const auto& d = drops_[(s - 1) / 2];
    return nodes_[s].i1 + blend_int(d.from, d.to, std::clamp(x, 0.0, 1.0));
  }
  const double lv = (s == 0) ? initial_level_ : drops_[s / 2 - 1].to;
  return nodes_[s].i1 + lv * x;
}

double SpeedProfile::int_phi_sq(double t) const {
  if (t <= 0.0) return initial_level_ * initial_level_ * t;
  if (t >= horizon_) {
    const double lv = final_level();
    return nodes_.back().i2 + lv * lv * (t - horizon_);
  }
  const int s = segment_of(t);
  const double x = t - bounds_[s];
  if (s % 2 == 1) {
    const auto& d = drops_[(s - 1) / 2];
    return nodes_[s].i2 + blend_sq_int(d.from, d.to, std::clamp(x, 0.0, 1.0));
  }
  const double lv = (s == 0) ? initial_level_ : drops_[s / 2 - 1].to;
  return nodes_[s].i2 + lv * lv * x;
}

double SpeedProfile::inv_int_phi(double u) const {
  if (u <= 0.0) return u / initial_level_;
  const double total = nodes_.back().i1;
  if (u >= total) return horizon_ + (u - total) / final_level();

  // Locate the segment whose accumulated integral brackets u.
  int lo = 0, hi = static_cast<int>(nodes_.size()) - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (nodes_[mid].i1 <= u)
      lo = mid;
    else
      hi = mid;
  }
  const int s = lo;
  const double rem = u - nodes_[s].i1;
  if (s % 2 == 0) {  // plateau: linear, exact
    const double lv = (s == 0) ? initial_level_ : drops_[s / 2 - 1].to;
    return bounds_[s] + rem / lv;
  }
  // Blend: solve blend_int(a, b, x) = rem on x in [0, 1]; the integrand is
  // positive so the map is strictly increasing.
  const auto& d = drops_[(s - 1) / 2];
  double xlo = 0.0, xhi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double xm = 0.5 * (xlo + xhi);
    if (blend_int(d.from, d.to, xm) <= rem)
      xlo = xm;
    else
      xhi = xm;
  }
  return bounds_[s] + 0.5 * (xlo + xhi);
}

// ---------------------------------------------------------------------------
// GridPhi
// ---------------------------------------------------------------------------

GridPhi::GridPhi(std::function<double(double)> phi, double t_max, int nodes)
    : f_(std::move(phi)), t_max_(t_max) {
  if (!(t_max_ > 0.0)) throw std::invalid_argument("GridPhi: t_max must be positive");
  if (nodes < 8) throw std::invalid_argument("GridPhi: too few grid nodes");
  const int cells = nodes - 1;
  h_ = t_max_ / cells;
  i1_.resize(nodes);
  i2_.resize(nodes);
  i1_[0] = 0.0;
  i2_[0] = 0.0;
  double fl = f_(0.0);
  if (!(fl > 0.0)) throw std::invalid_argument("GridPhi: phi must be positive");
  for (int i = 0; i < cells; ++i) {
    const double t0 = i * h_, t1 = (i + 1) * h_;
    const double fm = f_(0.5 * (t0 + t1));
    const double fr = f_(t1);
    if (!(fr > 0.0)) throw std::invalid_argument("GridPhi: phi must be positive");
    if (fr > fl + 1e-12 * std::max(1.0, fl))
      throw std::invalid_argument("GridPhi: phi must be nonincreasing");
    i1_[i + 1] = i1_[i] + h_ / 6.0 * (fl + 4.0 * fm + fr);
    i2_[i + 1] = i2_[i] + h_ / 6.0 * (fl * fl + 4.0 * fm * fm + fr * fr);
    fl = fr;
  }
}

double GridPhi::phi(double t) const {
  if (t <= 0.0) return f_(0.0);
  if (t >= t_max_) return f_(t_max_);
  return f_(t);
}

double GridPhi::dphi(double t) const {
  const double d = 1e-6 * std::max(1.0, std::abs(t));
  return (phi(t + d) - phi(t - d)) / (2.0 * d);
}

double GridPhi::int_phi(double t) const {
  if (t <= 0.0) return f_(0.0) * t;
  if (t >= t_max_) return i1_.back() + f_(t_max_) * (t - t_max_);
  const int i = std::min(static_cast<int>(t / h_), static_cast<int>(i1_.size()) - 2);
  const double t0 = i * h_;
  const double w = t - t0;
  if (w <= 0.0) return i1_[i];
  return i1_[i] + w / 6.0 * (f_(t0) + 4.0 * f_(t0 + 0.5 * w) + f_(t));
}

double GridPhi::int_phi_sq(double t) const {
  if (t <= 0.0) {
    const double f0 = f_(0.0);
    return f0 * f0 * t;
  }
  if (t >= t_max_) {
    const double fe = f_(t_max_);
    return i2_.back() + fe * fe * (t - t_max_);
  }
  const int i = std::min(static_cast<int>(t / h_), static_cast<int>(i2_.size()) - 2);
  const double t0 = i * h_;
  const double w = t - t0;
  if (w <= 0.0) return i2_[i];
  const double fa = f_(t0), fm = f_(t0 + 0.5 * w), fb = f_(t);
  return i2_[i] + w / 6.0 * (fa * fa + 4.0 * fm * fm + fb * fb);
}

double GridPhi::inv_int_phi(double u) const {
  if (u <= 0.0) return u / f_(0.0);
  if (u >= i1_.back()) return t_max_ + (u - i1_.back()) / f_(t_max_);
  // Bracket by grid cell, then Newton with derivative phi (monotonicity
  // keeps the bracket valid; bisection guards each step).
  int lo = 0, hi = static_cast<int>(i1_.size()) - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (i1_[mid] <= u)
      lo = mid;
    else
      hi = mid;
  }
  double tlo = lo * h_, thi = hi * h_;
  double t = tlo + (u - i1_[lo]) / std::max(f_(tlo), 1e-300);
  t = std::clamp(t, tlo, thi);
  for (int it = 0; it < 60; ++it) {
    const double g = int_phi(t) - u;
    if (std::abs(g) <= 1e-15 * std::max(1.0, std::abs(u))) break;
    if (g > 0.0)
      thi = t;
    else
      tlo = t;
    const double step = g / std::max(phi(t), 1e-300);
    double tn = t - step;
    if (!(tn > tlo) || !(tn < thi)) tn = 0.5 * (tlo + thi);
    if (std::abs(tn - t) <= 1e-16 * std::max(1.0, std::abs(t))) {
      t = tn;
      break;
    }
    t = tn;
  }
  return t;
}

// ---------------------------------------------------------------------------
// PotentialFn
// ---------------------------------------------------------------------------

double PotentialFn::value(const Vec& x) const {
  require_dim(x, 1, "PotentialFn::value");
  return pot_.value(x[0]);
}

std::optional<Vec> PotentialFn::prox_analytic(const Vec& x, double lambda) const {
  // Optimality: u + lambda Phi'(u) = x with Phi' = -phi(r^{-1}(u)), i.e.
  // u = x + lambda * phi(r^{-1}(u)). The left side grows strictly faster, so
  // the root is unique; phi nonincreasing gives the bracket below.
  const double x0 = x[0];
  auto F = [&](double u) { return u + lambda * pot_.derivative(u) - x0; };
  double lo = x0;
  double hi = x0 + lambda * (-pot_.derivative(x0));
  if (hi <= lo) hi = lo + 1e-300;
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fu = F(u);
    const double scale = std::max({1.0, std::abs(x0), std::abs(u)});
    if (std::abs(fu) <= 1e-14 * scale) break;
    if (fu > 0.0)
      hi = u;
    else
      lo = u;
    const double curv = std::max(pot_.second_derivative(u), 0.0);
    double un = u - fu / (1.0 + lambda * curv);
    if (!(un > lo) || !(un < hi)) un = 0.5 * (lo + hi);
    if (un == u) break;
    u = un;
  }
  Vec out(1);
  out[0] = u;
  return out;
}

std::optional<Vec> PotentialFn::min_subgrad_analytic(const Vec& x) const {
  Vec g(1);
  g[0] = pot_.derivative(x[0]);
  return g;
}

std::optional<Mat> PotentialFn::hessian_analytic(const Vec& x) const {
  Mat H(1, 1);
  H(0, 0) = pot_.second_derivative(x[0]);
  return H;
}

Potential1D build_potential(const SpeedProfile& profile) {
  return Potential1D(std::make_shared<SpeedProfile>(profile));
}

Potential1D build_potential(std::function<double(double)> phi, double t_max,
                            const PotentialBuildOptions& opts) {
  return Potential1D(std::make_shared<GridPhi>(std::move(phi), t_max, opts.grid_nodes));
}

// ---------------------------------------------------------------------------
// build_profile / build_counterexample
// ---------------------------------------------------------------------------

namespace {

SpeedProfile partial_profile(double initial, const std::vector<SpeedProfile::Drop>& drops,
                             double min_horizon) {
  double h = min_horizon;
  if (!drops.empty()) h = std::max(h, drops.back().t + 1.0);
  return SpeedProfile(initial, drops, h);
}

}  // namespace

ProfilePair build_profile(const std::vector<double>& alpha, int n_max, double t_budget) {
  if (n_max < 1)
    throw std::invalid_argument("build_profile: need at least two plateaus (n_max >= 1)");
  if (static_cast<int>(alpha.size()) < n_max + 2)
    throw std::invalid_argument("build_profile: alpha needs n_max + 2 levels");
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0))
      throw std::invalid_argument("build_profile: alpha levels must be positive");
    if (i > 0 && !(alpha[i] < alpha[i - 1]))
      throw std::invalid_argument("build_profile: alpha must be strictly decreasing");
  }

  std::vector<SpeedProfile::Drop> phi_drops, psi_drops;
  std::vector<ScheduleRow> rows;
  double t_prev = 0.0;

  for (int n = 1; n <= n_max + 1; ++n) {
    // Integral ratio with the fresh plateau in the denominator; orientation
    // alternates with the coordinate that dropped last.
    auto ratio_at = [&](double t) {
      const SpeedProfile p = partial_profile(alpha[0], phi_drops, t);
      const SpeedProfile q = partial_profile(alpha[1], psi_drops, t);
      const double iphi = p.int_phi(t);
      const double ipsi = q.int_phi(t);
      return (n % 2 == 1) ? iphi / ipsi : ipsi / iphi;
    };
    const double target = alpha[n - 1] / alpha[n];

    // Unit-mass condition: the plateau at level alpha[n] ending at t_n needs
    // integral at least 1. The first plateau starts at 0, later ones one
    // blend window after the previous breakpoint.
    double lower = (n == 1) ? 1.0 / alpha[1] : t_prev + 1.0 + 1.0 / alpha[n];

    double t_n;
    if (ratio_at(lower) >= 0.5 * target) {
      t_n = lower;
    } else {
      // The ratio increases monotonically toward `target` once the fresh
      // plateau dominates, so doubling must eventually cross target/2.
      double lo = lower, hi = lower;
      bool crossed = false;
      for (int it = 0; it < 400; ++it) {
        hi = std::max(hi * 2.0, lower + 1.0);
        if (ratio_at(hi) >= 0.5 * target) {
          crossed = true;
          break;
        }
        if (hi > t_budget)
          throw ScheduleOverflowError(
              "build_profile: breakpoint " + std::to_string(n) + " exceeds the time budget", hi);
      }
      if (!crossed)
        throw ScheduleOverflowError("build_profile: ratio condition unreachable", hi);
      for (int it = 0; it < 200 && (hi - lo) > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ratio_at(mid) >= 0.5 * target)
          hi = mid;
        else
          lo = mid;
      }
      t_n = std::max(lower, hi);
    }
    if (t_n > t_budget)
      throw ScheduleOverflowError(
          "build_profile: breakpoint " + std::to_string(n) + " exceeds the time budget", t_n);

    rows.push_back({n, alpha[n], t_n, ratio_at(t_n), target});

    if (n <= n_max) {  // the closing breakpoint has no drop
      SpeedProfile::Drop d{t_n, alpha[n - 1], alpha[n + 1]};
      if (n % 2 == 1)
        phi_drops.push_back(d);
      else
        psi_drops.push_back(d);
    }
    t_prev = t_n;
  }

  const double horizon = rows.back().t_n;
  return ProfilePair{SpeedProfile(alpha[0], phi_drops, horizon),
                     SpeedProfile(alpha[1], psi_drops, horizon), std::move(rows), horizon};
}

Counterexample2D build_counterexample(const std::vector<double>& alpha, int n_max,
                                      double t_budget) {
  ProfilePair pair = build_profile(alpha, n_max, t_budget);
  Potential1D phi_pot = build_potential(pair.phi);
  Potential1D psi_pot = build_potential(pair.psi);

  std::vector<std::shared_ptr<const ConvexFn>> blocks;
  blocks.push_back(std::make_shared<PotentialFn>(phi_pot));
  blocks.push_back(std::make_shared<PotentialFn>(psi_pot));
  auto fn = std::make_shared<SeparableSumFn>(std::move(blocks));

  return Counterexample2D{std::move(phi_pot), std::move(psi_pot), std::move(fn),
                          std::move(pair.schedule), alpha, pair.horizon, n_max};
}

std::vector<double> alpha_quadratic_exponent(int count) {
  std::vector<double> a(count);
  for (int n = 0; n < count; ++n) a[n] = std::exp2(-static_cast<double>(n) * n);
  return a;
}

std::vector<double> alpha_geometric(double ratio, int count) {
  if (!(ratio > 1.0)) throw std::invalid_argument("alpha_geometric: ratio must exceed 1");
  std::vector<double> a(count);
  double v = 1.0;
  for (int n = 0; n < count; ++n) {
    a[n] = v;
    v /= ratio;
  }
  return a;
}

void write_schedule_csv(const std::filesystem::path& path,
                        const std::vector<ScheduleRow>& schedule) {
  CsvWriter w(path);
  w.header({"n", "alpha", "t_n", "ratio_achieved", "ratio_target"});
  for (const auto& r : schedule)
    w.row({static_cast<double>(r.n), r.alpha, r.t_n, r.ratio_achieved, r.ratio_target});
}

}  // namespace cpflow
