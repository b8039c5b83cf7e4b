#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cpflow/convex_fn.hpp"
#include "cpflow/types.hpp"

namespace cpflow {

/// C^1 monotone ramp on [0,1]: s(x) = x^2 (3 - 2x), s(0)=0, s(1)=1, s'(0)=s'(1)=0.
double smoothstep(double x);

/// Value at t of the C^1 interpolation from a (at t = c) to b (at t = c+1).
/// Outside the window it clamps to the endpoint values.
double blend(double a, double b, double c, double t);

class ScheduleOverflowError : public std::runtime_error {
 public:
  ScheduleOverflowError(const std::string& msg, double t_reached)
      : std::runtime_error(msg), t_reached(t_reached) {}
  double t_reached;
};

/// Speed source for the 1-D potential builder: a positive nonincreasing
/// profile phi with exact prefix integrals of phi and phi^2 and an exact
/// inverse of r(t) = int_0^t phi. Extended by constants on both sides:
/// phi(t) = phi(start) for t < start and phi(t) = phi(end) for t > end.
class PhiBackend {
 public:
  virtual ~PhiBackend() = default;
  virtual double phi(double t) const = 0;
  virtual double dphi(double t) const = 0;
  virtual double int_phi(double t) const = 0;      // r(t) = int_0^t phi
  virtual double int_phi_sq(double t) const = 0;   // int_0^t phi^2
  virtual double inv_int_phi(double u) const = 0;  // r^{-1}(u)
  /// The range over which phi was explicitly specified; constants outside.
  virtual std::pair<double, double> core_range() const = 0;
};

/// Piecewise plateau/blend speed profile. Plateaus have arbitrary length;
/// blend windows have unit width and interpolate with smoothstep, so the
/// profile is C^1 and nonincreasing. All integrals are closed-form per
/// segment, which keeps them exact even when breakpoints exceed 2^53 and the
/// unit blend window is narrower than one ulp (the window then degenerates
/// to a step pointwise; integral bookkeeping is unaffected).
class SpeedProfile : public PhiBackend {
 public:
  /// A drop event: at time t the profile leaves level `from` and reaches
  /// `to` at time t + 1 through a smoothstep blend.
  struct Drop {
    double t;
    double from;
    double to;
  };

  SpeedProfile(double initial_level, std::vector<Drop> drops, double horizon);

  double phi(double t) const override;
  double dphi(double t) const override;
  double int_phi(double t) const override;
  double int_phi_sq(double t) const override;
  double inv_int_phi(double u) const override;
  std::pair<double, double> core_range() const override { return {0.0, horizon_}; }

  double horizon() const { return horizon_; }
  double final_level() const;
  const std::vector<Drop>& drops() const { return drops_; }

 private:
  struct Node {  // segment boundary with accumulated integrals
    double t;
    double i1;  // int_0^t phi
    double i2;  // int_0^t phi^2
  };
  int segment_of(double t) const;

  double initial_level_;
  std::vector<Drop> drops_;
  double horizon_;
  // Boundaries: 0, d1.t, d1.t+1, d2.t, d2.t+1, ..., horizon.
  std::vector<double> bounds_;
  std::vector<Node> nodes_;
};

/// Generic quadrature-backed speed source for an arbitrary positive
/// nonincreasing phi given as a callable on [0, t_max]. Prefix integrals are
/// cached on a uniform grid (composite Simpson, i.e. Richardson-extrapolated
/// trapezoid); partial cells use a local Simpson rule; the inverse of r uses
/// monotone bracketing plus a Newton polish with r' = phi. Per-call error of
/// the exposed maps is below 1e-8 for smooth phi at the default grid size.
class GridPhi : public PhiBackend {
 public:
  GridPhi(std::function<double(double)> phi, double t_max, int nodes = 100000);

  double phi(double t) const override;
  double dphi(double t) const override;
  double int_phi(double t) const override;
  double int_phi_sq(double t) const override;
  double inv_int_phi(double u) const override;
  std::pair<double, double> core_range() const override { return {0.0, t_max_}; }

 private:
  std::function<double(double)> f_;
  double t_max_;
  double h_;
  std::vector<double> i1_, i2_;  // prefix integrals at the grid nodes
};

struct PotentialBuildOptions {
  int grid_nodes = 100000;  // cache size for the generic quadrature backend
};

/// Output of the 1-D construction: a convex C^1 potential Phi with
/// Phi(0) = 0 whose gradient flow from u = r(x) moves with speed phi(x + t).
/// Equivalently Phi'(u) = -phi(r^{-1}(u)) and Phi(r(t)) = -int_0^t phi^2.
class Potential1D {
 public:
  explicit Potential1D(std::shared_ptr<const PhiBackend> backend)
      : backend_(std::move(backend)) {}

  double r(double t) const { return backend_->int_phi(t); }
  double r_inv(double u) const { return backend_->inv_int_phi(u); }
  double value(double u) const { return -backend_->int_phi_sq(r_inv(u)); }
  double derivative(double u) const { return -backend_->phi(r_inv(u)); }
  double second_derivative(double u) const {
    const double t = r_inv(u);
    return -backend_->dphi(t) / backend_->phi(t);
  }
  double speed_at_time(double t) const { return backend_->phi(t); }

  /// Strict range [r(start), r(end)] of the explicitly specified speed data;
  /// outside it the potential continues with constant slope (exact).
  std::pair<double, double> valid_range() const {
    auto [a, b] = backend_->core_range();
    return {backend_->int_phi(a), backend_->int_phi(b)};
  }

  const PhiBackend& backend() const { return *backend_; }
  std::shared_ptr<const PhiBackend> backend_ptr() const { return backend_; }

 private:
  std::shared_ptr<const PhiBackend> backend_;
};

/// Potential1D as a ConvexFn (d = 1). The prox solves the strictly monotone
/// optimality equation u + lambda Phi'(u) = x by bracketing, bisection and a
/// guarded Newton polish, so it is exact to solver tolerance.
class PotentialFn : public ConvexFn {
 public:
  explicit PotentialFn(Potential1D pot) : pot_(std::move(pot)) {}

  int dimension() const override { return 1; }
  double value(const Vec& x) const override;
  bool smooth() const override { return true; }
  std::optional<Vec> prox_analytic(const Vec& x, double lambda) const override;
  std::optional<Vec> min_subgrad_analytic(const Vec& x) const override;
  std::optional<Mat> hessian_analytic(const Vec& x) const override;

  const Potential1D& potential() const { return pot_; }

 private:
  Potential1D pot_;
};

/// Builds the 1-D potential from an explicit plateau/blend profile (exact) …
Potential1D build_potential(const SpeedProfile& profile);
/// … or from a generic positive nonincreasing phi on [0, t_max] (quadrature).
Potential1D build_potential(std::function<double(double)> phi, double t_max,
                            const PotentialBuildOptions& opts = {});

/// One row per breakpoint of the alternating schedule.
struct ScheduleRow {
  int n;
  double alpha;           // level whose long plateau ends at t_n
  double t_n;
  double ratio_achieved;  // integral ratio at t_n, orientation alternating
  double ratio_target;    // alpha_{n-1} / alpha_n
};

struct ProfilePair {
  SpeedProfile phi;   // first coordinate speed, drops at odd breakpoints
  SpeedProfile psi;   // second coordinate speed, drops at even breakpoints
  std::vector<ScheduleRow> schedule;
  double horizon;     // closing breakpoint; end of the built schedule
};

/// Builds the interleaved pair of speed profiles for a strictly decreasing
/// positive sequence alpha (needs alpha.size() >= n_max + 2):
///   - phi starts at alpha[0], psi at alpha[1];
///   - at breakpoint t_n the active function drops two levels
///     (phi at odd n, psi at even n), via a unit-width C^1 blend;
///   - each t_n is the smallest time satisfying the unit-mass condition
///     alpha[n] * (t_n - t_{n-1} - 1) >= 1 and the alternating integral
///     ratio condition within a factor 2 of its target alpha[n-1]/alpha[n];
///   - one closing breakpoint (no drop) ends the schedule so the horizon
///     lands on the plateau pair (alpha[n_max], alpha[n_max+1]).
/// Throws ScheduleOverflowError when a breakpoint would exceed t_budget.
ProfilePair build_profile(const std::vector<double>& alpha, int n_max,
                          double t_budget = 1e30);

/// f(x, y) = Phi(x) + Psi(y) assembled from a built profile pair. The flow
/// from the origin is t -> (r_phi(t), r_psi(t)); it escapes to infinity,
/// f is unbounded below, and the secant directions oscillate between the
/// coordinate axes on the alternating schedule.
struct Counterexample2D {
  Potential1D phi_potential;
  Potential1D psi_potential;
  std::shared_ptr<const ConvexFn> fn;  // SeparableSumFn of the two potentials
  std::vector<ScheduleRow> schedule;
  std::vector<double> alpha;
  double horizon;
  int depth;
};

Counterexample2D build_counterexample(const std::vector<double>& alpha, int n_max,
                                      double t_budget = 1e30);

/// alpha_n = 2^{-n^2}, n = 0..count-1.
std::vector<double> alpha_quadratic_exponent(int count);
/// alpha_n = ratio^{-n} (geometric; bounded ratio targets).
std::vector<double> alpha_geometric(double ratio, int count);

void write_schedule_csv(const std::filesystem::path& path,
                        const std::vector<ScheduleRow>& schedule);

}  // namespace cpflow
