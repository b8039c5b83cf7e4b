#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpflow/convex_fn.hpp"
#include "cpflow/types.hpp"

namespace cpflow {

enum class StepPolicy {
  fixed,      // uniform steps of size `step`
  geometric,  // first step `step`, then times grow by 10^(1/points_per_decade)
};

struct FlowConfig {
  double step = 0.01;              // h: step size (fixed) or first step (geometric)
  double horizon = 50.0;           // T
  StepPolicy policy = StepPolicy::fixed;
  double points_per_decade = 48.0; // geometric policy density
  ProxOptions prox;                // inner solver options
  bool velocity_speeds = false;    // force ||velocity|| speeds even when an
                                   // analytic minimal subgradient exists
};

/// Implicit-Euler trajectory of the subgradient flow. speeds[k] is the norm
/// of the minimal subgradient at points[k] when the function exposes it
/// analytically, else the norm of the forward-difference velocity.
struct Trajectory {
  std::vector<double> times;            // size N+1
  std::vector<Vec> points;              // size N+1
  std::vector<Vec> velocities;          // size N (forward differences)
  std::vector<double> speeds;           // size N+1
  std::vector<double> values;           // size N+1
  std::vector<double> prox_residuals;   // size N; 0 for analytic prox steps
  std::optional<std::size_t> aborted_at;  // step index of a prox failure
  std::string abort_reason;

  int dimension() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  double final_time() const { return times.empty() ? 0.0 : times.back(); }
  std::size_t size() const { return points.size(); }
};

/// x_{k+1} = prox_point(f, x_k, h_k) on the configured time grid. A prox
/// failure aborts and returns the partial trajectory with `aborted_at` set.
Trajectory integrate_flow(const ConvexFn& f, const Vec& x0, const FlowConfig& cfg);

struct ContractionReport {
  double start_distance = 0.0;
  double max_gap = -kInf;   // max over t > 0 of ||flow_x(t) - flow_y(t)|| - ||x - y||
  double worst_time = 0.0;
};

/// Runs the flow from both starts on one grid and reports the worst distance
/// expansion. Nonexpansiveness means max_gap stays below solver noise.
ContractionReport contraction_check(const ConvexFn& f, const Vec& x0, const Vec& y0,
                                    const FlowConfig& cfg);

/// Max over k of |f(x_k) - f(x_0) + int_0^{t_k} speed^2| with the integral by
/// trapezoid on the trajectory grid. Requires populated speeds and values.
double energy_identity_residual(const Trajectory& traj);

/// Max deviation of the flow from the exact ray t -> xhat - t p. Meaningful
/// when the minimal subgradient at xhat equals p (attained direction).
double straight_line_deviation(const ConvexFn& f, const Vec& xhat, const Vec& p,
                               const FlowConfig& cfg);

/// Mean speed over the last tenth of the time range, plus its drift
/// (max - min over the same window). A drift above `drift_warn` suggests the
/// horizon truncates the limit; callers surface the warning.
struct LimitingSpeed {
  double mean = 0.0;
  double drift = 0.0;
  bool drifting = false;
};
LimitingSpeed limiting_speed(const Trajectory& traj, double drift_warn = 1e-3);

/// Header: t,x_0..x_{d-1},speed,value — 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace cpflow
