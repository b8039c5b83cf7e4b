#include "cpflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpflow/csv.hpp"

namespace cpflow {

namespace {

std::vector<double> time_grid(const FlowConfig& cfg) {
  if (!(cfg.step > 0.0)) throw std::invalid_argument("integrate_flow: step must be positive");
  if (!(cfg.horizon > 0.0)) throw std::invalid_argument("integrate_flow: horizon must be positive");
  if (!(cfg.step <= cfg.horizon))
    throw std::invalid_argument("integrate_flow: step must not exceed the horizon");

  std::vector<double> times{0.0};
  if (cfg.policy == StepPolicy::fixed) {
    const double n_est = cfg.horizon / cfg.step;
    if (n_est > 2e7) throw std::invalid_argument("integrate_flow: fixed grid too fine (use the geometric policy for long horizons)");
    const auto n = static_cast<std::size_t>(std::ceil(n_est - 1e-9));
    for (std::size_t k = 1; k < n; ++k) times.push_back(static_cast<double>(k) * cfg.step);
    times.push_back(cfg.horizon);
  } else {
    if (!(cfg.points_per_decade > 0.0))
      throw std::invalid_argument("integrate_flow: points_per_decade must be positive");
    const double q = std::pow(10.0, 1.0 / cfg.points_per_decade);
    double t = cfg.step;
    while (t < cfg.horizon * (1.0 - 1e-12)) {
      times.push_back(t);
      t *= q;
      if (times.size() > 2e7) throw std::invalid_argument("integrate_flow: geometric grid too fine");
    }
    times.push_back(cfg.horizon);
  }
  return times;
}

// A-posteriori optimality residual for a numeric prox step: the fixed-point
// gap ||u + lambda g(u) - x|| with g the analytic minimal subgradient when
// exposed, else a central-difference gradient (the numeric path only runs on
// smooth functions; nonsmooth catalog entries all carry analytic proxes).
double prox_residual_estimate(const ConvexFn& f, const Vec& x, const Vec& u, double lambda,
                              double fd_step) {
  Vec g;
  if (auto a = f.min_subgrad_analytic(u))
    g = std::move(*a);
  else
    g = fd_gradient(f, u, fd_step);
  return (u + lambda * g - x).norm();
}

}  // namespace

Trajectory integrate_flow(const ConvexFn& f, const Vec& x0, const FlowConfig& cfg) {
  require_dim(x0, f.dimension(), "integrate_flow");
  if (!all_finite(x0)) throw std::invalid_argument("integrate_flow: start point must be finite");
  if (!f.in_domain(x0) || !std::isfinite(f.value(x0)))
    throw std::invalid_argument("integrate_flow: start point outside the domain");

  const std::vector<double> times = time_grid(cfg);
  const bool analytic_speeds = !cfg.velocity_speeds && f.min_subgrad_analytic(x0).has_value();
  const bool analytic_prox = f.prox_analytic(x0, cfg.step).has_value();

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.points.push_back(x0);
  traj.values.push_back(f.value(x0));
  if (analytic_speeds) traj.speeds.push_back(f.min_subgrad_analytic(x0)->norm());

  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double h = times[k + 1] - times[k];
    const Vec& xk = traj.points.back();
    Vec next;
    try {
      next = prox_point(f, xk, h, cfg.prox);
    } catch (const ProxSolveError& e) {
      traj.aborted_at = k;
      traj.abort_reason = e.what();
      break;
    }
    traj.prox_residuals.push_back(
        analytic_prox ? 0.0 : prox_residual_estimate(f, xk, next, h, cfg.prox.fd_step));
    traj.velocities.push_back((next - xk) / h);
    traj.times.push_back(times[k + 1]);
    traj.points.push_back(next);
    traj.values.push_back(f.value(next));
    if (analytic_speeds) traj.speeds.push_back(f.min_subgrad_analytic(next)->norm());
  }

  if (!analytic_speeds) {
    // Forward-difference speeds; the final point reuses the last velocity.
    traj.speeds.resize(traj.points.size(), 0.0);
    for (std::size_t k = 0; k < traj.velocities.size(); ++k)
      traj.speeds[k] = traj.velocities[k].norm();
    if (!traj.velocities.empty())
      traj.speeds[traj.points.size() - 1] = traj.velocities.back().norm();
  }
  return traj;
}

ContractionReport contraction_check(const ConvexFn& f, const Vec& x0, const Vec& y0,
                                    const FlowConfig& cfg) {
  const Trajectory tx = integrate_flow(f, x0, cfg);
  const Trajectory ty = integrate_flow(f, y0, cfg);
  const std::size_t n = std::min(tx.size(), ty.size());
  ContractionReport rep;
  rep.start_distance = (x0 - y0).norm();
  for (std::size_t k = 1; k < n; ++k) {
    const double gap = (tx.points[k] - ty.points[k]).norm() - rep.start_distance;
    if (gap > rep.max_gap) {
      rep.max_gap = gap;
      rep.worst_time = tx.times[k];
    }
  }
  return rep;
}

double energy_identity_residual(const Trajectory& traj) {
  if (traj.size() < 2 || traj.speeds.size() != traj.size() || traj.values.size() != traj.size())
    throw std::invalid_argument("energy_identity_residual: trajectory lacks speeds or values");
  double residual = 0.0;
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    const double s0 = traj.speeds[k], s1 = traj.speeds[k + 1];
    integral += 0.5 * h * (s0 * s0 + s1 * s1);
    residual = std::max(residual, std::abs(traj.values[k + 1] - traj.values[0] + integral));
  }
  return residual;
}

double straight_line_deviation(const ConvexFn& f, const Vec& xhat, const Vec& p,
                               const FlowConfig& cfg) {
  const Trajectory traj = integrate_flow(f, xhat, cfg);
  double dev = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k)
    dev = std::max(dev, (traj.points[k] - (xhat - traj.times[k] * p)).norm());
  return dev;
}

LimitingSpeed limiting_speed(const Trajectory& traj, double drift_warn) {
  if (traj.size() < 2) throw std::invalid_argument("limiting_speed: trajectory too short");
  const double t_end = traj.times.back();
  const double t_lo = t_end - 0.1 * (t_end - traj.times.front());
  double sum = 0.0, mn = kInf, mx = -kInf;
  std::size_t count = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] < t_lo) continue;
    sum += traj.speeds[k];
    mn = std::min(mn, traj.speeds[k]);
    mx = std::max(mx, traj.speeds[k]);
    ++count;
  }
  LimitingSpeed out;
  if (count == 0) return out;
  out.mean = sum / static_cast<double>(count);
  out.drift = mx - mn;
  out.drifting = out.drift > drift_warn;
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path);
  std::vector<std::string> head{"t"};
  for (int j = 0; j < traj.dimension(); ++j) head.push_back("x_" + std::to_string(j));
  head.push_back("speed");
  head.push_back("value");
  w.header(head);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    for (int j = 0; j < traj.dimension(); ++j) row.push_back(traj.points[k][j]);
    row.push_back(traj.speeds[k]);
    row.push_back(traj.values[k]);
    w.row(row);
  }
}

}  // namespace cpflow
