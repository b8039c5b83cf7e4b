#include "cpflow/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpflow/csv.hpp"

namespace cpflow {

double slope(const ConvexFn& f, const Vec& x, const SubgradOptions& opts) {
  if (!f.in_domain(x) || !std::isfinite(f.value(x))) return kInf;
  try {
    return min_norm_subgrad(f, x, opts).norm();
  } catch (const SubgradRefineError&) {
    return kInf;  // refinement would not settle: treat as dist(0, empty) = +inf
  }
}

const char* cp_method_name(CPMethod m) {
  switch (m) {
    case CPMethod::pazy_ratio: return "pazy_ratio";
    case CPMethod::limit_velocity: return "limit_velocity";
    case CPMethod::min_norm_search: return "min_norm_search";
  }
  return "unknown";
}

double CPEstimate::error_allowance() const {
  if (!(horizon > 0.0)) return kInf;
  return 2.0 * bias_constant / horizon;
}

namespace {

// Index of the first grid time >= t (clamped to the last index).
std::size_t index_at(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return times.size() - 1;
  return static_cast<std::size_t>(it - times.begin());
}

Vec endpoint_direction(const ConvexFn& f, const Trajectory& traj, std::size_t k) {
  if (auto g = f.min_subgrad_analytic(traj.points[k])) return *g;
  // No analytic subgradient: use the negated velocity into the point.
  if (k == 0 || traj.velocities.empty()) return Vec(Vec::Zero(traj.dimension()));
  return Vec(-traj.velocities[std::min(k - 1, traj.velocities.size() - 1)]);
}

}  // namespace

CPEstimate cp_pazy_ratio(const ConvexFn& f, const Vec& x0, const FlowConfig& cfg,
                         double tol_cp) {
  const Trajectory traj = integrate_flow(f, x0, cfg);
  if (traj.size() < 2) throw std::invalid_argument("cp_pazy_ratio: trajectory too short");
  const double T = traj.final_time();

  CPEstimate est;
  est.method = CPMethod::pazy_ratio;
  est.horizon = T;
  for (int q = 1; q <= 4; ++q) {
    const std::size_t k = index_at(traj.times, 0.25 * q * T);
    const double t = traj.times[k];
    if (t <= 0.0) continue;
    est.history.emplace_back(t, Vec(-traj.points[k] / t));
  }
  est.p = -traj.points.back() / T;
  if (est.history.size() >= 2) {
    const auto& a = est.history[est.history.size() - 2];
    const auto& b = est.history.back();
    const double diff = (a.second - b.second).norm();
    est.converged = diff < tol_cp;
    // Under the C/t model, estimates at 3T/4 and T differ by C/(3T).
    est.bias_constant = 3.0 * T * diff;
  }
  return est;
}

CPEstimate cp_limit_velocity(const ConvexFn& f, const Vec& x0, const FlowConfig& cfg,
                             double tol_cp) {
  const Trajectory traj = integrate_flow(f, x0, cfg);
  if (traj.size() < 2) throw std::invalid_argument("cp_limit_velocity: trajectory too short");
  const double T = traj.final_time();
  const bool analytic = f.min_subgrad_analytic(x0).has_value();

  CPEstimate est;
  est.method = CPMethod::limit_velocity;
  est.horizon = T;

  if (analytic) {
    for (int q = 1; q <= 10; ++q) {
      const std::size_t k = index_at(traj.times, 0.1 * q * T);
      est.history.emplace_back(traj.times[k], *f.min_subgrad_analytic(traj.points[k]));
    }
    est.p = est.history.back().second;
  } else {
    // Running negated-velocity averages over [0.1 q T - window, 0.1 q T].
    for (int q = 1; q <= 10; ++q) {
      const double t_hi = 0.1 * q * T;
      const double t_lo = t_hi - 0.1 * T;
      Vec acc = Vec::Zero(traj.dimension());
      std::size_t n = 0;
      for (std::size_t k = 0; k < traj.velocities.size(); ++k) {
        if (traj.times[k] < t_lo || traj.times[k] > t_hi) continue;
        acc += traj.velocities[k];
        ++n;
      }
      if (n == 0) continue;
      est.history.emplace_back(t_hi, Vec(-acc / static_cast<double>(n)));
    }
    if (est.history.empty())
      throw std::invalid_argument("cp_limit_velocity: no velocity samples in the tail");
    est.p = est.history.back().second;
  }

  if (est.history.size() >= 2) {
    const auto& a = est.history[est.history.size() - 2];
    const auto& b = est.history.back();
    const double diff = (a.second - b.second).norm();
    est.converged = diff < tol_cp;
    // Under the C/t model, estimates at 0.9T and T differ by C/(9T).
    est.bias_constant = 9.0 * T * diff;
  }
  return est;
}

CPEstimate cp_min_norm_search(const ConvexFn& f, std::span<const Vec> seeds,
                              const FlowConfig& cfg, double tol_cp) {
  if (seeds.empty()) throw std::invalid_argument("cp_min_norm_search: needs at least one seed");

  CPEstimate best;
  best.method = CPMethod::min_norm_search;
  best.horizon = cfg.horizon;
  bool have = false;
  Vec best_endpoint;
  double best_decile_diff = 0.0;

  for (const Vec& seed : seeds) {
    const Trajectory traj = integrate_flow(f, seed, cfg);
    if (traj.size() < 2) continue;
    const std::size_t last = traj.size() - 1;
    const Vec p = endpoint_direction(f, traj, last);
    const std::size_t k9 = index_at(traj.times, 0.9 * traj.final_time());
    const Vec p9 = endpoint_direction(f, traj, k9);
    best.history.emplace_back(traj.final_time(), p);

    bool better = false;
    if (!have) {
      better = true;
    } else {
      const double dn = p.norm() - best.p.norm();
      if (dn < 0.0) better = true;
      // Deterministic tie-break: lexicographically smallest endpoint.
      if (dn == 0.0 && std::lexicographical_compare(
                           traj.points[last].data(), traj.points[last].data() + traj.dimension(),
                           best_endpoint.data(), best_endpoint.data() + best_endpoint.size()))
        better = true;
    }
    if (better) {
      have = true;
      best.p = p;
      best_endpoint = traj.points[last];
      best.horizon = traj.final_time();
      best_decile_diff = (p9 - p).norm();
    }
  }
  if (!have) throw std::invalid_argument("cp_min_norm_search: no seed produced a trajectory");
  best.converged = best_decile_diff < tol_cp;
  best.bias_constant = 9.0 * best.horizon * best_decile_diff;
  return best;
}

SecantSet cosmic_secants(const Trajectory& traj, double cluster_tol, double r_min) {
  if (traj.size() < 3) throw std::invalid_argument("cosmic_secants: trajectory too short");
  if (!(cluster_tol > 0.0)) throw std::invalid_argument("cosmic_secants: cluster_tol must be positive");

  const Vec& origin = traj.points.front();
  const double travel = (traj.points.back() - origin).norm();
  if (!(travel > r_min))
    throw FlowBoundedError(
        "cosmic_secants: flow stayed within the escape radius; secants at infinity undefined",
        travel);

  SecantSet out;
  out.cluster_tol = cluster_tol;
  out.escape_radius = r_min;

  // Tail: drop the first tenth of the samples (equivalently t >= T/10 on
  // uniform grids; keeps every decade of a logarithmic grid).
  const std::size_t start = std::max<std::size_t>(1, (traj.size() + 9) / 10);
  for (std::size_t k = start; k < traj.size(); ++k) {
    const Vec d = origin - traj.points[k];
    const double n = d.norm();
    if (n < 1e-12) continue;
    out.samples.emplace_back(traj.times[k], Vec(d / n));
  }
  if (out.samples.size() < 2)
    throw FlowBoundedError("cosmic_secants: too few escaped samples in the tail", travel);

  // Greedy leader clustering in time order (deterministic).
  for (const auto& [t, u] : out.samples) {
    int label = -1;
    for (std::size_t c = 0; c < out.directions.size(); ++c) {
      if ((u - out.directions[c]).norm() <= cluster_tol) {
        label = static_cast<int>(c);
        break;
      }
    }
    if (label < 0) {
      label = static_cast<int>(out.directions.size());
      out.directions.push_back(u);
    }
    out.labels.push_back(label);
  }

  // Fixed log partition of the sampled tail, three windows per decade.
  const double t_lo = out.samples.front().first;
  const double t_hi = out.samples.back().first;
  int n_windows = 1;
  double l_lo = 0.0, l_span = 0.0;
  if (t_lo > 0.0 && t_hi > t_lo) {
    l_lo = std::log10(t_lo);
    l_span = std::log10(t_hi) - l_lo;
    n_windows = std::max(1, static_cast<int>(std::ceil(3.0 * l_span)));
  }
  auto window_of = [&](double t) {
    if (n_windows == 1 || !(t > 0.0)) return 0;
    const int w = static_cast<int>((std::log10(t) - l_lo) / l_span * n_windows);
    return std::clamp(w, 0, n_windows - 1);
  };

  std::vector<std::vector<char>> touched(out.directions.size(),
                                         std::vector<char>(n_windows, 0));
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    touched[out.labels[i]][window_of(out.samples[i].first)] = 1;

  out.windows_touched.resize(out.directions.size(), 0);
  int recurring = 0;
  for (std::size_t c = 0; c < out.directions.size(); ++c) {
    int w = 0;
    for (char b : touched[c]) w += b;
    out.windows_touched[c] = w;
    if (w >= 3) ++recurring;
  }
  out.oscillating = recurring >= 2;
  return out;
}

void write_cp_csv(const std::filesystem::path& path, const CPEstimate& est) {
  CsvWriter w(path);
  std::vector<std::string> head{"method", "t"};
  const int d = static_cast<int>(est.p.size());
  for (int j = 0; j < d; ++j) head.push_back("p_" + std::to_string(j));
  head.push_back("norm");
  w.header(head);
  const std::string name = cp_method_name(est.method);
  for (const auto& [t, p] : est.history) {
    std::vector<double> row{t};
    for (int j = 0; j < d; ++j) row.push_back(p[j]);
    row.push_back(p.norm());
    w.row({name}, row);
  }
  std::vector<double> fin{est.horizon};
  for (int j = 0; j < d; ++j) fin.push_back(est.p[j]);
  fin.push_back(est.p.norm());
  w.row({name}, fin);
}

void write_secants_csv(const std::filesystem::path& path, const SecantSet& secants) {
  CsvWriter w(path);
  std::vector<std::string> head{"method", "t"};
  const int d = secants.directions.empty() ? 0 : static_cast<int>(secants.directions[0].size());
  for (int j = 0; j < d; ++j) head.push_back("p_" + std::to_string(j));
  head.push_back("norm");
  w.header(head);
  for (const auto& [t, u] : secants.samples) {
    std::vector<double> row{t};
    for (int j = 0; j < d; ++j) row.push_back(u[j]);
    row.push_back(u.norm());
    w.row({"secant"}, row);
  }
  for (std::size_t c = 0; c < secants.directions.size(); ++c) {
    // Cluster representatives; the time column holds the first sample time.
    double t_first = 0.0;
    for (std::size_t i = 0; i < secants.labels.size(); ++i) {
      if (secants.labels[i] == static_cast<int>(c)) {
        t_first = secants.samples[i].first;
        break;
      }
    }
    std::vector<double> row{t_first};
    for (int j = 0; j < d; ++j) row.push_back(secants.directions[c][j]);
    row.push_back(secants.directions[c].norm());
    w.row({"cluster"}, row);
  }
}

}  // namespace cpflow
