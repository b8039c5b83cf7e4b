#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpflow/flow.hpp"

namespace cpflow {

/// Metric slope ||minimal subgradient at x||; +inf when the Moreau-Yosida
/// refinement does not settle (x likely outside the subdifferential domain,
/// where dist(0, empty set) = +inf).
double slope(const ConvexFn& f, const Vec& x, const SubgradOptions& opts = {});

enum class CPMethod { pazy_ratio, limit_velocity, min_norm_search };

const char* cp_method_name(CPMethod m);

/// Estimate of the asymptotic flow direction p (the minimal-norm element of
/// the closure of the subdifferential range). `history` records intermediate
/// estimates; `bias_constant` is the self-calibrated O(1/T) error scale
/// C with ||error|| ~ C / horizon, inferred from the last two history rows.
struct CPEstimate {
  Vec p;
  CPMethod method = CPMethod::pazy_ratio;
  bool converged = false;
  double horizon = 0.0;
  double bias_constant = 0.0;
  std::vector<std::pair<double, Vec>> history;  // (t, estimate at t)

  /// 2 * bias_constant / horizon: an honest bound on the remaining error at
  /// the horizon under the C/t convergence model (factor 2 is margin).
  double error_allowance() const;
};

/// p ~ -flow(T)/T, with diagnostics at T/4, T/2, 3T/4, T. Converges like
/// 1/T, so the allowance dominates at finite horizons; it is reported, never
/// hidden.
CPEstimate cp_pazy_ratio(const ConvexFn& f, const Vec& x0, const FlowConfig& cfg,
                         double tol_cp = 1e-3);

/// p ~ minimal subgradient at flow(T) (analytic when available, else the
/// negated average velocity over the last tenth); diagnostics at deciles.
CPEstimate cp_limit_velocity(const ConvexFn& f, const Vec& x0, const FlowConfig& cfg,
                             double tol_cp = 1e-3);

/// Flow-descent search for the minimal slope: runs the flow from every seed,
/// takes the endpoint subgradient of smallest norm. Deterministic tie-break:
/// lexicographically smallest endpoint. Reports best-so-far even when the
/// budget truncates convergence.
CPEstimate cp_min_norm_search(const ConvexFn& f, std::span<const Vec> seeds,
                              const FlowConfig& cfg, double tol_cp = 1e-3);

/// Raised when secants at infinity are requested for a flow that never left
/// the escape radius (the direction set is undefined for bounded flows).
class FlowBoundedError : public std::runtime_error {
 public:
  FlowBoundedError(const std::string& msg, double travel)
      : std::runtime_error(msg), travel(travel) {}
  double travel;
};

/// Unit secant directions (points[0] - points[k]) / ||...|| accumulated over
/// the tail of an escaping trajectory, clustered greedily.
struct SecantSet {
  std::vector<Vec> directions;       // cluster representatives (unit norm)
  bool oscillating = false;
  std::vector<std::pair<double, Vec>> samples;  // raw (t_k, u_k) tail samples
  std::vector<int> labels;           // cluster index per sample
  double cluster_tol = 0.1;
  double escape_radius = 10.0;

  /// Windows each cluster's membership touches (fixed log partition of the
  /// sampled tail, three windows per decade).
  std::vector<int> windows_touched;
};

/// pre: the trajectory escapes (||last - first|| > r_min). Tail = samples
/// after the first tenth (== t >= T/10 on uniform grids; on logarithmic
/// grids the same rule keeps every decade of the escape). Greedy leader
/// clustering at radius cluster_tol, in time order. `oscillating` means at
/// least two clusters each touch >= 3 disjoint log-windows of the tail.
/// Pure function of (traj, cluster_tol, r_min).
SecantSet cosmic_secants(const Trajectory& traj, double cluster_tol = 0.1,
                         double r_min = 10.0);

/// Rows: method,t,p_0..p_{d-1},norm.
void write_cp_csv(const std::filesystem::path& path, const CPEstimate& est);
void write_secants_csv(const std::filesystem::path& path, const SecantSet& secants);

}  // namespace cpflow
