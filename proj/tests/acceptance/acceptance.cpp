// Acceptance suite: one line per criterion, PASS or FAIL with detail.
// Exit status 0 iff every criterion passes. Each criterion is self-contained
// and uses only the public library API (plus the installed binary for the
// determinism check), so a failure line localizes the broken contract.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cpflow/asymptotics.hpp"
#include "cpflow/catalog.hpp"
#include "cpflow/constructions.hpp"
#include "cpflow/convex_fn.hpp"
#include "cpflow/determination.hpp"
#include "cpflow/flow.hpp"
#include "cpflow/rng.hpp"
#include "cpflow/types.hpp"

namespace fs = std::filesystem;
using namespace cpflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

const Catalog& catalog() {
  static Catalog c = Catalog::standard();
  return c;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------- 1 --
// Flow map nonexpansiveness: ||S(t)x - S(t)y|| never exceeds ||x - y|| beyond
// solver noise, for ten random start pairs on every catalog entry.
std::string criterion1() {
  const auto t0 = Clock::now();
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 50.0;
  Rng rng(2026);
  for (const std::string& id : catalog().ids()) {
    const CatalogEntry& e = catalog().get(id);
    for (int pair = 0; pair < 10; ++pair) {
      const Vec x = rng.in_box(e.sample_box);
      const Vec y = rng.in_box(e.sample_box);
      const ContractionReport rep = contraction_check(*e.fn, x, y, cfg);
      if (rep.max_gap > 1e-8)
        return id + " pair " + std::to_string(pair) + ": distance gap " + fmt(rep.max_gap) +
               " at t=" + fmt(rep.worst_time);
    }
  }
  const double dt = seconds_since(t0);
  if (dt > 30.0) return "runtime " + fmt(dt) + "s exceeds the 30s budget";
  return {};
}

// ---------------------------------------------------------------------- 2 --
// Speeds along every catalog flow are nonincreasing (slack 1e-8), and the
// limiting speed is start-independent: two random starts agree within 1e-4
// at horizon 200.
std::string criterion2() {
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 50.0;
  Rng rng(11);
  for (const std::string& id : catalog().ids()) {
    const CatalogEntry& e = catalog().get(id);
    const Trajectory traj = integrate_flow(*e.fn, rng.in_box(e.sample_box), cfg);
    if (traj.aborted_at) return id + ": flow aborted (" + traj.abort_reason + ")";
    for (std::size_t k = 1; k < traj.speeds.size(); ++k)
      if (traj.speeds[k] > traj.speeds[k - 1] + 1e-8)
        return id + ": speed rises at step " + std::to_string(k) + " (" +
               fmt(traj.speeds[k - 1]) + " -> " + fmt(traj.speeds[k]) + ")";
  }
  FlowConfig longer = cfg;
  longer.horizon = 200.0;
  for (const std::string& id : catalog().ids()) {
    const CatalogEntry& e = catalog().get(id);
    const LimitingSpeed a = limiting_speed(integrate_flow(*e.fn, rng.in_box(e.sample_box), longer));
    const LimitingSpeed b = limiting_speed(integrate_flow(*e.fn, rng.in_box(e.sample_box), longer));
    if (std::abs(a.mean - b.mean) > 1e-4)
      return id + ": limiting speeds " + fmt(a.mean) + " vs " + fmt(b.mean) +
             " differ by more than 1e-4";
  }
  return {};
}

// ---------------------------------------------------------------------- 3 --
// Energy identity f(x_t) - f(x_0) = -int speed^2: residual <= 5e-3 at
// h = 0.01 and first-order in h (halving h halves the residual within 20%),
// on the smooth quadratic and the built 1-D potential.
std::string criterion3() {
  for (const char* id : {"quadratic", "potential1d"}) {
    const CatalogEntry& e = catalog().get(id);
    // The leading residual term is h/4 times the squared-slope drop along
    // the flow, so a start with slope near one fits the 5e-3 budget.
    const Vec x0 = std::string(id) == "quadratic" ? vec2(1.8, 0.3) : e.sample_box.hi;
    FlowConfig cfg;
    cfg.horizon = 20.0;
    cfg.step = 0.01;
    const Trajectory coarse = integrate_flow(*e.fn, x0, cfg);
    const double r1 = energy_identity_residual(coarse);
    cfg.step = 0.005;
    const double r2 = energy_identity_residual(integrate_flow(*e.fn, x0, cfg));
    if (r1 > 5e-3) return std::string(id) + ": residual " + fmt(r1) + " exceeds 5e-3 at h=0.01";
    const double shrink = r2 / r1;
    if (shrink < 0.4 || shrink > 0.6)
      return std::string(id) + ": halving h scaled the residual by " + fmt(shrink) +
             ", outside [0.4, 0.6] (" + fmt(r1) + " -> " + fmt(r2) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------- 4 --
// Drift-ratio direction estimate: ||-x_T/T - p|| <= ||x0||/T + 1e-3 at
// T = 200 on the two drifting entries, and the three estimators agree
// pairwise within twice the direction tolerance.
std::string criterion4() {
  const double T = 200.0;
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = T;
  const Vec x0 = vec2(0.2, 0.1);
  for (const char* id : {"affine", "abs_plus_linear"}) {
    const CatalogEntry& e = catalog().get(id);
    const CPEstimate ratio = cp_pazy_ratio(*e.fn, x0, cfg);
    const double err = (ratio.p - e.cp_direction).norm();
    const double allowed = x0.norm() / T + 1e-3;
    if (err > allowed)
      return std::string(id) + ": ratio estimate off by " + fmt(err) + " > " + fmt(allowed);
    const CPEstimate limit = cp_limit_velocity(*e.fn, x0, cfg);
    std::vector<Vec> seeds = {x0, vec2(-1.0, 2.0), vec2(2.0, -3.0)};
    const CPEstimate search = cp_min_norm_search(*e.fn, seeds, cfg);
    const double g1 = (ratio.p - limit.p).norm();
    const double g2 = (ratio.p - search.p).norm();
    const double g3 = (limit.p - search.p).norm();
    const double worst = std::max({g1, g2, g3});
    if (worst > 2e-3)
      return std::string(id) + ": estimator pair disagrees by " + fmt(worst) + " > 2e-3";
  }
  return {};
}

// ---------------------------------------------------------------------- 5 --
// When the minimal subgradient at xhat equals the asymptotic direction, the
// flow from xhat is the exact ray xhat - t p.
std::string criterion5() {
  const CatalogEntry& e = catalog().get("abs_plus_linear");
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 20.0;
  const double dev = straight_line_deviation(*e.fn, *e.cp_attained_at, e.cp_direction, cfg);
  if (dev > 1e-9) return "deviation " + fmt(dev) + " from the ray exceeds 1e-9";
  return {};
}

// ---------------------------------------------------------------------- 6 --
// 1-D builder round trip for phi(s) = 1/(1+s): the built potential matches
// its closed form u -> e^{-u} - 1 within 1e-6 on the valid range, and the
// integrated flow from 0 realizes the prescribed speed profile within 5h.
std::string criterion6() {
  auto phi = [](double s) { return 1.0 / (1.0 + s); };
  const Potential1D pot = build_potential(phi, 100.0);
  const double u_hi = pot.valid_range().second;
  for (int i = 0; i <= 400; ++i) {
    const double u = u_hi * i / 400.0;
    const double err = std::abs(pot.value(u) - std::expm1(-u));
    if (err > 1e-6)
      return "potential deviates from its closed form by " + fmt(err) + " at u=" + fmt(u);
  }
  const PotentialFn fn(pot);
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 50.0;
  const Trajectory traj = integrate_flow(fn, vec1(0.0), cfg);
  double worst = 0.0, worst_t = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double err = std::abs(traj.speeds[k] - phi(traj.times[k]));
    if (err > worst) {
      worst = err;
      worst_t = traj.times[k];
    }
  }
  if (worst > 5.0 * cfg.step)
    return "flow speed misses the profile by " + fmt(worst) + " at t=" + fmt(worst_t) +
           " (budget " + fmt(5.0 * cfg.step) + ")";
  return {};
}

// ---------------------------------------------------------------------- 7 --
// Deep two-plateau construction: the flow direction oscillates between the
// coordinate axes (>= 2 secant clusters within 0.15 of an axis), while the
// limiting-velocity estimate collapses to the last plateau level. Uses the
// log-spaced grid; the whole criterion must finish inside two minutes.
std::string criterion7() {
  const auto t0 = Clock::now();
  const int depth = 6;
  const Counterexample2D ce = build_counterexample(alpha_quadratic_exponent(depth + 2), depth);
  FlowConfig cfg;
  cfg.step = 0.1;
  cfg.policy = StepPolicy::geometric;
  cfg.points_per_decade = 48.0;
  cfg.horizon = ce.horizon;
  const Trajectory traj = integrate_flow(*ce.fn, Vec::Zero(2), cfg);
  if (traj.aborted_at) return "flow aborted: " + traj.abort_reason;
  const SecantSet sec = cosmic_secants(traj);
  if (!sec.oscillating)
    return "secant set not flagged oscillating (" + std::to_string(sec.directions.size()) +
           " clusters)";
  int near_axis = 0;
  const Vec axes[4] = {vec2(1, 0), vec2(-1, 0), vec2(0, 1), vec2(0, -1)};
  for (const Vec& rep : sec.directions) {
    double d = kInf;
    for (const Vec& a : axes) d = std::min(d, (rep - a).norm());
    if (d <= 0.15) ++near_axis;
  }
  if (near_axis < 2)
    return "only " + std::to_string(near_axis) + " secant clusters within 0.15 of an axis";
  const CPEstimate est = cp_limit_velocity(*ce.fn, Vec::Zero(2), cfg);
  const double level = ce.alpha[depth];
  if (est.p.norm() > 1.1 * level)
    return "direction-estimate norm " + fmt(est.p.norm()) + " exceeds 1.1 * " + fmt(level);
  const double dt = seconds_since(t0);
  if (dt > 120.0) return "runtime " + fmt(dt) + "s exceeds the 120s budget";
  return {};
}

// ---------------------------------------------------------------------- 8 --
// Determination, positive direction: f vs f + 7 is recognized as equal up to
// an additive constant, and the recovered constant is -7 within 1e-10.
std::string criterion8() {
  for (const char* id : {"quadratic", "abs_plus_linear", "potential1d"}) {
    const CatalogEntry& e = catalog().get(id);
    const auto shifted = std::make_shared<OffsetFn>(e.fn, 7.0);
    const std::vector<Vec> probes = halton_probes(e.sample_box, 24);
    const DeterminationReport rep = determine(*e.fn, *shifted, probes);
    if (rep.verdict != Verdict::equal_up_to_constant)
      return std::string(id) + ": verdict " + verdict_name(rep.verdict) +
             " instead of equal_up_to_constant";
    if (std::abs(rep.constant - (-7.0)) > 1e-10)
      return std::string(id) + ": recovered constant " + fmt(rep.constant) + " not -7";
  }
  return {};
}

// ---------------------------------------------------------------------- 9 --
// Determination, negative direction: the 1-D pair with slopes +1 and -1 has
// identical slope fields but opposite asymptotic directions; the verdict
// must be a direction mismatch with gap 2.
std::string criterion9() {
  const AffineFn up(vec1(1.0), 0.0);
  const AffineFn down(vec1(-1.0), 0.0);
  const std::vector<Vec> probes = halton_probes(Box::centered(1, 3.0), 16);
  const DeterminationReport rep = determine(up, down, probes);
  if (rep.verdict != Verdict::cp_mismatch)
    return std::string("verdict ") + verdict_name(rep.verdict) + " instead of cp_mismatch";
  if (std::abs(rep.cp_gap - 2.0) > 1e-3)
    return "direction gap " + fmt(rep.cp_gap) + " not 2 within 1e-3";
  return {};
}

// --------------------------------------------------------------------- 10 --
// Curvature-gradient alignment: grad(0.5 ||grad f||^2) = H_f grad f, checked
// by finite differences at 20 points (smooth quadratic; built potential on
// the interior of its valid range), plus the closed-form spot value
// |Phi''(1) Phi'(1)| = e^{-2} for phi(s) = 1/(1+s).
std::string criterion10() {
  const double h = 1e-4;
  const CatalogEntry& quad = catalog().get("quadratic");
  const std::vector<Vec> pts = halton_probes(quad.sample_box, 10);
  for (const Vec& x : pts) {
    const double res = hessian_gradient_identity(*quad.fn, *quad.fn, x, h).cross_f;
    if (res > 1e-5)
      return "quadratic: residual " + fmt(res) + " at (" + fmt(x[0]) + ", " + fmt(x[1]) + ")";
  }
  const CatalogEntry& pot_entry = catalog().get("potential1d");
  for (int i = 0; i < 10; ++i) {
    // stay inside (0, r(100)): the potential is twice differentiable only
    // strictly between its endpoint creases
    const Vec u = vec1(0.1 + 4.4 * i / 9.0);
    const double res = hessian_gradient_identity(*pot_entry.fn, *pot_entry.fn, u, h).cross_f;
    if (res > 1e-5) return "potential1d: residual " + fmt(res) + " at u=" + fmt(u[0]);
  }
  const Potential1D pot = build_potential([](double s) { return 1.0 / (1.0 + s); }, 100.0);
  const double spot = std::abs(pot.second_derivative(1.0) * pot.derivative(1.0));
  const double target = std::exp(-2.0);
  if (std::abs(spot - target) > 1e-4)
    return "|Phi''(1) Phi'(1)| = " + fmt(spot) + " instead of e^{-2}";
  return {};
}

// --------------------------------------------------------------------- 11 --
// Determinism: rerunning the binary with identical arguments (same seed)
// yields byte-identical CSV files.
std::string criterion11() {
  const std::string bin = CPFLOW_BIN;
  const fs::path root = fs::temp_directory_path() / "cpflow_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  auto run = [&](const std::string& args, const fs::path& out) -> bool {
    const std::string cmd = bin + " " + args + " --out " + out.string() + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  struct Case {
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases = {
      {"run-flow --fn quad_abs_sum --seed 7 --T 20", {"flow.csv", "cp.csv"}},
      {"run-counterexample --depth 3", {"schedule.csv", "flow.csv", "cp.csv", "secants.csv"}},
  };
  int idx = 0;
  for (const Case& c : cases) {
    const fs::path a = root / ("a" + std::to_string(idx));
    const fs::path b = root / ("b" + std::to_string(idx));
    ++idx;
    if (!run(c.args, a) || !run(c.args, b)) return "command failed: " + c.args;
    for (const std::string& f : c.files) {
      const std::string ca = slurp(a / f), cb = slurp(b / f);
      if (ca.empty()) return f + " missing or empty after: " + c.args;
      if (ca != cb) return f + " differs between identical reruns of: " + c.args;
    }
  }
  return {};
}

}  // namespace

int main() {
  struct Criterion {
    int n;
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> suite = {
      {1, "flow map is nonexpansive across the catalog", criterion1},
      {2, "speeds decay monotonically and limiting speeds are start-independent", criterion2},
      {3, "energy identity holds with first-order step convergence", criterion3},
      {4, "direction estimators obey the drift-ratio bound and agree pairwise", criterion4},
      {5, "attained direction yields an exactly straight flow", criterion5},
      {6, "built 1-D potential matches its closed form and prescribed speeds", criterion6},
      {7, "deep construction oscillates between axes with vanishing direction estimate",
       criterion7},
      {8, "constant-offset pair is recovered with constant -7", criterion8},
      {9, "opposite-slope pair is flagged as a direction mismatch with gap 2", criterion9},
      {10, "curvature-gradient alignment identity holds at 20 sampled points", criterion10},
      {11, "same-seed reruns produce byte-identical CSV outputs", criterion11},
  };

  int failures = 0;
  for (const Criterion& c : suite) {
    std::string detail;
    try {
      detail = c.run();
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    if (detail.empty()) {
      std::printf("PASS criterion %d: %s\n", c.n, c.name);
    } else {
      std::printf("FAIL criterion %d: %s -- %s\n", c.n, c.name, detail.c_str());
      ++failures;
    }
  }
  std::printf("acceptance: %d/%d criteria passed\n", static_cast<int>(suite.size()) - failures,
              static_cast<int>(suite.size()));
  return failures == 0 ? 0 : 1;
}
