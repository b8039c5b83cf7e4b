#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "cpflow/catalog.hpp"
#include "cpflow/flow.hpp"
#include "cpflow/rng.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cpflow;
using testsupport::catalog;
using testsupport::vec1;
using testsupport::vec2;

namespace {

FlowConfig fixed_cfg(double h, double T) {
  FlowConfig cfg;
  cfg.step = h;
  cfg.horizon = T;
  return cfg;
}

}  // namespace

TEST_CASE("trajectories follow the closed-form flows where those are known") {
  Rng rng(21);
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    if (!entry.exact_flow) continue;
    const double h = 0.01, T = 5.0;
    Vec x0 = rng.in_box(entry.sample_box);
    Trajectory traj = integrate_flow(*entry.fn, x0, fixed_cfg(h, T));
    REQUIRE(!traj.aborted_at);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k)
      worst = std::max(worst, (traj.points[k] - entry.exact_flow(x0, traj.times[k])).norm());
    // implicit Euler is first order; constant covers the catalog's curvatures
    CHECK(worst <= 3.0 * h);
  }
}

TEST_CASE("speeds are nonincreasing along every catalog flow, any step layout") {
  Rng rng(22);
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    Vec x0 = rng.in_box(entry.sample_box);
    for (int geo = 0; geo < 2; ++geo) {
      FlowConfig cfg = fixed_cfg(0.05, 20.0);
      if (geo) {
        cfg.policy = StepPolicy::geometric;
        cfg.points_per_decade = 16;
      }
      Trajectory traj = integrate_flow(*entry.fn, x0, cfg);
      REQUIRE(!traj.aborted_at);
      for (std::size_t k = 0; k + 1 < traj.speeds.size(); ++k)
        CHECK(traj.speeds[k + 1] <= traj.speeds[k] + 1e-8);
    }
  }
}

TEST_CASE("interleaved speed ordering ||v_{k+1}|| <= slope(x_{k+1}) <= ||v_k||") {
  const auto& entry = catalog().get("quad_abs_sum");
  Vec x0 = vec2(2.5, -1.7);
  FlowConfig cfg = fixed_cfg(0.1, 10.0);
  Trajectory traj = integrate_flow(*entry.fn, x0, cfg);
  REQUIRE(!traj.aborted_at);
  REQUIRE(traj.velocities.size() + 1 == traj.size());
  for (std::size_t k = 0; k + 1 < traj.velocities.size(); ++k) {
    double v_k = traj.velocities[k].norm();
    double v_next = traj.velocities[k + 1].norm();
    double s_next = traj.speeds[k + 1];  // analytic minimal subgradient norm
    CHECK(v_next <= s_next + 1e-9);
    CHECK(s_next <= v_k + 1e-9);
  }
}

TEST_CASE("flow map is nonexpansive between any two starts") {
  Rng rng(23);
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    Vec x0 = rng.in_box(entry.sample_box);
    Vec y0 = rng.in_box(entry.sample_box);
    ContractionReport rep = contraction_check(*entry.fn, x0, y0, fixed_cfg(0.05, 10.0));
    CHECK(rep.max_gap <= 1e-8);
    CHECK(rep.start_distance == doctest::Approx((x0 - y0).norm()));
  }
}

TEST_CASE("energy identity: residual small and first order in the step") {
  for (const std::string id : {"quadratic", "potential1d"}) {
    const auto& entry = catalog().get(id);
    // Moderate-slope starts: the leading residual term is h/4 times the drop
    // of the squared slope along the flow, so a slope near one keeps the
    // h = 0.01 residual inside the 5e-3 budget being asserted.
    Vec x0 = id == "quadratic" ? vec2(1.8, 0.3) : entry.sample_box.hi;
    Trajectory coarse = integrate_flow(*entry.fn, x0, fixed_cfg(0.02, 20.0));
    Trajectory fine = integrate_flow(*entry.fn, x0, fixed_cfg(0.01, 20.0));
    double r_coarse = energy_identity_residual(coarse);
    double r_fine = energy_identity_residual(fine);
    CHECK(r_fine <= 5e-3);
    CHECK(r_fine <= r_coarse);  // refinement can only help
    double ratio = r_coarse / r_fine;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
  }
}

TEST_CASE("semigroup property: restarting at the midpoint reproduces the tail") {
  const auto& entry = catalog().get("quad_abs_sum");
  Vec x0 = vec2(2.0, 1.5);
  Trajectory full = integrate_flow(*entry.fn, x0, fixed_cfg(0.05, 4.0));
  Trajectory head = integrate_flow(*entry.fn, x0, fixed_cfg(0.05, 2.0));
  Trajectory tail = integrate_flow(*entry.fn, head.points.back(), fixed_cfg(0.05, 2.0));
  // the fixed grid makes the restarted recursion literally the same sequence
  std::size_t offset = head.size() - 1;
  for (std::size_t k = 0; k < tail.size(); ++k) {
    REQUIRE(offset + k < full.size());
    CHECK((tail.points[k] - full.points[offset + k]).norm() <= 1e-12);
  }
}

TEST_CASE("halving the step halves the gap to the exact flow") {
  const auto& entry = catalog().get("quadratic");
  Vec x0 = vec2(3.0, -2.0);
  auto sup_err = [&](double h) {
    Trajectory traj = integrate_flow(*entry.fn, x0, fixed_cfg(h, 10.0));
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k)
      worst = std::max(worst, (traj.points[k] - entry.exact_flow(x0, traj.times[k])).norm());
    return worst;
  };
  double ratio = sup_err(0.02) / sup_err(0.01);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 2.5);
}

TEST_CASE("attained direction: flow from the special start is a straight line") {
  const auto& entry = catalog().get("abs_plus_linear");
  REQUIRE(entry.cp_attained_at.has_value());
  double dev = straight_line_deviation(*entry.fn, *entry.cp_attained_at, entry.cp_direction,
                                       fixed_cfg(0.01, 20.0));
  CHECK(dev <= 1e-9);
}

TEST_CASE("limiting speed settles for the affine flow and drifts for a mid-decay one") {
  const auto& affine = catalog().get("affine");
  Trajectory steady = integrate_flow(*affine.fn, vec2(1.0, 1.0), fixed_cfg(0.05, 20.0));
  LimitingSpeed ls = limiting_speed(steady);
  CHECK(ls.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(!ls.drifting);

  const auto& quad = catalog().get("quadratic");
  Trajectory decaying = integrate_flow(*quad.fn, vec2(3.0, 2.0), fixed_cfg(0.05, 3.0));
  LimitingSpeed ls2 = limiting_speed(decaying);
  CHECK(ls2.drifting);  // e^{-t} still falling fast at t = 3
}

TEST_CASE("geometric grid covers the horizon with log-spaced times") {
  FlowConfig cfg;
  cfg.step = 0.1;
  cfg.horizon = 1000.0;
  cfg.policy = StepPolicy::geometric;
  cfg.points_per_decade = 10;
  const auto& entry = catalog().get("affine");
  Trajectory traj = integrate_flow(*entry.fn, vec2(0.0, 0.0), cfg);
  REQUIRE(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(1000.0).epsilon(1e-12));
  // interior times grow by a constant factor 10^(1/ppd); the final point is
  // the horizon itself and may break the pattern
  double q = std::pow(10.0, 1.0 / cfg.points_per_decade);
  for (std::size_t k = 1; k + 2 < traj.times.size(); ++k)
    CHECK(traj.times[k + 1] / traj.times[k] == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("a failing inner solve aborts the trajectory with a reason") {
  // 2-D so the inner solve takes the damped-Newton path: 1-D inner solves
  // bisect and always return a midpoint, so they cannot run out of budget.
  struct Stiff : ConvexFn {  // smooth but given an impossible solver budget
    int dimension() const override { return 2; }
    double value(const Vec& x) const override {
      return std::log(std::cosh(x[0])) + std::log(std::cosh(x[1]));
    }
    bool smooth() const override { return true; }
  } f;
  FlowConfig cfg = fixed_cfg(0.5, 5.0);
  cfg.prox.max_iter = 1;
  cfg.prox.tol = 1e-16;
  Trajectory traj = integrate_flow(f, vec2(2.0, -1.5), cfg);
  REQUIRE(traj.aborted_at.has_value());
  CHECK(!traj.abort_reason.empty());
  CHECK(traj.size() >= 1);
}

TEST_CASE("trajectory csv is deterministic and carries the declared header") {
  namespace fs = std::filesystem;
  const auto& entry = catalog().get("quadratic");
  Trajectory traj = integrate_flow(*entry.fn, vec2(1.0, 2.0), fixed_cfg(0.1, 2.0));
  fs::path dir = fs::temp_directory_path() / "cpflow_test_flow_csv";
  fs::create_directories(dir);
  write_trajectory_csv(dir / "a.csv", traj);
  write_trajectory_csv(dir / "b.csv", traj);
  std::string a = testsupport::read_file(dir / "a.csv");
  CHECK(a == testsupport::read_file(dir / "b.csv"));
  CHECK(a.substr(0, a.find('\n')) == "t,x_0,x_1,speed,value");
  CHECK(testsupport::count_lines(a) == static_cast<int>(traj.size()) + 1);
}
