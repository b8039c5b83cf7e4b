#include <benchmark/benchmark.h>

#include "cpflow/asymptotics.hpp"
#include "cpflow/catalog.hpp"
#include "cpflow/constructions.hpp"
#include "cpflow/convex_fn.hpp"
#include "cpflow/flow.hpp"
#include "cpflow/types.hpp"

namespace {

using namespace cpflow;

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

// Analytic prox (soft threshold + closed-form quadratic shrink).
void BM_ProxAnalytic(benchmark::State& state) {
  const CatalogEntry& e = catalog().get("quad_abs_sum");
  const Vec x = vec2(2.3, -1.7);
  for (auto _ : state) benchmark::DoNotOptimize(prox_point(*e.fn, x, 0.1));
}
BENCHMARK(BM_ProxAnalytic);

// Newton-backed prox of the built 1-D potential (grid inversion inside).
void BM_ProxPotential(benchmark::State& state) {
  const CatalogEntry& e = catalog().get("potential1d");
  const Vec x = vec1(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(prox_point(*e.fn, x, 0.1));
}
BENCHMARK(BM_ProxPotential);

// Inverting the time-parameterization integral on the quadrature grid.
void BM_PotentialInverse(benchmark::State& state) {
  static const Potential1D pot =
      build_potential([](double s) { return 1.0 / (1.0 + s); }, 100.0);
  double u = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pot.r_inv(u));
    u += 0.01;
    if (u > 4.0) u = 0.1;
  }
}
BENCHMARK(BM_PotentialInverse);

// One hundred implicit-Euler steps on the smooth quadratic.
void BM_IntegrateFlow(benchmark::State& state) {
  const CatalogEntry& e = catalog().get("quadratic");
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 1.0;
  const Vec x0 = vec2(3.0, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_flow(*e.fn, x0, cfg));
}
BENCHMARK(BM_IntegrateFlow);

// Clustering secant directions of a log-spaced oscillating trajectory.
void BM_SecantClustering(benchmark::State& state) {
  static const Trajectory traj = [] {
    const Counterexample2D ce = build_counterexample(alpha_quadratic_exponent(5), 3);
    FlowConfig cfg;
    cfg.step = 0.1;
    cfg.policy = StepPolicy::geometric;
    cfg.points_per_decade = 48.0;
    cfg.horizon = ce.horizon;
    return integrate_flow(*ce.fn, Vec::Zero(2), cfg);
  }();
  for (auto _ : state) benchmark::DoNotOptimize(cosmic_secants(traj));
}
BENCHMARK(BM_SecantClustering);

}  // namespace

BENCHMARK_MAIN();
