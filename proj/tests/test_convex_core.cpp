#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "cpflow/catalog.hpp"
#include "cpflow/convex_fn.hpp"
#include "cpflow/csv.hpp"
#include "cpflow/rng.hpp"
#include "cpflow/types.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cpflow;
using testsupport::catalog;
using testsupport::oracle_prox_1d;
using testsupport::vec1;
using testsupport::vec2;

TEST_CASE("quadratic prox matches its closed form and the scan oracle") {
  QuadraticFn f(vec2(1.0, -0.5));
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x = rng.in_box(Box::centered(2, 3.0));
    double lambda = rng.uniform(0.05, 2.0);
    Vec p = prox_point(f, x, lambda);
    Vec expected = (x + lambda * f.center()) / (1.0 + lambda);
    CHECK((p - expected).norm() <= 1e-12);
  }
  // 1-D cross-check against the brute-force oracle
  QuadraticFn f1(vec1(0.7));
  double p = prox_point(f1, vec1(-2.0), 0.8)[0];
  CHECK(p == doctest::Approx(oracle_prox_1d(f1, -2.0, 0.8)).epsilon(1e-6));
}

TEST_CASE("norm prox is the block soft threshold") {
  NormFn f(2);
  Vec x = vec2(3.0, 4.0);  // norm 5
  Vec p = prox_point(f, x, 2.0);
  CHECK((p - x * (1.0 - 2.0 / 5.0)).norm() <= 1e-12);
  Vec q = prox_point(f, vec2(0.3, -0.4), 2.0);  // norm 0.5 <= lambda: collapses
  CHECK(q.norm() <= 1e-12);
}

TEST_CASE("prox optimality: value at prox beats random perturbations") {
  Rng rng(42);
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    const ConvexFn& f = *entry.fn;
    Vec x = rng.in_box(entry.sample_box);
    for (double lambda : {0.1, 1.0}) {
      Vec p = prox_point(f, x, lambda);
      double obj_p = f.value(p) + (p - x).squaredNorm() / (2.0 * lambda);
      for (int k = 0; k < 64; ++k) {
        double scale = (k % 2 == 0) ? 1e-3 : 1e-3 / 8.0;
        Vec q = p + scale * rng.direction(f.dimension());
        double obj_q = f.value(q) + (q - x).squaredNorm() / (2.0 * lambda);
        CHECK(obj_q >= obj_p - 1e-12 * (1.0 + std::abs(obj_p)));
      }
    }
  }
}

TEST_CASE("prox is firmly nonexpansive on catalog functions") {
  Rng rng(5);
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    const ConvexFn& f = *entry.fn;
    for (int trial = 0; trial < 10; ++trial) {
      Vec x = rng.in_box(entry.sample_box);
      Vec y = rng.in_box(entry.sample_box);
      Vec px = prox_point(f, x, 0.5);
      Vec py = prox_point(f, y, 0.5);
      // firm nonexpansiveness: ||px-py||^2 <= <px-py, x-y>
      double lhs = (px - py).squaredNorm();
      double rhs = (px - py).dot(x - y);
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("minimal subgradient: analytic values on the model functions") {
  QuadraticFn quad(vec2(1.0, -0.5));
  Vec x = vec2(2.0, 2.0);
  CHECK((min_norm_subgrad(quad, x) - (x - quad.center())).norm() <= 1e-9);

  NormFn norm2(2);
  CHECK(min_norm_subgrad(norm2, vec2(0.0, 0.0)).norm() <= 1e-12);  // 0 in subdiff
  Vec g = min_norm_subgrad(norm2, vec2(3.0, 4.0));
  CHECK((g - vec2(0.6, 0.8)).norm() <= 1e-12);

  // kink selection: at (x, 0) the minimal element of {1} x [-1, 1] is (1, 0)
  const auto& apl = *catalog().get("abs_plus_linear").fn;
  CHECK((min_norm_subgrad(apl, vec2(0.7, 0.0)) - vec2(1.0, 0.0)).norm() <= 1e-12);
}

TEST_CASE("Moreau gradient converges to the minimal subgradient at the declared rate") {
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    if (entry.moreau_rate <= 0) continue;
    const ConvexFn& f = *entry.fn;
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
      Vec x = rng.in_box(entry.sample_box);
      // keep away from kinks, where the rate bound needs the full distance
      if (entry.dist_to_kinks && entry.dist_to_kinks(x) < 0.3) continue;
      Vec g0 = min_norm_subgrad(f, x);
      for (double lambda : {1e-2, 1e-3}) {
        Vec gl = moreau_gradient(f, x, lambda);
        CHECK((gl - g0).norm() <= entry.moreau_rate * lambda + 1e-7);
      }
    }
  }
}

TEST_CASE("Moreau envelope: value identity and prox collapse") {
  auto base = std::make_shared<NormFn>(2);
  MoreauEnvelopeFn env(base, 0.5);
  Vec x = vec2(2.0, -1.0);
  // envelope value = min_u f(u) + ||u-x||^2 / (2 lambda), u on the segment
  double n = x.norm();
  double expected = (n <= 0.5) ? n * n / (2 * 0.5) : n - 0.25;  // Huber form
  CHECK(env.value(x) == doctest::Approx(expected).epsilon(1e-12));

  // prox of the envelope agrees with the collapse identity via the base prox
  double mu = 0.7, lambda = 0.5;
  Vec p_env = prox_point(env, x, mu);
  Vec p_base = prox_point(*base, x, lambda + mu);
  Vec expected_p = (lambda * x + mu * p_base) / (lambda + mu);
  CHECK((p_env - expected_p).norm() <= 1e-12);

  // and with the brute-force oracle in 1-D
  auto base1 = std::make_shared<NormFn>(1);
  MoreauEnvelopeFn env1(base1, 0.5);
  double p1 = prox_point(env1, vec1(1.7), 0.9)[0];
  CHECK(p1 == doctest::Approx(oracle_prox_1d(env1, 1.7, 0.9)).epsilon(1e-6));
}

TEST_CASE("offset only shifts values; prox and subgradients are unchanged") {
  auto base = std::make_shared<QuadraticFn>(vec2(1.0, -0.5));
  OffsetFn shifted(base, 7.0);
  Vec x = vec2(0.3, 0.9);
  CHECK(shifted.value(x) == doctest::Approx(base->value(x) + 7.0).epsilon(1e-15));
  CHECK((prox_point(shifted, x, 0.6) - prox_point(*base, x, 0.6)).norm() <= 1e-12);
  CHECK((min_norm_subgrad(shifted, x) - min_norm_subgrad(*base, x)).norm() <= 1e-12);
}

TEST_CASE("separable sum evaluates and splits blockwise") {
  std::vector<std::shared_ptr<const ConvexFn>> blocks{
      std::make_shared<QuadraticFn>(vec1(1.0)), std::make_shared<NormFn>(2)};
  SeparableSumFn f(blocks);
  CHECK(f.dimension() == 3);
  Vec x(3);
  x << 2.0, 3.0, 4.0;
  CHECK(f.value(x) == doctest::Approx(0.5 * 1.0 + 5.0).epsilon(1e-14));
  Vec p = prox_point(f, x, 2.0);
  CHECK(p[0] == doctest::Approx((2.0 + 2.0 * 1.0) / 3.0).epsilon(1e-12));
  CHECK((p.segment(1, 2) - vec2(3.0, 4.0) * (1.0 - 2.0 / 5.0)).norm() <= 1e-12);
}

TEST_CASE("dimension mismatches are rejected") {
  QuadraticFn f(vec2(0.0, 0.0));
  CHECK_THROWS_AS((void)eval(f, vec1(1.0)), DimensionError);
  CHECK_THROWS_AS((void)prox_point(f, vec1(1.0), 0.5), DimensionError);
}

TEST_CASE("numeric prox path agrees with the oracle on a non-catalog function") {
  // smooth 1-D function without an analytic prox: log(cosh x) + x^2/8
  struct LogCosh : ConvexFn {
    int dimension() const override { return 1; }
    double value(const Vec& x) const override {
      return std::log(std::cosh(x[0])) + x[0] * x[0] / 8.0;
    }
    bool smooth() const override { return true; }
  } f;
  for (double x : {-3.0, -0.4, 0.0, 1.3, 5.0}) {
    for (double lambda : {0.2, 1.0}) {
      double p = prox_point(f, vec1(x), lambda)[0];
      CHECK(p == doctest::Approx(oracle_prox_1d(f, x, lambda)).epsilon(1e-6));
    }
  }
}

TEST_CASE("finite-difference hessian matches the analytic one on smooth entries") {
  for (const auto& id : catalog().ids()) {
    const auto& entry = catalog().get(id);
    if (!entry.twice_differentiable) continue;
    const ConvexFn& f = *entry.fn;
    Rng rng(3);
    Vec x = rng.in_box(entry.sample_box);
    if (entry.dist_to_kinks && entry.dist_to_kinks(x) < 0.3) continue;
    auto H_analytic = f.hessian_analytic(x);
    if (!H_analytic) continue;
    Mat H_fd = fd_hessian(f, x, 1e-5);
    CHECK((H_fd - *H_analytic).norm() <= 1e-4 * (1.0 + H_analytic->norm()));
  }
}

TEST_CASE("halton probes are deterministic, inside the box, and distinct") {
  Box box = Box::centered(3, 2.0);
  auto a = halton_probes(box, 50);
  auto b = halton_probes(box, 50);
  REQUIRE(a.size() == 50);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).norm() == 0.0);
    CHECK(box.contains(a[i]));
    std::string key;
    for (int j = 0; j < 3; ++j) key += g17(a[i][j]) + ",";
    seen.insert(key);
  }
  CHECK(seen.size() == 50);
}

TEST_CASE("seeded rng reproduces its stream exactly") {
  Rng a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    double va = a.uniform(), vb = b.uniform(), vc = c.uniform();
    all_equal = all_equal && (va == vb);
    any_diff = any_diff || (va != vc);
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("g17 formatting round-trips doubles exactly") {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-300.0, 300.0));
    CHECK(std::stod(g17(v)) == v);
  }
  CHECK(std::stod(g17(0.1)) == 0.1);
  CHECK(std::stod(g17(1e300)) == 1e300);
}
