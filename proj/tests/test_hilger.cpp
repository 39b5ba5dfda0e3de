#include "chronoscale/error.hpp"
#include "chronoscale/hilger.hpp"
#include "chronoscale/scales.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace chronoscale;
using testing_support::rel_err;

namespace {

ScalarCoefficient constant(double c) {
  return [c](double) { return c; };
}

// Independent oracle: exact product over jumps, Romberg over dense steps.
double oracle_exp(const ScalarCoefficient& p, double t, double s, const Grid& g) {
  double prod = 1.0;
  double dense = 0.0;
  for (std::size_t k = g.index_of(s); k < g.index_of(t); ++k) {
    if (g.is_jump(k)) {
      prod *= 1.0 + g[k].mu * p(g[k].t);
    } else {
      dense += testing_support::romberg(p, g[k].t, g[k + 1].t);
    }
  }
  return prod * std::exp(dense);
}

}  // namespace

TEST_CASE("cylinder transformation") {
  CHECK(cylinder(3, 0) == 3);
  CHECK(cylinder(1, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cylinder(-1, 1), Error);
  CHECK_THROWS_AS(cylinder(-3, 1), Error);
  double prev = cylinder(0.7, 1e-2);
  for (double h : {1e-3, 1e-5, 1e-8}) {
    const double v = cylinder(0.7, h);
    CHECK(std::abs(v - 0.7) < std::abs(prev - 0.7) + 1e-15);
    prev = v;
  }
}

TEST_CASE("circle algebra pointwise") {
  const Grid r = build_grid(real_line(), {0, 2}, 0.1);
  auto p = [](double t) { return std::sin(t); };
  auto q = [](double t) { return 1 + t; };
  for (double t : r.times()) {
    CHECK(oplus(p, q, r)(t) == doctest::Approx(p(t) + q(t)));
    CHECK(oplus(p, neg(p, r), r)(t) == doctest::Approx(0.0));
  }
  const Grid z = build_grid(integers(1), {0, 4}, 1);
  for (double t : z.times()) {
    CHECK(oplus(constant(1), constant(1), z)(t) == 3.0);
    CHECK(std::abs(oplus(constant(0.4), neg(constant(0.4), z), z)(t)) < 1e-15);
    CHECK(ominus(constant(0.4), constant(0.4), z)(t) == 0.0);
  }
  CHECK_THROWS_AS(neg(constant(-1), z)(1.0), Error);
}

TEST_CASE("regressivity classes") {
  const Grid z = build_grid(integers(1), {0, 10}, 1);
  CHECK(regressivity_class(constant(-1), z).kind == Regressivity::NotRegressive);
  auto half = regressivity_class(constant(-0.5), z);
  CHECK(half.kind == Regressivity::UniformlyPositive);
  CHECK(half.witness == 0.5);
  CHECK(regressivity_class(constant(-3), z).kind == Regressivity::Regressive);
  const Grid r = build_grid(real_line(), {0, 10}, 0.5);
  auto any = regressivity_class([](double t) { return 100 * std::sin(t); }, r);
  CHECK(any.kind == Regressivity::UniformlyPositive);
  CHECK(any.witness == 1.0);
}

TEST_CASE("hilger exponential examples") {
  const Grid r = build_grid(real_line(), {-1, 3}, 0.05);
  CHECK(rel_err(hilger_exp(constant(0.8), 3, -1, r), std::exp(0.8 * 4)) < 1e-13);
  CHECK(hilger_exp(constant(0.8), 1, 1, r) == 1.0);
  CHECK(hilger_exp(constant(0.0), 3, -1, r) == 1.0);

  const Grid z = build_grid(integers(1), {0, 12}, 1);
  for (int t = 0; t <= 12; ++t) CHECK(hilger_exp(constant(1), t, 0, z) == std::ldexp(1.0, t));
  for (int t = 1; t <= 12; ++t) CHECK(hilger_exp(constant(-1), t, 0, z) == 0.0);
  CHECK(hilger_exp(constant(-1), 0, 0, z) == 1.0);
  CHECK(hilger_exp(constant(-3), 3, 0, z) == -8.0);
  CHECK_THROWS_AS(hilger_exp(constant(-3), 3, 0, z, ExpBranch::Positive), Error);
  CHECK_THROWS_AS(hilger_exp(constant(-1), 0, 3, z), Error);
  CHECK(hilger_exp(constant(1), 0, 3, z) == 0.125);

  const Grid m = build_grid(union_scale(), {0, 6}, 0.01);
  CHECK(rel_err(hilger_exp(constant(1), 2, 0, m), 2 * std::exp(1.0)) < 1e-12);
}

TEST_CASE("hilger exponential against the product/quadrature oracle") {
  testing_support::Gen gen(11);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Grid g = build_grid(random_syndetic(seed, 1.0), {0, 20}, 0.05);
    const ScalarCoefficient p = gen.smooth_coefficient(0.9);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t a = std::size_t(gen.integer(0, int(g.size()) - 1));
      const std::size_t b = std::size_t(gen.integer(int(a), int(g.size()) - 1));
      CHECK(rel_err(hilger_exp(p, g[b].t, g[a].t, g), oracle_exp(p, g[b].t, g[a].t, g)) < 1e-9);
    }
  }
}

TEST_CASE("semigroup, group laws, sigma shift, monotonicity") {
  testing_support::Gen gen(3);
  const TimeScale scales[] = {real_line(), integers(1), integers(0.5), union_scale(),
                              random_syndetic(42, 1.0)};
  for (const TimeScale& t : scales) {
    const Grid g = build_grid(t, {0, 15}, 0.05);
    for (int trial = 0; trial < 5; ++trial) {
      const ScalarCoefficient p = gen.smooth_coefficient(0.9);
      const ScalarCoefficient q = gen.smooth_coefficient(0.9);
      const std::size_t i0 = std::size_t(gen.integer(0, int(g.size()) - 1));
      const std::size_t i1 = std::size_t(gen.integer(0, int(g.size()) - 1));
      const std::size_t i2 = std::size_t(gen.integer(0, int(g.size()) - 1));
      const double s = g[std::min({i0, i1, i2})].t;
      const double tt = g[std::max({i0, i1, i2})].t;
      const double mid = g[i0 + i1 + i2 - std::min({i0, i1, i2}) - std::max({i0, i1, i2})].t;
      CHECK(hilger_exp(p, tt, s, g) == doctest::Approx(1.0 / hilger_exp(p, s, tt, g)).epsilon(1e-9));
      CHECK(rel_err(hilger_exp(p, tt, mid, g) * hilger_exp(p, mid, s, g), hilger_exp(p, tt, s, g)) < 1e-9);
      CHECK(rel_err(hilger_exp(p, tt, s, g) * hilger_exp(q, tt, s, g),
                    hilger_exp(oplus(p, q, g), tt, s, g)) < 1e-9);
      CHECK(rel_err(hilger_exp(p, tt, s, g) / hilger_exp(q, tt, s, g),
                    hilger_exp(ominus(p, q, g), tt, s, g)) < 1e-9);
      CHECK(rel_err(1.0 / hilger_exp(q, tt, s, g), hilger_exp(neg(q, g), tt, s, g)) < 1e-9);
      for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        if (!g.is_jump(k)) continue;
        CHECK(hilger_exp(p, g[k + 1].t, s, g) ==
              doctest::Approx((1 + g[k].mu * p(g[k].t)) * hilger_exp(p, g[k].t, s, g)).epsilon(1e-12));
        break;
      }
      const ScalarCoefficient upper = [p](double x) { return p(x) + 0.3; };
      CHECK(hilger_exp(p, tt, s, g) > 0);
      CHECK(hilger_exp(p, tt, s, g) <= hilger_exp(upper, tt, s, g));
    }
  }
}

TEST_CASE("uniform positive regressivity separates p and p plus epsilon") {
  const Grid g = build_grid(random_syndetic(5, 1.0), {0, 30}, 0.1);
  const ScalarCoefficient p = [](double t) { return -0.6 + 0.2 * std::sin(t); };
  const auto cls = regressivity_class(p, g);
  REQUIRE(cls.kind == Regressivity::UniformlyPositive);
  const double eps = 0.3;
  const auto sum = oplus(p, constant(eps), g);
  for (double t : g.times()) CHECK(sum(t) >= p(t) + eps * cls.witness - 1e-15);
}
