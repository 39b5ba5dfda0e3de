#include "chronoscale/error.hpp"
#include "chronoscale/scales.hpp"
#include "chronoscale/timescale.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace chronoscale;

namespace {

TimeScale dense_then_two_points() { return TimeScale({{0, 1}, {2, 2}, {3, 3}}); }

bool same(const std::vector<Segment>& a, const std::vector<Segment>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].left != b[i].left || a[i].right != b[i].right) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("canonicalize merges, sorts and rejects bad input") {
  CHECK(same(canonicalize({{0, 1}, {1, 2}}).segments(), {{0, 2}}));
  CHECK(same(canonicalize({{2, 3}, {0, 1}}).segments(), {{0, 1}, {2, 3}}));
  CHECK(same(canonicalize({{0, 1}, {0.5, 2}, {5, 5}}).segments(), {{0, 2}, {5, 5}}));
  CHECK_THROWS_AS(canonicalize({}), Error);
  CHECK_THROWS_AS(canonicalize({{0, kInf}, {5, kInf}}), Error);
  CHECK_THROWS_AS(canonicalize({{2, 1}}), Error);
}

TEST_CASE("jump operators and graininess") {
  const TimeScale t = dense_then_two_points();
  CHECK(t.forward_jump(0.5) == 0.5);
  CHECK(t.forward_jump(1) == 2);
  CHECK(t.forward_jump(3) == 3);
  CHECK(t.backward_jump(2) == 1);
  CHECK(t.backward_jump(0) == 0);
  CHECK_THROWS_AS(t.forward_jump(1.5), Error);

  const TimeScale u({{0, 1}, {2, 2}});
  CHECK(u.graininess(1) == 1);
  CHECK(u.graininess(0.3) == 0);

  const TimeScale z = integers(0.5);
  for (double s : {-3.0, 0.0, 0.5, 7.5}) CHECK(z.graininess(s) == doctest::Approx(0.5));
  CHECK_THROWS_AS(z.graininess(0.25), Error);
}

TEST_CASE("classification") {
  const TimeScale t({{0, 1}, {2, 3}});
  auto c = t.classify(1);
  CHECK(c.right == RightClass::RightScattered);
  CHECK(c.left == LeftClass::LeftDense);
  c = t.classify(2);
  CHECK(c.right == RightClass::RightDense);
  CHECK(c.left == LeftClass::LeftScattered);
  c = t.classify(0.5);
  CHECK(c.right == RightClass::RightDense);
  CHECK(c.left == LeftClass::LeftDense);
}

TEST_CASE("mu star, syndeticity and nu star") {
  const TimeScale unit = union_scale();
  CHECK(unit.mu_star() == doctest::Approx(1.0));
  CHECK(unit.is_syndetic());
  CHECK(unit.nu_star() == doctest::Approx(1.0));

  const TimeScale r = real_line();
  CHECK(r.mu_star() == 0.0);
  CHECK(r.is_syndetic());
  CHECK(std::isinf(r.nu_star()));

  const TimeScale tw = tower3();
  CHECK_FALSE(tw.is_syndetic());
  const double t3 = std::pow(3.0, 27.0);
  const double t4 = std::pow(3.0, 81.0);
  CHECK(tw.mu_star({3.0, t4}) == doctest::Approx(t4 - t3));

  CHECK_FALSE(geometric(2.0).is_syndetic());
  const TimeScale rs = random_syndetic(42, 1.0);
  CHECK(rs.is_syndetic());
  CHECK(rs.mu_star() <= 1.0);
}

TEST_CASE("build_grid examples") {
  const Grid g1 = build_grid(TimeScale({{0, 1}, {2, 2}}), {0, 2}, 0.5);
  REQUIRE(g1.size() == 4);
  CHECK(g1[0].t == 0);
  CHECK(g1[1].t == 0.5);
  CHECK(g1[2].t == 1);
  CHECK(g1[2].kind == RightClass::RightScattered);
  CHECK(g1[3].t == 2);

  const Grid g2 = build_grid(integers(1), {0, 3}, 0.123);
  REQUIRE(g2.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g2[i].t == double(i));
    CHECK(g2[i].kind == RightClass::RightScattered);
  }

  const Grid g3 = build_grid(TimeScale({{0, 2}}), {0, 1}, 0.25);
  REQUIRE(g3.size() == 5);
  for (const auto& p : g3.points()) CHECK(p.kind == RightClass::RightDense);

  CHECK_THROWS_AS(build_grid(TimeScale({{0, 1}}), {2, 3}, 0.1), Error);
  CHECK_THROWS_AS(build_grid(TimeScale({{0, 1}}), {0, 1}, 0.0), Error);
}

TEST_CASE("grid invariants on random syndetic scales") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeScale t = random_syndetic(seed, 1.5);
    const double h = 0.07;
    const Grid g = build_grid(t, {0, 60}, h);
    std::size_t scattered_in_scale = 0;
    for (const Segment& s : t.segments_in(0, 60)) {
      if (s.right >= 0 && s.right < 60 && t.graininess(s.right) > 0) ++scattered_in_scale;
    }
    std::size_t scattered_in_grid = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const GridPoint& p = g[i];
      CHECK(t.forward_jump(p.t) >= p.t);
      CHECK((p.kind == RightClass::RightScattered) == (t.graininess(p.t) > 0));
      if (p.kind == RightClass::RightScattered && p.t < 60) ++scattered_in_grid;
      if (i > 0) {
        CHECK(p.t > g[i - 1].t);
        if (g[i - 1].kind == RightClass::RightDense) CHECK(p.t - g[i - 1].t <= h * (1 + 1e-9));
      }
    }
    CHECK(scattered_in_grid == scattered_in_scale);
  }
}

TEST_CASE("delta integral examples") {
  const Grid r = build_grid(real_line(), {0, 1}, 0.01);
  CHECK(delta_integral([](double) { return 1.0; }, 0, 1, r) == doctest::Approx(1.0).epsilon(1e-14));

  const Grid z = build_grid(integers(1), {0, 10}, 1);
  auto f = [](double t) { return t * t - 3 * t; };
  double sum = 0;
  for (int k = 0; k < 10; ++k) sum += f(k);
  CHECK(delta_integral(f, 0, 10, z) == sum);

  const Grid m = build_grid(dense_then_two_points(), {0, 3}, 0.1);
  CHECK(delta_integral([](double) { return 1.0; }, 0, 3, m) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(delta_integral([](double) { return 1.0; }, 0, 1.5, m), Error);
}

TEST_CASE("delta derivative examples") {
  const Grid z = build_grid(integers(1), {0, 5}, 1);
  CHECK(delta_derivative_numeric([](double t) { return t * t; }, 2, z) == 5.0);

  const double h = 0.01;
  const Grid r = build_grid(real_line(), {0, 2}, h);
  CHECK(std::abs(delta_derivative_numeric([](double t) { return t * t; }, 1, r) - 2.0) <= 10 * h * h);

  const Grid m = build_grid(TimeScale({{0, 1}, {2, 2}}), {0, 2}, 0.1);
  CHECK(delta_derivative_numeric([](double t) { return t; }, 1, m) == 1.0);
  CHECK_THROWS_AS(delta_derivative_numeric([](double t) { return t; }, 2, m), Error);
}

TEST_CASE("integral additivity and sigma identity on mixed scales") {
  testing_support::Gen gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const TimeScale t = random_syndetic(std::uint64_t(100 + trial), 2.0);
    const Grid g = build_grid(t, {0, 40}, 0.125);
    const int k = gen.integer(1, 5);
    auto f = [k](double s) { return std::pow(s, k) - 3.0 * s + 1.0; };
    const double a = g[0].t;
    const double b = g[g.size() / 3].t;
    const double c = g.back();
    const double whole = delta_integral(f, a, c, g);
    const double split = delta_integral(f, a, b, g) + delta_integral(f, b, c, g);
    CHECK(std::abs(whole - split) <= 1e-12 * std::max(1.0, std::abs(whole)));

    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      if (!g.is_jump(i)) continue;
      const double d = delta_derivative_numeric(f, g[i].t, g);
      const double lhs = f(g[i + 1].t);
      const double rhs = f(g[i].t) + g[i].mu * d;
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("round trip on scattered-only windows") {
  for (double h : {1.0, 0.5, 0.25}) {
    const Grid g = build_grid(integers(h), {-3, 5}, 1);
    const auto times = g.times();
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = times[i] * times[i] * times[i] - times[i];
    std::vector<double> df(g.size(), 0.0);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) df[i] = delta_derivative(f, i, g);
    CHECK(delta_integral(df, g.front(), g.back(), g) ==
          doctest::Approx(f.back() - f.front()).epsilon(1e-13));
  }
}

TEST_CASE("dense derivative is fourth order") {
  auto f = [](double t) { return std::sin(3 * t); };
  double prev = 0;
  for (double h : {0.1, 0.05}) {
    const Grid g = build_grid(real_line(), {0, 1}, h);
    double worst = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst = std::max(worst, std::abs(delta_derivative_numeric(f, g[i].t, g) - 3 * std::cos(3 * g[i].t)));
    }
    if (prev > 0) CHECK(prev / worst > 10.0);
    prev = worst;
  }
}

TEST_CASE("scale descriptors") {
  const TimeScale a = parse_scale(R"({"segments": [[0, 1]], "pattern": {"kind": "periodic", "period": 1, "start": 2}})");
  CHECK(a.graininess(1) == doctest::Approx(1));
  CHECK(a.graininess(5) == doctest::Approx(1));
  CHECK(a.mu_star() == doctest::Approx(1));

  const TimeScale b = parse_scale(R"({"segments": [[0, "inf"]]})");
  CHECK(b.graininess(1e6) == 0);

  const TimeScale c = parse_scale(R"({"pattern": {"kind": "sequence", "points": [0, 1, 3, 7]}})");
  CHECK(c.forward_jump(3) == 7);
  CHECK(c.mu_star() == 4);

  const TimeScale d = parse_scale(R"({"pattern": {"kind": "sequence", "builtin": "tower3"}})");
  CHECK(d.forward_jump(3) == 27);

  CHECK_THROWS_AS(parse_scale("nonsense"), Error);
  CHECK_THROWS_AS(parse_scale("{not json"), Error);
  CHECK_THROWS_AS(parse_scale("random-syndetic:1"), Error);
  CHECK(scale_catalog().dump().find("tower3") != std::string::npos);
}
