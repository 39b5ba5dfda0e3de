#include "chronoscale/error.hpp"
#include "chronoscale/lyapunov.hpp"
#include "chronoscale/scales.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace chronoscale;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<double> profile(const Grid& g, const std::function<double(double)>& log_f) {
  std::vector<double> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = log_f(g[k].t);
  return out;
}

// log e_c(t_k, t_0) by direct product over the grid.
std::vector<double> log_hilger_constant(double c, const Grid& g) {
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double s = g.step(k);
    out[k + 1] = out[k] + (g.is_jump(k) ? std::log1p(s * c) : c * s);
  }
  return out;
}

MatrixFunction diag_system(const std::vector<double>& d) {
  MatrixXd m = MatrixXd::Zero(Eigen::Index(d.size()), Eigen::Index(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m(Eigen::Index(i), Eigen::Index(i)) = d[i];
  return MatrixFunction::constant_matrix(m);
}

}  // namespace

TEST_CASE("classic exponent") {
  const Grid r = build_grid(real_line(), {0, 40}, 0.01);
  const auto e2 = classic_exponent(profile(r, [](double t) { return 2 * t; }), r);
  CHECK(std::abs(e2.value - 2) <= 0.01);
  CHECK(e2.method == "log-ratio");
  CHECK(e2.band >= 0);

  const Grid rl = build_grid(real_line(), {0, 1000}, 0.1);
  const auto sq = classic_exponent(profile(rl, [](double t) { return 2 * std::log(t); }), rl);
  CHECK(std::abs(sq.value) <= 0.05);

  const Grid z = build_grid(integers(1), {0, 60}, 1);
  const auto half = classic_exponent(profile(z, [](double t) { return -t * std::log(2.0); }), z);
  CHECK(std::abs(half.value + std::log(2.0)) <= 0.01);

  CHECK_THROWS_AS(classic_exponent(std::vector<double>(z.size(), -kInf), z), Error);
}

TEST_CASE("tail tests") {
  const Grid z = build_grid(integers(1), {0, 200}, 1);
  CHECK(tends_to_zero(profile(z, [](double t) { return -0.1 * t; }), z));
  CHECK_FALSE(tends_to_zero(profile(z, [](double t) { return -0.01 * t; }), z));
  CHECK_FALSE(tends_to_zero(profile(z, [](double t) { return 0.1 * t; }), z));
  CHECK(tends_to_infinity(profile(z, [](double t) { return 0.1 * t; }), z));
  CHECK_FALSE(tends_to_infinity(profile(z, [](double t) { return -0.1 * t; }), z));
  // A late bump breaks monotonicity of the block maxima.
  auto bumpy = profile(z, [](double t) { return -0.1 * t; });
  bumpy[195] = -10.0;
  CHECK_FALSE(tends_to_zero(bumpy, z));
  const Grid tiny = build_grid(integers(1), {0, 5}, 1);
  CHECK_FALSE(tends_to_zero(profile(tiny, [](double t) { return -10 * t; }), tiny));
}

TEST_CASE("time-scale exponent examples") {
  const TimeScale z = integers(1);
  const Grid gz = build_grid(z, {0, 20000}, 1);
  const auto two = ts_exponent(profile(gz, [](double t) { return t * std::log(2.0); }), gz, z, 0);
  CHECK(two.method == "bisection-on-a");
  CHECK(std::abs(two.value - 1.0) <= 1e-3);
  CHECK(two.value - two.band <= 1.0);
  CHECK_FALSE(two.saturated);

  const Grid gzs = build_grid(z, {0, 2000}, 1);
  const auto bounded = ts_exponent(profile(gzs, [](double t) { return std::log(1.5 + std::sin(t)); }),
                                   gzs, z, 0);
  CHECK(bounded.value <= 0 + bounded.band);

  const TimeScale r = real_line();
  const Grid gr = build_grid(r, {0, 10000}, 1);
  for (double c : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    const auto lf = profile(gr, [c](double t) { return c * t; });
    const auto ts = ts_exponent(lf, gr, r, 0);
    CHECK(std::abs(ts.value - c) <= 1e-3);
    CHECK(std::abs(ts.value - classic_exponent(lf, gr).value) <= 1e-3);
  }

  // Collapse on the integers: every admissible a gives decay.
  std::vector<double> dead(gzs.size(), -kInf);
  dead[0] = 0.0;
  const auto sat = ts_exponent(dead, gzs, z, 0);
  CHECK(sat.saturated);
  CHECK(sat.value == -1.0);

  try {
    ts_exponent(profile(gzs, [](double t) { return t * t; }), gzs, z, 0);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
  const TimeScale tower = tower3();
  const Grid gt = build_grid(tower, {3, 19683}, 1);
  try {
    ts_exponent(std::vector<double>(gt.size(), 0.0), gt, tower, 3);
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Refusal);
  }
}

TEST_CASE("time-scale exponent of Hilger exponentials on random syndetic scales") {
  testing_support::Gen gen(99);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeScale t = random_syndetic(seed, 1.0);
    const Grid g = build_grid(t, {0, 50000}, 0.25);
    const double nu = t.nu_star();
    const double c = gen.uniform(-nu + 0.1, 2.0);
    const auto lf = log_hilger_constant(c, g);
    const auto e = ts_exponent(lf, g, t, g.front());
    CHECK(std::abs(e.value - c) <= 1e-3);

    // Shift invariance.
    std::vector<double> shifted = lf;
    for (double& v : shifted) v += std::log(37.0);
    const auto es = ts_exponent(shifted, g, t, g.front());
    CHECK(std::abs(es.value - e.value) <= e.band + es.band);
  }
}

TEST_CASE("exact exponent check") {
  const Grid z = build_grid(integers(1), {0, 400}, 1);
  const auto p2 = profile(z, [](double t) { return t * std::log(2.0); });
  CHECK(exact_exponent_check(p2, 1.0, 0.1, z, 0) == TriState::True);
  const auto mix = profile(z, [](double t) { return std::log(std::exp2(t) + std::exp2(-t)); });
  CHECK(exact_exponent_check(mix, 1.0, 0.1, z, 0) == TriState::True);
  CHECK(exact_exponent_check(p2, 0.5, 0.1, z, 0) == TriState::False);
  CHECK(exact_exponent_check(p2, 1.5, 0.1, z, 0) == TriState::False);
  // e_{-1} vanishes after one step on the integers.
  CHECK(exact_exponent_check(p2, -1.0, 0.1, z, 0) == TriState::Indeterminate);
  const Grid tiny = build_grid(integers(1), {0, 5}, 1);
  CHECK(exact_exponent_check(profile(tiny, [](double t) { return t; }), 1.0, 0.1, tiny, 0) ==
        TriState::Indeterminate);
  CHECK_THROWS_AS(exact_exponent_check(p2, 1.0, 0.0, z, 0), Error);
  CHECK(std::string(to_string(TriState::Indeterminate)) == "indeterminate");

  const TimeScale scales[] = {integers(1), union_scale(), random_syndetic(42, 1.0), real_line()};
  testing_support::Gen gen(4);
  for (const TimeScale& t : scales) {
    const Grid g = build_grid(t, {0, 2000}, 0.25);
    const double c = gen.uniform(-0.5, 1.5);
    const auto lf = log_hilger_constant(c, g);
    const double est = ts_exponent(lf, g, t, g.front()).value;
    for (double eps : {0.05, 0.1, 0.2}) {
      CHECK(exact_exponent_check(lf, est, eps, g, g.front()) == TriState::True);
    }
  }
}

TEST_CASE("alpha function") {
  const Grid r = build_grid(real_line(), {0, 2}, 0.1);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 0.7;
  d(1, 1) = -1.9;
  CHECK(alpha_function(MatrixFunction::constant_matrix(d), 1.0, r) == doctest::Approx(-1.2).epsilon(1e-15));

  const Grid z = build_grid(integers(1), {0, 5}, 1);
  const MatrixFunction ones = MatrixFunction::constant_matrix(MatrixXd::Identity(2, 2));
  CHECK(alpha_function(ones, 2.0, z) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(alpha_function(ones, 2.0, z, true) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(alpha_function(MatrixFunction::constant_matrix(MatrixXd::Zero(2, 2)), 2.0, z) == 0.0);

  // For 2 x 2 matrices (det(E + mu A) - 1)/mu = tr A + mu det A.
  MatrixXd a(2, 2);
  a << 0.3, -1.2, 0.8, 0.5;
  const MatrixFunction af = MatrixFunction::constant_matrix(a);
  double prev = kInf;
  for (int k = 0; k <= 12; ++k) {
    const double mu = std::ldexp(1.0, -k);
    const Grid g = build_grid(integers(mu), {0, 4}, mu);
    const double v = alpha_function(af, 2.0, g);
    CHECK(v == doctest::Approx(a.trace() + mu * a.determinant()).epsilon(1e-12));
    const double gap = std::abs(v - a.trace());
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev <= 1e-3);
}

TEST_CASE("fundamental exponents") {
  const TimeScale z = integers(1);
  const Grid gz = build_grid(z, {0, 20000}, 1);
  const auto phi = fundamental_system(diag_system({1.0, -0.5}), gz);
  const auto fe = fundamental_exponents(phi, z, 0);
  REQUIRE(fe.exponents.size() == 2);
  CHECK(std::abs(fe.exponents[0].value + 0.5) <= 1e-3);
  CHECK(std::abs(fe.exponents[1].value - 1.0) <= 1e-3);
  CHECK(std::abs(fe.s - 0.5) <= 2e-3);
  CHECK(fe.band >= 0);
  // Renormalized stepping matches the closed form far beyond overflow.
  CHECK(phi.log_norms[0].back() == doctest::Approx(20000 * std::log(2.0)).epsilon(1e-12));
  CHECK(phi.log_norms[1].back() == doctest::Approx(-20000 * std::log(2.0)).epsilon(1e-12));

  const auto id = fundamental_exponents(fundamental_system(diag_system({0.0, 0.0, 0.0}), gz), z, 0);
  CHECK(std::abs(id.s) <= id.band);
  for (const auto& e : id.exponents) CHECK(std::abs(e.value) <= e.band);

  const TimeScale r = real_line();
  const Grid gr = build_grid(r, {0, 10000}, 0.5);
  std::vector<Trajectory> cols;
  for (double c : {2.0, -1.0}) {
    MatrixXd v(1, Eigen::Index(gr.size()));
    for (std::size_t k = 0; k < gr.size(); ++k) v(0, Eigen::Index(k)) = std::exp(c * gr[k].t * 1e-2);
    cols.push_back(Trajectory{gr, v});
  }
  const auto fr = fundamental_exponents(fundamental_system(cols), r, 0);
  CHECK(std::abs(fr.exponents[0].value + 0.01) <= 1e-3);
  CHECK(std::abs(fr.exponents[1].value - 0.02) <= 1e-3);
  CHECK(std::abs(fr.s - 0.01) <= 2e-3);
}

TEST_CASE("regularity defect examples") {
  const TimeScale r = real_line();
  const Grid gr = build_grid(r, {0, 400}, 0.05);
  const MatrixFunction ar = diag_system({-1.0, 2.0});
  const auto dr = regularity_defect(ar, fundamental_system(ar, gr), r, 0);
  CHECK(std::abs(dr.defect) <= 0.05);
  CHECK(dr.nonnegative == TriState::True);

  const TimeScale z = integers(1);
  const Grid gz = build_grid(z, {0, 400}, 1);
  const MatrixFunction az = diag_system({-0.5, 1.0});
  const auto dz = regularity_defect(az, fundamental_system(az, gz), z, 0);
  CHECK(std::abs(dz.defect) <= 0.05);
  CHECK(dz.nonnegative == TriState::True);

  // Oscillating upper-triangular coupling: both canonical columns grow like e^t.
  MatrixFunction tri;
  tri.dim = 2;
  tri.eval = [](double t) {
    MatrixXd m(2, 2);
    m << 1.0, std::cos(t), 0.0, -1.0;
    return m;
  };
  tri.bound = 2.0;
  const auto dt = regularity_defect(tri, fundamental_system(tri, gr), r, 0);
  CHECK(dt.defect > dt.band);
  CHECK(std::abs(dt.defect - 2.0) <= 0.1);

  // The det/mu quotient breaks the inequality on a regular system.
  const MatrixFunction ones = diag_system({1.0, 1.0});
  const auto lit = regularity_defect(ones, fundamental_system(ones, gz), z, 0, {}, true);
  CHECK(lit.nonnegative == TriState::False);
  const auto fixed = regularity_defect(ones, fundamental_system(ones, gz), z, 0);
  CHECK(fixed.nonnegative == TriState::True);

  // A saturated column exponent makes e_{alpha_1 (+) alpha_2} vanish.
  const MatrixFunction nearly = diag_system({-1.0 + 1e-9, 0.5});
  const auto ind = regularity_defect(nearly, fundamental_system(nearly, gz), z, 0);
  CHECK(ind.nonnegative == TriState::Indeterminate);

  const MatrixFunction dead = diag_system({-1.0, 0.5});
  try {
    regularity_defect(dead, fundamental_system(dead, gz), z, 0);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
}

TEST_CASE("regularity defect on random diagonal systems") {
  testing_support::Gen gen(55);
  const TimeScale scales[] = {integers(1), union_scale(), random_syndetic(42, 1.0)};
  for (const TimeScale& t : scales) {
    const Grid g = build_grid(t, {0, 300}, 0.1);
    const double nu = t.nu_star();
    for (int trial = 0; trial < 50; ++trial) {
      const int n = gen.integer(1, 3);
      std::vector<double> d;
      for (int i = 0; i < n; ++i) d.push_back(gen.uniform(-nu + 0.2, 1.0));
      const MatrixFunction a = diag_system(d);
      const auto rd = regularity_defect(a, fundamental_system(a, g), t, g.front());
      CHECK(rd.defect >= -rd.band);
      CHECK(rd.nonnegative == TriState::True);
    }
  }
}
