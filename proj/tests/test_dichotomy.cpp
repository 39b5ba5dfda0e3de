#include "chronoscale/dichotomy.hpp"
#include "chronoscale/error.hpp"
#include "chronoscale/scales.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace chronoscale;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixFunction scalar(double a) { return MatrixFunction::constant_matrix(MatrixXd::Constant(1, 1, a)); }
ProjectionFamily scalar_projection(double p) {
  return ProjectionFamily::constant_projection(MatrixXd::Constant(1, 1, p));
}
Forcing ones(int dim) { return constant_forcing(VectorXd::Ones(dim)); }

MatrixXd diag2(double a, double b) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("stable scalar example on the naturals") {
  const TimeScale t = naturals(1);
  const Grid g = build_grid(t, {0, 40}, 1);
  const GreenOperator op(scalar(-0.5), scalar_projection(1), t, g);
  const auto r = op.apply(ones(1));
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(r.trajectory.values(0, Eigen::Index(i)) - 2 * (1 - std::ldexp(1.0, -int(i)))) <= 1e-12);
  }
  CHECK(r.max_tail == 0.0);
  const auto zero = op.apply(zero_forcing(1));
  CHECK(zero.trajectory.values.isZero(0.0));

  const auto est = op.norm_estimate();
  CHECK(std::abs(est.value - 2.0) <= 0.02);
  CHECK(op.verify(ones(1), 1e-9).pass);
}

TEST_CASE("unstable scalar example: backward geometric series") {
  const TimeScale t = integers(1);
  const Grid g = build_grid(t, {-10, 60}, 1);
  const GreenOperator op(scalar(1), scalar_projection(0), t, g);
  CHECK(op.truncated());
  const auto r = op.apply(ones(1));
  std::size_t checked = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (r.tail_bound[i] > 1e-8) continue;
    CHECK(std::abs(r.trajectory.values(0, Eigen::Index(i)) + 1.0) <= 1e-8);
    // Independent oracle: truncated backward sum.
    double s = 0;
    for (std::size_t j = i; j + 1 < g.size(); ++j) s += std::ldexp(1.0, int(i) - int(j) - 1);
    CHECK(std::abs(r.trajectory.values(0, Eigen::Index(i)) + s) <= 1e-13);
    ++checked;
  }
  CHECK(checked > 30);
  CHECK(r.certified == checked);
  CHECK(op.norm_estimate().value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("real line norm estimate") {
  const TimeScale t = real_line();
  const Grid g = build_grid(t, {0, 40}, 0.05);
  const GreenOperator op(scalar(-1), scalar_projection(1), t, g);
  CHECK(std::abs(op.norm_estimate().value - 1.0) <= 0.02);
}

TEST_CASE("no dichotomy is reported as divergence") {
  const TimeScale t = naturals(1);
  const Grid g = build_grid(t, {0, 200}, 1);
  const GreenOperator op(scalar(0), scalar_projection(1), t, g);
  CHECK_THROWS_AS(op.norm_estimate(), Error);
  try {
    op.norm_estimate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
  }
}

TEST_CASE("two dimensional hyperbolic system") {
  const TimeScale t = integers(1);
  const Grid g = build_grid(t, {0, 60}, 1);
  const MatrixXd a = diag2(-0.5, 1.0);
  const ProjectionFamily p = spectral_projections(a, g);
  CHECK((p.p(0) - diag2(1, 0)).norm() <= 1e-12);
  const GreenOperator op(MatrixFunction::constant_matrix(a), p, t, g);
  const Forcing f = [](double s) {
    VectorXd v(2);
    v << std::sin(s), std::cos(0.3 * s) + 0.5;
    return v;
  };
  CHECK(op.verify(f, 1e-6).pass);

  // Negative control: projections swapped.
  const GreenOperator swapped(MatrixFunction::constant_matrix(a),
                              ProjectionFamily::constant_projection(diag2(0, 1)), t, g);
  CHECK_FALSE(swapped.verify(f, 1e-6).pass);
  CHECK_THROWS_AS(swapped.norm_estimate(), Error);
}

TEST_CASE("spectral projections") {
  const Grid r = build_grid(real_line(), {0, 10}, 0.1);
  CHECK((spectral_projections(diag2(-1, 2), r).p(0) - diag2(1, 0)).norm() <= 1e-12);
  const Grid z = build_grid(integers(1), {0, 10}, 1);
  CHECK_THROWS_AS(spectral_projections(MatrixXd::Zero(1, 1), z), Error);

  MatrixXd rot(2, 2);
  rot << -0.2, 1.0, -1.0, -0.2;  // complex pair, stable on R
  CHECK((spectral_projections(rot, r).p(0) - MatrixXd::Identity(2, 2)).norm() <= 1e-10);

  MatrixXd mixed(2, 2);
  mixed << 0.5, 2.0, 0.0, -1.5;
  const ProjectionFamily p = spectral_projections(mixed, r);
  CHECK(p.idempotency_defect(r) <= 1e-10);
  const MatrixXd pm = p.p(0);
  CHECK((mixed * pm - pm * mixed).norm() <= 1e-10);
}

TEST_CASE("green operator properties") {
  testing_support::Gen gen(17);
  const TimeScale scales[] = {integers(1), union_scale(), random_syndetic(3, 1.0)};
  for (const TimeScale& t : scales) {
    const Grid g = build_grid(t, {0, 40}, 0.01);
    MatrixXd a(2, 2);
    a << -0.6, 0.3, 0.0, 0.8;
    const ProjectionFamily p = spectral_projections(a, g);
    const GreenOperator op(MatrixFunction::constant_matrix(a), p, t, g);
    const double bound = op.norm_estimate().value;

    auto random_forcing = [&gen]() {
      const double a1 = gen.uniform(-1, 1), a2 = gen.uniform(-1, 1);
      const double w1 = gen.uniform(0.1, 3), w2 = gen.uniform(0.1, 3);
      return Forcing([=](double s) {
        VectorXd v(2);
        v << a1 * std::sin(w1 * s), a2 * std::cos(w2 * s);
        return v;
      });
    };
    const Forcing f = random_forcing();
    const Forcing h = random_forcing();
    const auto lf = op.apply(f).trajectory.values;
    const auto lh = op.apply(h).trajectory.values;
    const Forcing comb = [&](double s) { return VectorXd(2.0 * f(s) - 0.7 * h(s)); };
    const auto lc = op.apply(comb).trajectory.values;
    CHECK((lc - (2.0 * lf - 0.7 * lh)).cwiseAbs().maxCoeff() <= 1e-9);

    for (int trial = 0; trial < 100; ++trial) {
      const Forcing fr = random_forcing();
      const auto r = op.apply(fr);
      const MatrixXd samples = sample_forcing(fr, 2, g);
      double fsup = 0;
      for (Eigen::Index i = 0; i < samples.cols(); ++i) fsup = std::max(fsup, samples.col(i).norm());
      CHECK(r.trajectory.sup_norm() <= bound * fsup * (1 + 1e-12) + 1e-14);
    }
    CHECK(op.verify(f, 1e-6).pass);
  }
}

TEST_CASE("P equal to E reduces to variation of constants") {
  const TimeScale t = union_scale();
  const Grid g = build_grid(t, {0, 12}, 0.02);
  MatrixFunction a;
  a.dim = 2;
  a.eval = [](double s) {
    MatrixXd m(2, 2);
    m << -0.5, std::sin(s), 0.1, -0.8;
    return m;
  };
  const Forcing f = [](double s) {
    VectorXd v(2);
    v << 1.0, std::cos(s);
    return v;
  };
  const GreenOperator op(a, ProjectionFamily::constant_projection(MatrixXd::Identity(2, 2)), t, g);
  const auto l = op.apply(f).trajectory.values;
  const auto vc = variation_of_constants(a, f, 0, VectorXd::Zero(2), g).values;
  CHECK((l - vc).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("sampled forcing uses interpolated midpoints") {
  const TimeScale t = real_line();
  const Grid g = build_grid(t, {0, 20}, 0.02);
  const GreenOperator op(scalar(-1), scalar_projection(1), t, g);
  const Forcing f = [](double s) { return VectorXd::Constant(1, std::sin(s)); };
  const auto exact = op.apply(f).trajectory.values;
  const auto sampled = op.apply(sample_forcing(f, 1, g)).trajectory.values;
  CHECK((exact - sampled).cwiseAbs().maxCoeff() <= 1e-8);
}
