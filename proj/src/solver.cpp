#include "chronoscale/solver.hpp"

#include "chronoscale/error.hpp"
#include "chronoscale/lyapunov.hpp"
#include "chronoscale/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace chronoscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// sup_k ||col_k|| e^{lambda t_k}, evaluated through logs.
double weighted_sup(const MatrixXd& m, const Grid& grid, double lambda) {
  double best = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = m.col(Eigen::Index(k)).norm();
    if (v == 0.0) continue;
    best = std::max(best, std::exp(std::log(v) + lambda * grid[k].t));
  }
  return best;
}

// sigma(t_k) as seen from the grid; the last point asks the scale.
double sigma_at(const Grid& grid, std::size_t k) {
  if (grid[k].mu == 0.0) return grid[k].t;
  return grid[k].t + grid[k].mu;
}

}  // namespace

// --- nonlinearity model ---------------------------------------------------------

VectorXd NonlinearityModel::operator()(double t, const VectorXd& x) const {
  VectorXd out = VectorXd::Zero(dim);
  for (const auto& c : components) out += c.g(t, x);
  return out;
}

NonlinearityModel NonlinearityModel::zero(int dim) {
  NonlinearityModel m;
  m.dim = dim;
  return m;
}

void check_nonlinearity(const NonlinearityModel& model, const Grid& grid, double radius,
                        int pairs, std::uint64_t seed) {
  const int dim = model.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  const double side = radius / std::sqrt(double(std::max(dim, 1)));
  auto random_point = [&] {
    VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = side * unit(rng);
    return v;
  };
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / 400);
  for (std::size_t j = 0; j < model.components.size(); ++j) {
    const auto& comp = model.components[j];
    const std::string who = comp.name.empty() ? "component " + std::to_string(j) : comp.name;
    for (std::size_t k = 0; k < grid.size(); k += stride) {
      const VectorXd g0 = comp.g(grid[k].t, VectorXd::Zero(dim));
      if (g0.size() != dim) {
        fail(ErrorKind::InvalidArgument, who + ": nonlinearity returns the wrong dimension");
      }
      if (g0.norm() > comp.h * (1 + 1e-9) + 1e-12) {
        fail(ErrorKind::InvalidArgument, who + ": ||g(t, 0)|| = " + num(g0.norm()) +
                                             " exceeds the declared h = " + num(comp.h) +
                                             " at t = " + num(grid[k].t));
      }
    }
    for (int p = 0; p < pairs; ++p) {
      const double t = grid[pick(rng)].t;
      const VectorXd x = random_point();
      const VectorXd y = random_point();
      const double lhs = (comp.g(t, x) - comp.g(t, y)).norm();
      if (lhs > comp.c * (x - y).norm() * (1 + 1e-9) + 1e-12) {
        fail(ErrorKind::InvalidArgument,
             who + ": Lipschitz estimate violated at t = " + num(t) + " (ratio " +
                 num(lhs / (x - y).norm()) + " > declared c = " + num(comp.c) + ")");
      }
    }
  }
}

ContractionConstants contraction_constants(const std::vector<double>& l,
                                           const NonlinearityModel& model) {
  ContractionConstants out;
  if (model.components.empty()) return out;
  if (l.size() != model.components.size()) {
    fail(ErrorKind::InvalidArgument, "one operator norm per nonlinearity component is required");
  }
  for (std::size_t j = 0; j < l.size(); ++j) {
    out.beta += l[j] * model.components[j].h;
    out.lambda += l[j] * model.components[j].c;
  }
  return out;
}

ContractionConstants contraction_constants(const std::vector<GreenOperator>& greens,
                                           const NonlinearityModel& model) {
  std::vector<double> l;
  for (const auto& g : greens) l.push_back(g.norm_estimate().value);
  return contraction_constants(l, model);
}

// --- contraction -------------------------------------------------------------------

BoundedSolution fixed_point_solve(const std::vector<GreenOperator>& greens,
                                  const NonlinearityModel& model, const SolverOptions& options) {
  if (greens.empty()) fail(ErrorKind::InvalidArgument, "fixed_point_solve: no Green operators");
  const Grid& grid = greens.front().grid();
  const int dim = greens.front().system().dim;
  if (model.dim != dim) fail(ErrorKind::InvalidArgument, "nonlinearity and system dimensions differ");
  if (!model.components.empty() && model.components.size() != greens.size()) {
    fail(ErrorKind::InvalidArgument, "one Green operator per nonlinearity component is required");
  }
  for (const auto& g : greens) {
    if (g.grid().size() != grid.size() || g.system().dim != dim) {
      fail(ErrorKind::InvalidArgument, "Green operators must share the grid and the system");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (g.grid()[k].t != grid[k].t) {
        fail(ErrorKind::InvalidArgument, "Green operators must share the grid");
      }
    }
  }

  ContractionReport rep;
  for (std::size_t j = 0; j < model.components.size(); ++j) {
    rep.l.push_back(greens[j].norm_estimate().value);
    rep.h.push_back(model.components[j].h);
    rep.c.push_back(model.components[j].c);
  }
  const ContractionConstants cc = contraction_constants(rep.l, model);
  rep.beta = cc.beta;
  rep.lambda = cc.lambda;
  rep.residual_tol = options.residual_tol;
  if (!cc.contracting()) {
    fail(ErrorKind::Refusal, "contraction hypothesis fails: lambda = sum L_j c_j = " +
                                 num(cc.lambda) + " >= 1");
  }
  rep.a_priori_bound = cc.beta / (1.0 - cc.lambda);
  rep.a_posteriori_error = options.tol * cc.lambda / (1.0 - cc.lambda);
  const double radius = model.ball_radius.value_or(2.0 * rep.a_priori_bound + 1.0);
  check_nonlinearity(model, grid, radius, options.check_pairs, options.seed);

  const std::size_t n = grid.size();
  MatrixXd x = MatrixXd::Zero(dim, Eigen::Index(n));
  MatrixXd samples(dim, Eigen::Index(n));
  for (int it = 1; it <= options.max_iter; ++it) {
    MatrixXd next = MatrixXd::Zero(dim, Eigen::Index(n));
    for (std::size_t j = 0; j < model.components.size(); ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        samples.col(Eigen::Index(k)) = model.components[j].g(grid[k].t, x.col(Eigen::Index(k)));
      }
      const GreenResult r = greens[j].apply(samples);
      next += r.trajectory.values;
      rep.max_tail = std::max(rep.max_tail, r.max_tail);
    }
    double update = 0.0;
    double sup = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      update = std::max(update, (next.col(Eigen::Index(k)) - x.col(Eigen::Index(k))).norm());
      sup = std::max(sup, next.col(Eigen::Index(k)).norm());
    }
    if (model.ball_radius && sup > *model.ball_radius * (1 + 1e-9)) {
      fail(ErrorKind::Divergence, "iterate " + std::to_string(it) + " left the ball of radius " +
                                      num(*model.ball_radius) + " (sup norm " + num(sup) + ")");
    }
    if (!rep.updates.empty() && rep.updates.back() > 0.0) {
      rep.ratios.push_back(update / rep.updates.back());
    }
    rep.updates.push_back(update);
    rep.iterations = it;
    rep.update = update;
    x.swap(next);
    if (update <= options.tol) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) {
    rep.message = "no convergence within " + std::to_string(options.max_iter) +
                  " iterations (last update " + num(rep.update) + ")";
  }

  Trajectory traj{grid, x};
  for (std::size_t k = 0; k < n; ++k) {
    samples.col(Eigen::Index(k)) = model(grid[k].t, x.col(Eigen::Index(k)));
  }
  rep.sup_norm = traj.sup_norm();
  rep.residual = residual(traj, greens.front().system(), samples);
  rep.residual_ok = rep.residual <= options.residual_tol;
  if (rep.converged && !rep.residual_ok) {
    rep.message = "residual " + num(rep.residual) + " above the gate " + num(options.residual_tol);
  }
  return {std::move(traj), std::move(rep)};
}

BoundedSolution hyperbolic_bounded_solve(const MatrixXd& a, const GrowthBound& nonlin,
                                         const TimeScale& scale, const Grid& grid,
                                         const SolverOptions& options) {
  const ProjectionFamily p = spectral_projections(a, grid);
  std::vector<GreenOperator> greens;
  greens.emplace_back(MatrixFunction::constant_matrix(a), p, scale, grid);
  const double l = greens.front().norm_estimate().value;
  if (nonlin.lambda0 * l >= 1.0) {
    fail(ErrorKind::Refusal,
         "lambda0 ||L|| = " + num(nonlin.lambda0 * l) +
             " >= 1: outside the contraction regime; existence there rests on a compactness "
             "argument that gives no algorithm");
  }
  NonlinearityModel model;
  model.dim = int(a.rows());
  model.components.push_back({nonlin.a, nonlin.beta0, nonlin.lambda0, "a"});
  return fixed_point_solve(greens, model, options);
}

// --- weighted spaces -----------------------------------------------------------------

double weighted_norm(const MatrixXd& samples, const Grid& grid, double lambda) {
  return weighted_sup(samples, grid, lambda);
}

double weighted_norm(const Trajectory& f, double lambda) {
  return weighted_sup(f.values, f.grid, lambda);
}

double lambda_select(double alpha, double beta, double gamma) {
  if (!(alpha > 0 && beta > 0 && gamma > 0) || !std::isfinite(alpha + beta + gamma)) {
    fail(ErrorKind::InvalidArgument, "lambda_select needs alpha, beta, gamma > 0");
  }
  const double lo = std::max(gamma / (1.0 + alpha), gamma - beta);
  if (!(lo < gamma)) fail(ErrorKind::InvalidArgument, "lambda_select: empty interval");
  return 0.5 * (lo + gamma);
}

double b_hat(double b, double mu) { return mu == 0.0 ? b : std::expm1(b * mu) / mu; }

const char* to_string(GreenBranch b) { return b == GreenBranch::Forward ? "forward" : "backward"; }

ForcingExtension extend_forcing_hat(const ScalarFunction& f, double b, double lambda,
                                    const Grid& grid) {
  const std::size_t n = grid.size();
  auto times = std::make_shared<std::vector<double>>(grid.times());
  auto factor = std::make_shared<std::vector<double>>(n, 1.0);
  auto jump = std::make_shared<std::vector<char>>(n, 0);
  ForcingExtension out;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!grid.is_jump(k)) continue;
    const double mu = grid.step(k);
    (*jump)[k] = 1;
    (*factor)[k] = b == 0.0 ? 1.0 : mu * b / -std::expm1(-b * mu);
    out.k = std::max(out.k, std::abs((*factor)[k]) * std::exp(lambda * mu));
  }
  out.gap_factor = *factor;
  out.value = [f, times, factor, jump](double t) {
    const auto& ts = *times;
    if (t < ts.front() - kTimeTol || t > ts.back() + kTimeTol) {
      fail(ErrorKind::InvalidArgument, "f-hat evaluated outside the grid window");
    }
    auto it = std::upper_bound(ts.begin(), ts.end(), t + kTimeTol);
    const std::size_t k = std::size_t(std::distance(ts.begin(), it)) - 1;
    if ((*jump)[k] && t > ts[k] + kTimeTol) return (*factor)[k] * f(ts[k]);
    return f(t);
  };
  return out;
}

namespace {

ScalarGreenResult scalar_green_core(double b, const MatrixXd& samples, const MatrixXd& mids,
                                    double gamma, double gamma_norm, const TimeScale& scale,
                                    const Grid& grid, const ScalarGreenOptions& options) {
  if (!(gamma > 0)) fail(ErrorKind::InvalidArgument, "scalar_green_gamma needs gamma > 0");
  if (b > -gamma && b < 0) {
    fail(ErrorKind::Refusal, "exponent b = " + num(b) + " lies in (-gamma, 0) = (" + num(-gamma) +
                                 ", 0): neither integral maps C_gamma into C_lambda");
  }
  const std::size_t n = grid.size();
  ScalarGreenResult out{Trajectory{grid, MatrixXd::Zero(1, Eigen::Index(n))}, GreenBranch::Forward,
                        std::vector<double>(n, 0.0), 0};
  MatrixXd& h = out.h.values;
  if (b <= -gamma) {
    double y = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double fk = samples(0, Eigen::Index(k));
      if (grid.is_jump(k)) {
        y = std::exp(b * grid.step(k)) * y + grid.step(k) * fk;
      } else {
        const double s = grid.step(k);
        const double e = std::exp(b * s);
        y = e * y + s / 6.0 *
                        (e * fk + 4.0 * std::exp(0.5 * b * s) * mids(0, Eigen::Index(k)) +
                         samples(0, Eigen::Index(k + 1)));
      }
      h(0, Eigen::Index(k + 1)) = y;
    }
    out.certified = n;
  } else {
    out.branch = GreenBranch::Backward;
    double j = 0.0;
    for (std::size_t k = n - 1; k-- > 0;) {
      const double fk = samples(0, Eigen::Index(k));
      if (grid.is_jump(k)) {
        j = std::exp(-b * grid.step(k)) * (j + grid.step(k) * fk);
      } else {
        const double s = grid.step(k);
        const double e = std::exp(-b * s);
        j = e * j + s / 6.0 *
                        (fk + 4.0 * std::exp(-0.5 * b * s) * mids(0, Eigen::Index(k)) +
                         e * samples(0, Eigen::Index(k + 1)));
      }
      h(0, Eigen::Index(k)) = -j;
    }
    const double t_end = grid.back();
    if (t_end < scale.sup() - kTimeTol) {
      const double mu_star = scale.mu_star();
      if (!std::isfinite(mu_star)) {
        fail(ErrorKind::Refusal, "backward tail cannot be bounded on a non-syndetic time scale");
      }
      // |int_T^inf e^{b(t - sigma(s))} f(s) Ds| <= ||f||_gamma e^{b(t-T)} e^{gamma mu*} e^{-gamma T} / gamma
      out.certified = 0;
      for (std::size_t k = 0; k < n; ++k) {
        out.tail[k] = gamma_norm == 0.0
                          ? 0.0
                          : std::exp(std::log(gamma_norm) + b * (grid[k].t - t_end) +
                                     gamma * mu_star - gamma * t_end - std::log(gamma));
        if (out.tail[k] <= options.tail_tol) ++out.certified;
      }
      if (out.certified == 0) {
        fail(ErrorKind::Numerical, "backward tail not certifiable on the window (bound at start " +
                                       num(out.tail.front()) + ")");
      }
    } else {
      out.certified = n;
    }
  }
  return out;
}

}  // namespace

ScalarGreenResult scalar_green_gamma(double b, const MatrixXd& samples, double gamma,
                                     double gamma_norm, const TimeScale& scale, const Grid& grid,
                                     const ScalarGreenOptions& options) {
  if (samples.rows() != 1 || std::size_t(samples.cols()) != grid.size()) {
    fail(ErrorKind::InvalidArgument, "scalar_green_gamma: samples must be 1 x grid size");
  }
  return scalar_green_core(b, samples, interpolate_midpoints(samples, grid), gamma, gamma_norm,
                           scale, grid, options);
}

ScalarGreenResult scalar_green_gamma(double b, const ScalarFunction& f, double gamma,
                                     const TimeScale& scale, const Grid& grid,
                                     const ScalarGreenOptions& options) {
  const std::size_t n = grid.size();
  MatrixXd samples(1, Eigen::Index(n));
  MatrixXd mids = MatrixXd::Zero(1, Eigen::Index(std::max<std::size_t>(n, 2) - 1));
  for (std::size_t k = 0; k < n; ++k) samples(0, Eigen::Index(k)) = f(grid[k].t);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!grid.is_jump(k)) mids(0, Eigen::Index(k)) = f(0.5 * (grid[k].t + grid[k + 1].t));
  }
  return scalar_green_core(b, samples, mids, gamma, weighted_sup(samples, grid, gamma), scale,
                           grid, options);
}

double scalar_green_constant(double b, double gamma, double lambda, const TimeScale& scale,
                             const Grid& grid, const ScalarGreenOptions& options) {
  const ScalarGreenResult r =
      scalar_green_gamma(b, [gamma](double s) { return std::exp(-gamma * s); }, gamma, scale,
                         grid, options);
  double c = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = std::abs(r.h.values(0, Eigen::Index(k))) + r.tail[k];
    if (v > 0.0) c = std::max(c, std::exp(std::log(v) + lambda * grid[k].t));
  }
  return c;
}

std::vector<double> forward_green_by_extension(double b, const ScalarFunction& f,
                                               const Grid& grid) {
  const ForcingExtension ext = extend_forcing_hat(f, b, 0.0, grid);
  const std::size_t n = grid.size();
  std::vector<double> h(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double s = grid.step(k);
    const double e = std::exp(b * s);
    if (grid.is_jump(k)) {
      // f-hat is constant on the gap: int e^{b(t_{k+1} - u)} du = expm1(b s)/b.
      const double w = b == 0.0 ? s : std::expm1(b * s) / b;
      h[k + 1] = e * h[k] + ext.gap_factor[k] * f(grid[k].t) * w;
    } else {
      const double tm = 0.5 * (grid[k].t + grid[k + 1].t);
      h[k + 1] = e * h[k] + s / 6.0 *
                                (e * f(grid[k].t) + 4.0 * std::exp(0.5 * b * s) * f(tm) +
                                 f(grid[k + 1].t));
    }
  }
  return h;
}

// --- decay theorem ---------------------------------------------------------------

VectorXd decay_builtin(const DecayModel& m, double t, const VectorXd& x) {
  const Eigen::Index n = x.size();
  const VectorXd u = VectorXd::Ones(n) / std::sqrt(double(n));
  const double r = x.norm();
  return (m.c1 * std::pow(r, 1.0 + m.alpha) + m.h * std::exp(-m.gamma * t)) * u +
         m.c2 * std::exp(-m.beta * t) * x;
}

MatrixFunction b_hat_system(const VectorXd& b, const Grid& grid) {
  MatrixFunction m;
  m.dim = int(b.size());
  m.eval = [b, grid](double t) {
    const double mu = grid.mu_at(t);
    MatrixXd out = MatrixXd::Zero(b.size(), b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) out(i, i) = b_hat(b[i], mu);
    return out;
  };
  m.dense_eval = [b](double) { return MatrixXd(b.asDiagonal()); };
  m.bound = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    m.bound = std::max(m.bound, std::max(std::abs(b[i]), std::abs(b_hat(b[i], grid.h()))));
  }
  return m;
}

DecaySolution regular_decay_solve(const VectorXd& b, const std::optional<MatrixFunction>& l,
                                  const DecayModel& model, const TimeScale& scale,
                                  const Grid& grid, const SolverOptions& options) {
  const int n = int(b.size());
  if (n == 0) fail(ErrorKind::InvalidArgument, "regular_decay_solve: empty B");
  if (!(model.alpha > 0 && model.beta > 0 && model.gamma > 0) || model.c1 < 0 || model.c2 < 0 ||
      model.h < 0) {
    fail(ErrorKind::InvalidArgument, "decay model needs alpha, beta, gamma > 0 and c1, c2, h >= 0");
  }
  if (!scale.is_syndetic()) {
    fail(ErrorKind::Refusal, "time scale is not syndetic: the weighted Green operator is unbounded");
  }
  if (grid.front() < -kTimeTol) {
    fail(ErrorKind::InvalidArgument, "decay solver works on the nonnegative half of the scale");
  }
  if (l && l->dim != n) fail(ErrorKind::InvalidArgument, "transformation dimension differs from B");

  DecayReport rep;
  rep.residual_tol = options.residual_tol;
  rep.gamma = model.gamma;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (b[i] > -rep.gamma && b[i] < 0) rep.gamma = -b[i];
  }
  rep.lambda = lambda_select(model.alpha, model.beta, rep.gamma);

  double c2sum = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double ci = scalar_green_constant(b[i], rep.gamma, rep.lambda, scale, grid);
    rep.component_constants.push_back(ci);
    rep.branches.push_back(to_string(b[i] <= -rep.gamma ? GreenBranch::Forward : GreenBranch::Backward));
    c2sum += ci * ci;
  }
  rep.c_gamma_lambda = std::sqrt(c2sum);
  const double cgl = rep.c_gamma_lambda;

  const std::size_t npts = grid.size();
  std::vector<MatrixXd> lk, lsig_inv;
  double lsup = 1.0, linv_sup = 1.0;
  if (l) {
    lsup = 0.0;
    linv_sup = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
      lk.push_back(l->eval(grid[k].t));
      Eigen::FullPivLU<MatrixXd> lu(l->eval(sigma_at(grid, k)));
      if (!lu.isInvertible()) {
        fail(ErrorKind::Numerical, "transformation L is singular at t = " + num(sigma_at(grid, k)));
      }
      lsig_inv.push_back(lu.inverse());
      lsup = std::max(lsup, op_norm(lk.back()));
      linv_sup = std::max(linv_sup, op_norm(lsig_inv.back()));
    }
  }
  const double c1 = linv_sup * model.c1 * std::pow(lsup, 1.0 + model.alpha);
  const double c2 = linv_sup * model.c2 * lsup;
  const double hh = linv_sup * model.h;

  // Smallest kappa with kappa = C h / (1 - C (c1 kappa^alpha + c2)).
  double kappa = cgl * hh;
  bool settled = hh == 0.0;
  for (int i = 0; i < 1000 && !settled; ++i) {
    const double den = 1.0 - cgl * (c1 * std::pow(kappa, model.alpha) + c2);
    if (!(den > 0.0)) break;
    const double next = cgl * hh / den;
    settled = std::abs(next - kappa) <= 1e-14 * (1.0 + next);
    kappa = next;
  }
  if (!settled || !std::isfinite(kappa)) {
    fail(ErrorKind::Refusal, "no finite kappa: C_{gamma,lambda} = " + num(cgl) + ", c1 = " +
                                 num(c1) + ", c2 = " + num(c2) + ", h = " + num(hh) +
                                 " do not admit an invariant ball");
  }
  rep.kappa = kappa;

  DecayModel builtin = model;
  const Nonlinearity a = model.a ? model.a : Nonlinearity([builtin](double t, const VectorXd& x) {
    return decay_builtin(builtin, t, x);
  });

  {
    // Spot-check the declared growth bound.
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, npts - 1);
    const double side = std::max(1.0, 2.0 * kappa) / std::sqrt(double(n));
    for (int p = 0; p < options.check_pairs; ++p) {
      const double t = grid[pick(rng)].t;
      VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = side * unit(rng);
      const double r = x.norm();
      const double lhs = a(t, x).norm();
      const double rhs = model.c1 * std::pow(r, 1.0 + model.alpha) +
                         model.c2 * std::exp(-model.beta * t) * r + model.h * std::exp(-model.gamma * t);
      if (lhs > rhs * (1 + 1e-9) + 1e-15) {
        fail(ErrorKind::InvalidArgument, "nonlinearity exceeds the declared growth bound at t = " +
                                             num(t) + " (" + num(lhs) + " > " + num(rhs) + ")");
      }
    }
  }

  auto forcing = [&](const MatrixXd& y) {
    MatrixXd f(n, Eigen::Index(npts));
    for (std::size_t k = 0; k < npts; ++k) {
      const VectorXd yk = y.col(Eigen::Index(k));
      if (l) {
        f.col(Eigen::Index(k)) = lsig_inv[k] * a(grid[k].t, lk[k] * yk);
      } else {
        f.col(Eigen::Index(k)) = a(grid[k].t, yk);
      }
    }
    return f;
  };

  MatrixXd y = MatrixXd::Zero(n, Eigen::Index(npts));
  for (int it = 1; it <= options.max_iter; ++it) {
    const MatrixXd f = forcing(y);
    MatrixXd next(n, Eigen::Index(npts));
    for (int i = 0; i < n; ++i) {
      const MatrixXd row = f.row(i);
      const double gnorm = weighted_sup(row, grid, rep.gamma);
      const ScalarGreenResult r = scalar_green_gamma(b[i], row, rep.gamma, gnorm, scale, grid);
      next.row(i) = r.h.values;
      for (std::size_t k = 0; k < npts; ++k) {
        if (r.tail[k] > 0.0) {
          rep.max_weighted_tail =
              std::max(rep.max_weighted_tail, std::exp(std::log(r.tail[k]) + rep.lambda * grid[k].t));
        }
      }
    }
    const double norm = weighted_sup(next, grid, rep.lambda);
    if (norm > kappa * (1 + 1e-9) + 1e-300) {
      fail(ErrorKind::Divergence, "iterate " + std::to_string(it) + " left the kappa ball: ||y||_lambda = " +
                                      num(norm) + " > kappa = " + num(kappa) + " (C_{gamma,lambda} = " +
                                      num(cgl) + ")");
    }
    const double update = weighted_sup(next - y, grid, rep.lambda);
    rep.updates.push_back(update);
    rep.update = update;
    rep.iterations = it;
    y.swap(next);
    if (update <= options.tol) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) {
    rep.message = "no convergence within " + std::to_string(options.max_iter) + " iterations";
  }

  // Residual in the reduced coordinates, where the linear part is B-hat.
  const Trajectory ytraj{grid, y};
  rep.residual = residual(ytraj, b_hat_system(b, grid), forcing(y));
  rep.residual_ok = rep.residual <= options.residual_tol;

  MatrixXd x = y;
  if (l) {
    for (std::size_t k = 0; k < npts; ++k) x.col(Eigen::Index(k)) = lk[k] * y.col(Eigen::Index(k));
  }
  rep.c = weighted_sup(x, grid, rep.lambda);

  // Least-squares slope of log|x| over the second half of the window.
  const double t_half = 0.5 * (grid.front() + grid.back());
  double st = 0, sl = 0, stt = 0, stl = 0;
  int cnt = 0;
  for (std::size_t k = 0; k < npts; ++k) {
    const double v = x.col(Eigen::Index(k)).norm();
    if (grid[k].t < t_half || v == 0.0) continue;
    const double lg = std::log(v);
    st += grid[k].t;
    sl += lg;
    stt += grid[k].t * grid[k].t;
    stl += grid[k].t * lg;
    ++cnt;
  }
  if (cnt >= 2 && stt * cnt - st * st > 0) {
    rep.decay_exponent = -(cnt * stl - st * sl) / (cnt * stt - st * st);
  } else {
    rep.decay_exponent = kInf;  // identically zero tail
  }
  if (rep.converged && !rep.residual_ok) {
    rep.message = "residual " + num(rep.residual) + " above the gate " + num(options.residual_tol);
  }
  return {Trajectory{grid, std::move(x)}, std::move(rep)};
}

ReductionReport reduce_regular_check(const MatrixFunction& a, const MatrixFunction& l,
                                     const VectorXd& b, const Grid& grid, double tol,
                                     double eps_exp) {
  const std::size_t n = grid.size();
  const int dim = int(b.size());
  if (a.dim != dim || l.dim != dim) {
    fail(ErrorKind::InvalidArgument, "reduce_regular_check: dimensions of A, L and B differ");
  }
  ReductionReport rep;
  rep.tol = tol;
  rep.eps_exp = eps_exp;

  std::vector<MatrixXd> lk(n), lk_inv(n);
  std::vector<double> log_l(n), log_l_inv(n);
  for (std::size_t k = 0; k < n; ++k) {
    lk[k] = l.eval(grid[k].t);
    Eigen::FullPivLU<MatrixXd> lu(lk[k]);
    if (!lu.isInvertible()) {
      fail(ErrorKind::Numerical, "transformation L is singular at t = " + num(grid[k].t));
    }
    lk_inv[k] = lu.inverse();
    log_l[k] = std::log(op_norm(lk[k]));
    log_l_inv[k] = std::log(op_norm(lk_inv[k]));
  }

  const TransitionTable table(a, grid);
  const std::size_t anchors = std::min<std::size_t>(16, n - 1);
  rep.cauchy_error = 0.0;
  for (std::size_t ai = 0; ai < anchors; ++ai) {
    const std::size_t i0 = ai * (n - 1) / anchors;
    MatrixXd phi = MatrixXd::Identity(dim, dim);
    for (std::size_t k = i0; k + 1 < n; ++k) {
      phi = table.step(k) * phi;
      const MatrixXd reduced = lk_inv[k + 1] * phi * lk[i0];
      VectorXd expected(dim);
      for (int i = 0; i < dim; ++i) expected[i] = std::exp(b[i] * (grid[k + 1].t - grid[i0].t));
      const MatrixXd e = expected.asDiagonal();
      const double err = (reduced - e).norm() / std::max(e.norm(), 1e-300);
      rep.cauchy_error = std::max(rep.cauchy_error, err);
    }
  }

  rep.upsilon_l = classic_exponent(log_l, grid).value;
  rep.upsilon_l_inv = classic_exponent(log_l_inv, grid).value;
  const bool cauchy_ok = rep.cauchy_error <= tol;
  const bool exp_ok = std::abs(rep.upsilon_l) <= eps_exp && std::abs(rep.upsilon_l_inv) <= eps_exp;
  rep.pass = cauchy_ok && exp_ok;
  if (!cauchy_ok) {
    rep.message = "reduced Cauchy matrix differs from exp(B(t - tau)) by " + num(rep.cauchy_error);
  } else if (!exp_ok) {
    rep.message = "Lyapunov exponents of L, L^{-1} (" + num(rep.upsilon_l) + ", " +
                  num(rep.upsilon_l_inv) + ") exceed " + num(eps_exp);
  }
  return rep;
}

NonSyndeticDiagnostic nonsyndetic_diagnostic(const TimeScale& scale, const Grid& grid, double b,
                                             double gamma, double lambda) {
  const std::size_t n = grid.size();
  if (n < 2) fail(ErrorKind::InvalidArgument, "nonsyndetic_diagnostic needs at least two points");
  NonSyndeticDiagnostic out;
  out.mu_star = scale.mu_star();

  // c_j = log int over step j of e^{-b sigma(s) - gamma s} Ds.
  const double r = b + gamma;
  std::vector<double> c(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double tj = grid[j].t;
    const double s = grid.step(j);
    if (grid.is_jump(j)) {
      c[j] = std::log(s) - b * (tj + s) - gamma * tj;
    } else {
      c[j] = -r * tj + (r == 0.0 ? std::log(s) : std::log(-std::expm1(-r * s) / r));
    }
  }
  // The last grid point only closes the window; the profile covers the others.
  std::vector<double> suffix(n - 1, -kInf);
  double acc = -kInf;
  for (std::size_t j = n - 1; j-- > 0;) {
    acc = log_add(c[j], acc);
    suffix[j] = acc;
  }
  out.monotone = true;
  double best = -kInf;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double lv = (lambda + b) * grid[k].t + suffix[k];
    out.times.push_back(grid[k].t);
    out.log_profile.push_back(lv);
    if (k > 0 && !(lv > best)) out.monotone = false;
    best = std::max(best, lv);
    out.running_max.push_back(best);
  }
  out.max_value = std::exp(best);

  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double tj = grid[j].t;
    const double s = grid.step(j);
    sum += grid.is_jump(j) ? s * std::exp(-tj) : std::exp(-tj) * -std::expm1(-s);
  }
  out.literal_sum = sum;
  return out;
}

}  // namespace chronoscale
