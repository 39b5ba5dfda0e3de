#include "chronoscale/linsys.hpp"

#include "chronoscale/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace chronoscale {

namespace {

void check_dim(const Eigen::MatrixXd& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    fail(ErrorKind::InvalidArgument, std::string(what) + ": matrix has shape " +
                                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                         ", expected " + std::to_string(dim));
  }
}

void check_vec(const Eigen::VectorXd& v, int dim, const char* what) {
  if (v.size() != dim) {
    fail(ErrorKind::InvalidArgument, std::string(what) + ": vector has length " +
                                         std::to_string(v.size()) + ", expected " +
                                         std::to_string(dim));
  }
}

Eigen::VectorXd rk4_affine(const MatrixFunction& a, const Forcing& f, double t, double h,
                           const Eigen::VectorXd& x) {
  auto rhs = [&](double s, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return a.dense(s) * y + f(s);
  };
  const Eigen::VectorXd k1 = rhs(t, x);
  const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

MatrixFunction MatrixFunction::constant_matrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorKind::InvalidArgument, "system matrix must be square and non-empty");
  }
  MatrixFunction m;
  m.dim = int(a.rows());
  m.eval = [a](double) { return a; };
  m.bound = a.jacobiSvd().singularValues()(0);
  m.constant = true;
  return m;
}

Forcing zero_forcing(int dim) {
  return [dim](double) { return Eigen::VectorXd::Zero(dim).eval(); };
}

Forcing constant_forcing(const Eigen::VectorXd& v) {
  return [v](double) { return v; };
}

std::vector<double> Trajectory::component(int j) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = values(j, Eigen::Index(i));
  return out;
}

double Trajectory::sup_norm() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < values.cols(); ++i) m = std::max(m, values.col(i).norm());
  return m;
}

Eigen::MatrixXd rk4_propagator(const MatrixFunction& a, double t, double h) {
  const int n = a.dim;
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a0 = a.dense(t);
  const Eigen::MatrixXd am = a.dense(t + 0.5 * h);
  const Eigen::MatrixXd a1 = a.dense(t + h);
  const Eigen::MatrixXd k1 = a0;
  const Eigen::MatrixXd k2 = am * (e + 0.5 * h * k1);
  const Eigen::MatrixXd k3 = am * (e + 0.5 * h * k2);
  const Eigen::MatrixXd k4 = a1 * (e + h * k3);
  return e + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// --- TransitionTable --------------------------------------------------------

TransitionTable::TransitionTable(const MatrixFunction& a, const Grid& grid)
    : grid_(grid), dim_(a.dim) {
  if (dim_ <= 0) fail(ErrorKind::InvalidArgument, "system dimension must be positive");
  const std::size_t steps = grid.size() - 1;
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(dim_, dim_);
  steps_.resize(steps);
  first_half_.resize(steps);
  second_half_.resize(steps);
  inverse_.resize(steps);
  first_half_inverse_.resize(steps);
  invertible_.assign(steps, 0);
  for (std::size_t k = 0; k < steps; ++k) {
    const GridPoint& g = grid[k];
    if (grid.is_jump(k)) {
      const Eigen::MatrixXd ak = a(g.t);
      check_dim(ak, dim_, "transition table");
      steps_[k] = e + g.mu * ak;
    } else {
      const double h = grid.step(k);
      steps_[k] = rk4_propagator(a, g.t, h);
      check_dim(steps_[k], dim_, "transition table");
      first_half_[k] = rk4_propagator(a, g.t, 0.5 * h);
      second_half_[k] = rk4_propagator(a, g.t + 0.5 * h, 0.5 * h);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(steps_[k]);
    const double det = lu.determinant();
    if (std::abs(det) > 1e-12 && lu.isInvertible()) {
      invertible_[k] = 1;
      inverse_[k] = lu.inverse();
      if (!grid.is_jump(k)) first_half_inverse_[k] = first_half_[k].inverse();
    }
  }
}

bool TransitionTable::invertible(std::size_t k) const { return invertible_.at(k) != 0; }

const Eigen::MatrixXd& TransitionTable::step_inverse(std::size_t k) const {
  if (!invertible(k)) {
    fail(ErrorKind::Numerical, "E + mu A is singular at t = " + std::to_string(grid_[k].t) +
                                   "; backward Cauchy matrix undefined");
  }
  return inverse_[k];
}

const Eigen::MatrixXd& TransitionTable::first_half_inverse(std::size_t k) const {
  step_inverse(k);
  return first_half_inverse_[k];
}

Eigen::MatrixXd TransitionTable::phi(std::size_t j, std::size_t i) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim_, dim_);
  if (j >= i) {
    for (std::size_t k = i; k < j; ++k) m = steps_[k] * m;
  } else {
    for (std::size_t k = j; k < i; ++k) m = m * step_inverse(k);
  }
  return m;
}

// --- solvers ----------------------------------------------------------------

Trajectory step_ivp(const MatrixFunction& a, const Forcing& f, double t0,
                    const Eigen::VectorXd& x0, const Grid& grid) {
  check_vec(x0, a.dim, "step_ivp initial value");
  if (std::abs(grid.front() - t0) > kTimeTol) {
    fail(ErrorKind::InvalidArgument, "step_ivp: the grid must start at t0");
  }
  Eigen::MatrixXd values(a.dim, Eigen::Index(grid.size()));
  values.col(0) = x0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const GridPoint& g = grid[k];
    const Eigen::VectorXd x = values.col(Eigen::Index(k));
    if (grid.is_jump(k)) {
      const Eigen::MatrixXd ak = a(g.t);
      check_dim(ak, a.dim, "step_ivp");
      const Eigen::VectorXd fk = f(g.t);
      check_vec(fk, a.dim, "step_ivp forcing");
      values.col(Eigen::Index(k + 1)) = x + g.mu * (ak * x + fk);
    } else {
      values.col(Eigen::Index(k + 1)) = rk4_affine(a, f, g.t, grid.step(k), x);
    }
  }
  return {grid, std::move(values)};
}

Eigen::MatrixXd cauchy_matrix(const MatrixFunction& a, double t, double s, const Grid& grid) {
  const std::size_t it = grid.index_of(t);
  const std::size_t is = grid.index_of(s);
  const auto lo = std::min(it, is);
  const auto hi = std::max(it, is);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(a.dim, a.dim);
  const Eigen::MatrixXd e = m;
  for (std::size_t k = lo; k < hi; ++k) {
    const GridPoint& g = grid[k];
    const Eigen::MatrixXd step =
        grid.is_jump(k) ? Eigen::MatrixXd(e + g.mu * a(g.t)) : rk4_propagator(a, g.t, grid.step(k));
    m = step * m;
  }
  if (it >= is) return m;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible() || std::abs(lu.determinant()) <= 1e-300) {
    fail(ErrorKind::Numerical, "cauchy_matrix: t < s and the system is not regressive on [t, s]");
  }
  return lu.inverse();
}

RegressiveReport regressive_check(const MatrixFunction& a, const Grid& grid, double det_tol) {
  RegressiveReport r{true, std::nullopt, kInf};
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(a.dim, a.dim);
  for (const GridPoint& g : grid.points()) {
    if (g.mu <= 0.0) continue;
    const double d = std::abs((e + g.mu * a(g.t)).determinant());
    r.min_abs_det = std::min(r.min_abs_det, d);
    if (!(d > det_tol) && r.regressive) {
      r.regressive = false;
      r.first_failure = g.t;
    }
  }
  return r;
}

Trajectory variation_of_constants(const MatrixFunction& a, const Forcing& f, double t0,
                                  const Eigen::VectorXd& x0, const Grid& grid) {
  check_vec(x0, a.dim, "variation_of_constants initial value");
  if (std::abs(grid.front() - t0) > kTimeTol) {
    fail(ErrorKind::InvalidArgument, "variation_of_constants: the grid must start at t0");
  }
  const TransitionTable table(a, grid);
  // hom: Phi(t, t0) x0; inh: the Delta integral, both advanced step by step.
  Eigen::VectorXd hom = x0;
  Eigen::VectorXd inh = Eigen::VectorXd::Zero(a.dim);
  Eigen::MatrixXd values(a.dim, Eigen::Index(grid.size()));
  values.col(0) = x0;
  Eigen::VectorXd fk = f(grid[0].t);
  check_vec(fk, a.dim, "variation_of_constants forcing");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const GridPoint& g = grid[k];
    const Eigen::VectorXd fnext = f(grid[k + 1].t);
    hom = table.step(k) * hom;
    if (grid.is_jump(k)) {
      // Phi(t_{k+1}, sigma(t_k)) = E.
      inh = table.step(k) * inh + g.mu * fk;
    } else {
      const double h = grid.step(k);
      const Eigen::VectorXd fmid = f(g.t + 0.5 * h);
      inh = table.step(k) * inh +
            h / 6.0 * (table.step(k) * fk + 4.0 * (table.second_half(k) * fmid) + fnext);
    }
    values.col(Eigen::Index(k + 1)) = hom + inh;
    fk = fnext;
  }
  return {grid, std::move(values)};
}

Eigen::MatrixXd sample_forcing(const Forcing& f, int dim, const Grid& grid) {
  Eigen::MatrixXd out(dim, Eigen::Index(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd v = f(grid[i].t);
    check_vec(v, dim, "forcing");
    out.col(Eigen::Index(i)) = v;
  }
  return out;
}

std::vector<double> residual_profile(const Trajectory& traj, const MatrixFunction& a,
                                     const Eigen::MatrixXd& f) {
  if (traj.values.rows() != a.dim || f.rows() != a.dim || f.cols() != traj.values.cols()) {
    fail(ErrorKind::InvalidArgument, "residual: dimension mismatch");
  }
  const Grid& grid = traj.grid;
  std::vector<double> out(grid.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!has_delta_stencil(i, grid)) continue;
    const Eigen::VectorXd d = delta_derivative(traj.values, i, grid);
    const Eigen::VectorXd x = traj.values.col(Eigen::Index(i));
    out[i] = (d - a(grid[i].t) * x - f.col(Eigen::Index(i))).norm();
  }
  return out;
}

double residual(const Trajectory& traj, const MatrixFunction& a, const Eigen::MatrixXd& f) {
  const auto profile = residual_profile(traj, a, f);
  double m = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (!has_delta_stencil(i, traj.grid)) continue;
    if (std::isnan(profile[i])) return profile[i];
    m = std::max(m, profile[i]);
  }
  return m;
}

double residual(const Trajectory& traj, const MatrixFunction& a, const Forcing& f) {
  return residual(traj, a, sample_forcing(f, a.dim, traj.grid));
}

}  // namespace chronoscale
