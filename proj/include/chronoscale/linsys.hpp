#pragma once

// Linear dynamic systems x^Delta = A(t) x + f(t) on a grid.

#include "chronoscale/timescale.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace chronoscale {

struct MatrixFunction {
  int dim = 0;
  std::function<Eigen::MatrixXd(double)> eval;
  double bound = kInf;  // declared sup ||A(t)||
  bool constant = false;
  /// Optional rule used inside dense steps (all RK4 stages). Needed when A
  /// depends on the graininess, as the right end of a dense interval may be
  /// right-scattered while the step itself sees mu = 0.
  std::function<Eigen::MatrixXd(double)> dense_eval;

  Eigen::MatrixXd operator()(double t) const { return eval(t); }
  Eigen::MatrixXd dense(double t) const { return dense_eval ? dense_eval(t) : eval(t); }

  static MatrixFunction constant_matrix(const Eigen::MatrixXd& a);
};

using Forcing = std::function<Eigen::VectorXd(double)>;

Forcing zero_forcing(int dim);
Forcing constant_forcing(const Eigen::VectorXd& v);

/// Vector-valued samples on a grid; values is dim x grid.size().
struct Trajectory {
  Grid grid;
  Eigen::MatrixXd values;

  std::size_t size() const { return grid.size(); }
  int dim() const { return int(values.rows()); }
  Eigen::VectorXd at(std::size_t i) const { return values.col(Eigen::Index(i)); }
  /// Component j as a plain vector.
  std::vector<double> component(int j) const;
  double sup_norm() const;
};

/// One-step transition matrices of x^Delta = A x. Jumps use E + mu A; dense
/// steps use the RK4 propagator over the step and over both half steps.
class TransitionTable {
public:
  TransitionTable(const MatrixFunction& a, const Grid& grid);

  const Grid& grid() const { return grid_; }
  int dim() const { return dim_; }

  /// Maps x(t_k) to x(t_{k+1}).
  const Eigen::MatrixXd& step(std::size_t k) const { return steps_[k]; }
  /// Dense steps only: propagators t_k -> mid and mid -> t_{k+1}.
  const Eigen::MatrixXd& first_half(std::size_t k) const { return first_half_[k]; }
  const Eigen::MatrixXd& second_half(std::size_t k) const { return second_half_[k]; }

  bool invertible(std::size_t k) const;
  /// Inverse of step(k); throws Numerical when E + mu A is singular.
  const Eigen::MatrixXd& step_inverse(std::size_t k) const;
  const Eigen::MatrixXd& first_half_inverse(std::size_t k) const;

  /// Phi(t_j, t_i). For j < i the backward product of inverses is used.
  Eigen::MatrixXd phi(std::size_t j, std::size_t i) const;

private:
  Grid grid_;
  int dim_;
  std::vector<Eigen::MatrixXd> steps_;
  std::vector<Eigen::MatrixXd> first_half_;
  std::vector<Eigen::MatrixXd> second_half_;
  std::vector<Eigen::MatrixXd> inverse_;
  std::vector<Eigen::MatrixXd> first_half_inverse_;
  std::vector<char> invertible_;
};

/// RK4 propagator of x' = A(t) x from t to t + h.
Eigen::MatrixXd rk4_propagator(const MatrixFunction& a, double t, double h);

/// Forward solution from the first grid point (which must equal t0).
Trajectory step_ivp(const MatrixFunction& a, const Forcing& f, double t0,
                    const Eigen::VectorXd& x0, const Grid& grid);

Eigen::MatrixXd cauchy_matrix(const MatrixFunction& a, double t, double s, const Grid& grid);

struct RegressiveReport {
  bool regressive;
  std::optional<double> first_failure;  // time of the first singular E + mu A
  double min_abs_det;
};

RegressiveReport regressive_check(const MatrixFunction& a, const Grid& grid,
                                  double det_tol = 1e-12);

/// x(t) = Phi(t, t0) x0 + int_{t0}^t Phi(t, sigma(s)) f(s) Delta s.
Trajectory variation_of_constants(const MatrixFunction& a, const Forcing& f, double t0,
                                  const Eigen::VectorXd& x0, const Grid& grid);

/// Right-hand side sampled on the grid: dim x grid.size().
Eigen::MatrixXd sample_forcing(const Forcing& f, int dim, const Grid& grid);

/// sup over grid points with an admissible stencil of ||x^Delta - A x - f||.
double residual(const Trajectory& traj, const MatrixFunction& a, const Eigen::MatrixXd& f);
double residual(const Trajectory& traj, const MatrixFunction& a, const Forcing& f);
/// Pointwise residual norms; NaN where no stencil exists.
std::vector<double> residual_profile(const Trajectory& traj, const MatrixFunction& a,
                                     const Eigen::MatrixXd& f);

}  // namespace chronoscale
