#pragma once

// Projection families and the Green-type operator
//   (L f)(t) = int_{t-}^{t} Phi(t, sigma(s)) P(s) f(s) Ds - int_{t}^{t+} Phi(t, sigma(s)) Q(s) f(s) Ds
// on a finite grid window. t- is the first grid point; when the time scale
// continues past the last grid point the Q-integral is truncated there and a
// tail estimate is reported per point.

#include "chronoscale/linsys.hpp"

#include <complex>
#include <string>
#include <vector>

namespace chronoscale {

struct ProjectionFamily {
  int dim = 0;
  std::function<Eigen::MatrixXd(double)> eval;
  double bound = kInf;  // declared sup ||P(t)||
  bool constant = false;

  Eigen::MatrixXd p(double t) const { return eval(t); }
  Eigen::MatrixXd q(double t) const { return Eigen::MatrixXd::Identity(dim, dim) - eval(t); }

  static ProjectionFamily constant_projection(const Eigen::MatrixXd& p);
  /// max over grid points of ||P^2 - P||.
  double idempotency_defect(const Grid& grid) const;
};

struct SpectralSplit {
  ProjectionFamily family;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> growth;  // average exponential rate of e_lambda over the window
};

/// Spectral projector onto the eigenvectors of a constant A whose Hilger
/// exponential decays on the grid window. Refusal when some growth rate lies
/// within gap_tol of zero.
SpectralSplit spectral_split(const Eigen::MatrixXd& a, const Grid& grid, double gap_tol = 1e-6);
ProjectionFamily spectral_projections(const Eigen::MatrixXd& a, const Grid& grid,
                                      double gap_tol = 1e-6);

struct GreenOptions {
  double tail_tol = 1e-8;
  double overflow_guard = 1e12;
  double growth_tol = 1e-3;  // relative growth of the norm profile in the last quarter
};

struct GreenResult {
  Trajectory trajectory;
  std::vector<double> tail_bound;  // per grid point; 0 when nothing was truncated
  std::size_t certified = 0;       // points whose tail bound is below tail_tol
  double max_tail = 0.0;
};

struct NormEstimate {
  double value = 0.0;
  double tail = 0.0;            // largest Q-tail estimate for a unit forcing
  std::vector<double> profile;  // per grid point
};

struct GreenVerification {
  double residual = kInf;
  bool pass = false;
  std::string reason;
};

class GreenOperator {
public:
  GreenOperator(MatrixFunction a, ProjectionFamily p, const TimeScale& scale, Grid grid,
                GreenOptions options = {});

  GreenResult apply(const Forcing& f) const;
  /// f sampled on the grid; midpoint values of dense steps are interpolated.
  GreenResult apply(const Eigen::MatrixXd& samples) const;
  /// midpoints is dim x (grid.size() - 1); only columns of dense steps are read.
  GreenResult apply(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& midpoints) const;

  NormEstimate norm_estimate() const;
  GreenVerification verify(const Forcing& f, double tol) const;

  const Grid& grid() const { return grid_; }
  const MatrixFunction& system() const { return a_; }
  const ProjectionFamily& projections() const { return p_; }
  const TransitionTable& table() const { return table_; }
  bool truncated() const { return truncated_; }
  bool stabilized() const { return stabilized_; }

private:
  void estimate_tail();
  void require_tail() const;

  MatrixFunction a_;
  ProjectionFamily p_;
  Grid grid_;
  GreenOptions options_;
  TransitionTable table_;
  double mu_star_;
  bool truncated_;
  bool q_nonzero_;
  bool stabilized_ = false;
  std::vector<Eigen::MatrixXd> pk_, qk_, pmid_, qmid_;
  std::vector<double> tail_factor_;  // Q-tail bound per point for sup ||f|| = 1
  std::string tail_error_;           // non-empty when no decay along the Q-range was seen
};

/// Lagrange interpolation (up to 4 nodes within one segment) of grid samples
/// at the midpoints of dense steps; jump columns are copies of the left sample.
Eigen::MatrixXd interpolate_midpoints(const Eigen::MatrixXd& samples, const Grid& grid);

}  // namespace chronoscale
