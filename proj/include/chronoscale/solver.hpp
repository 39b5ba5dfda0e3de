#pragma once

// Bounded and exponentially decaying solutions of x^Delta = A(t) x + a(t, x).
//
// fixed_point_solve iterates T x = sum_j L_j g_j(., x) over Green operators.
// The decay machinery works in the weighted space C_lambda with the norm
// sup_t |f(t)| exp(lambda t), for systems reduced by x = L(t) y to
// y^Delta = B-hat(t) y with B = diag(b_1, ..., b_n).

#include "chronoscale/dichotomy.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chronoscale {

using Nonlinearity = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct NonlinearComponent {
  Nonlinearity g;
  double h = 0.0;  // sup_t ||g(t, 0)||
  double c = 0.0;  // Lipschitz constant in x
  std::string name;
};

struct NonlinearityModel {
  int dim = 0;
  std::vector<NonlinearComponent> components;
  std::optional<double> ball_radius;  // constants only claimed on ||x|| <= radius

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const;
  static NonlinearityModel zero(int dim);
};

/// Spot-checks the declared h_j and c_j on grid times and random sample pairs
/// inside a ball of the given radius; throws InvalidArgument on a violation.
void check_nonlinearity(const NonlinearityModel& model, const Grid& grid, double radius,
                        int pairs = 200, std::uint64_t seed = 7);

struct ContractionConstants {
  double beta = 0.0;
  double lambda = 0.0;
  bool contracting() const { return lambda < 1.0; }
};

ContractionConstants contraction_constants(const std::vector<double>& l,
                                           const NonlinearityModel& model);
ContractionConstants contraction_constants(const std::vector<GreenOperator>& greens,
                                           const NonlinearityModel& model);

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double residual_tol = 1e-8;  // gate on the returned trajectory
  int check_pairs = 200;
  std::uint64_t seed = 7;
};

struct ContractionReport {
  std::vector<double> l;
  std::vector<double> h;
  std::vector<double> c;
  double beta = 0.0;
  double lambda = 0.0;
  double a_priori_bound = 0.0;
  int iterations = 0;
  double update = kInf;
  std::vector<double> updates;
  std::vector<double> ratios;
  double sup_norm = 0.0;
  double residual = kInf;
  double residual_tol = 0.0;
  bool residual_ok = false;
  bool converged = false;
  double a_posteriori_error = kInf;  // tol * lambda / (1 - lambda)
  double max_tail = 0.0;
  std::string message;
};

struct BoundedSolution {
  Trajectory trajectory;
  ContractionReport report;
};

/// Picard iteration from x = 0. Refusal when lambda >= 1; divergence when an
/// iterate leaves the declared ball. Non-convergence is reported, not thrown.
BoundedSolution fixed_point_solve(const std::vector<GreenOperator>& greens,
                                  const NonlinearityModel& model, const SolverOptions& options = {});

struct GrowthBound {
  Nonlinearity a;
  double lambda0 = 0.0;  // ||a(t, x)|| <= lambda0 ||x|| + beta0, also used as Lipschitz constant
  double beta0 = 0.0;
};

/// Hyperbolic constant A: spectral projections, one Green operator, then the
/// contraction path. Refusal when lambda0 ||L|| >= 1.
BoundedSolution hyperbolic_bounded_solve(const Eigen::MatrixXd& a, const GrowthBound& nonlin,
                                         const TimeScale& scale, const Grid& grid,
                                         const SolverOptions& options = {});

// --- weighted spaces and the decay theorem -------------------------------------

double weighted_norm(const Trajectory& f, double lambda);
double weighted_norm(const Eigen::MatrixXd& samples, const Grid& grid, double lambda);

/// Midpoint of (max(gamma/(1+alpha), gamma-beta), gamma).
double lambda_select(double alpha, double beta, double gamma);

using ScalarFunction = std::function<double(double)>;

struct ForcingExtension {
  ScalarFunction value;  // f-hat on the real window
  double k = 1.0;        // ||f-hat||_{lambda,R} <= k ||f||_{lambda,T}
  std::vector<double> gap_factor;  // mu b / (1 - exp(-b mu)) per grid point (1 on dense points)
};

/// f-hat = f on the time scale and mu b f(t-hat) / (1 - exp(-b mu)) on each gap
/// (t-hat, sigma(t-hat)); the b -> 0 limit is f(t-hat).
ForcingExtension extend_forcing_hat(const ScalarFunction& f, double b, double lambda,
                                    const Grid& grid);

enum class GreenBranch { Forward, Backward };
const char* to_string(GreenBranch b);

/// B-hat for a scalar b: b on dense points, (exp(b mu) - 1)/mu on jumps.
double b_hat(double b, double mu);

struct ScalarGreenOptions {
  double tail_tol = 1e-8;
};

struct ScalarGreenResult {
  Trajectory h;                 // 1 x n
  GreenBranch branch = GreenBranch::Forward;
  std::vector<double> tail;     // bound on the truncated part per point (backward branch)
  std::size_t certified = 0;
};

/// Bounded solution of u^Delta = b-hat(t) u + f(t). Forward integral from the
/// first grid point when b <= -gamma, backward integral to +infinity when
/// b >= 0; b in (-gamma, 0) is refused. samples is 1 x n (midpoints of dense
/// steps are interpolated); gamma_norm is ||f||_gamma used for the tail bound.
ScalarGreenResult scalar_green_gamma(double b, const Eigen::MatrixXd& samples, double gamma,
                                     double gamma_norm, const TimeScale& scale, const Grid& grid,
                                     const ScalarGreenOptions& options = {});
ScalarGreenResult scalar_green_gamma(double b, const ScalarFunction& f, double gamma,
                                     const TimeScale& scale, const Grid& grid,
                                     const ScalarGreenOptions& options = {});

/// C_{gamma,lambda}: ||L_gamma e^{-gamma .}||_lambda plus the weighted tail.
/// The scalar kernels are sign-definite, so this is the operator norm.
double scalar_green_constant(double b, double gamma, double lambda, const TimeScale& scale,
                             const Grid& grid, const ScalarGreenOptions& options = {});

/// h(t) = int_{t0}^t exp(b (t - s)) f-hat(s) ds over the real line, exact on
/// gaps. This equals the Delta-integral of exp(b (t - s)) f(s), so it solves
/// u^Delta = b-hat u + exp(b mu) f; scalar_green_gamma(f) coincides with it
/// for the forcing f exp(-b mu).
std::vector<double> forward_green_by_extension(double b, const ScalarFunction& f,
                                               const Grid& grid);

struct DecayModel {
  double c1 = 0.0;
  double c2 = 0.0;
  double h = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  /// Defaults to c1 ||x||^{1+alpha} u + c2 e^{-beta t} x + h e^{-gamma t} u, u = (1,...,1)/sqrt(n).
  Nonlinearity a;
};

Eigen::VectorXd decay_builtin(const DecayModel& m, double t, const Eigen::VectorXd& x);

struct DecayReport {
  double gamma = 0.0;   // after lowering past exponents in (-gamma, 0)
  double lambda = 0.0;
  double c_gamma_lambda = 0.0;
  std::vector<double> component_constants;
  std::vector<std::string> branches;
  double kappa = 0.0;
  int iterations = 0;
  double update = kInf;
  std::vector<double> updates;
  bool converged = false;
  double c = 0.0;                 // sup_t |x(t)| exp(lambda t)
  double decay_exponent = 0.0;    // measured on the second half of the window
  double residual = kInf;
  double residual_tol = 0.0;
  bool residual_ok = false;
  double max_weighted_tail = 0.0;
  std::string message;
};

struct DecaySolution {
  Trajectory trajectory;
  DecayReport report;
};

/// Iterates y = L_gamma a~(., y) in C_lambda from y = 0, where
/// a~(t, y) = L(sigma(t))^{-1} a(t, L(t) y) (L defaults to the identity), and
/// returns x = L y. Refusal on non-syndetic scales or when no finite kappa
/// exists; divergence when an iterate leaves the kappa ball.
DecaySolution regular_decay_solve(const Eigen::VectorXd& b, const std::optional<MatrixFunction>& l,
                                  const DecayModel& model, const TimeScale& scale,
                                  const Grid& grid, const SolverOptions& options = {});

/// B-hat(t) = B on dense points and (exp(B mu) - E)/mu on jumps, as a
/// MatrixFunction with a dense-interval evaluator.
MatrixFunction b_hat_system(const Eigen::VectorXd& b, const Grid& grid);

struct ReductionReport {
  double cauchy_error = kInf;   // max relative ||L^{-1}(t) Phi(t,tau) L(tau) - exp(B(t-tau))||
  double upsilon_l = kInf;
  double upsilon_l_inv = kInf;
  double eps_exp = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string message;
};

ReductionReport reduce_regular_check(const MatrixFunction& a, const MatrixFunction& l,
                                     const Eigen::VectorXd& b, const Grid& grid,
                                     double tol = 1e-10, double eps_exp = 0.05);

// --- non-syndetic diagnostic -------------------------------------------------

struct NonSyndeticDiagnostic {
  std::vector<double> times;
  std::vector<double> log_profile;  // log of e^{lambda t_k} sum_{j>=k} mu_j e^{b(t_k - sigma_j)} e^{-gamma t_j}
  std::vector<double> running_max;  // log of the running maximum over the first m points
  bool monotone = false;
  double max_value = 0.0;
  double literal_sum = 0.0;  // sum_n mu(t_n) e^{-t_n}: the Delta-integral of e^{-t}
  double mu_star = 0.0;
};

/// Weighted Green-norm profile of u^Delta = b-hat u + f in C_gamma -> C_lambda,
/// evaluated in log space so that huge gaps neither overflow nor underflow.
NonSyndeticDiagnostic nonsyndetic_diagnostic(const TimeScale& scale, const Grid& grid,
                                             double b = 0.0, double gamma = 1.0,
                                             double lambda = 1.0);

}  // namespace chronoscale
