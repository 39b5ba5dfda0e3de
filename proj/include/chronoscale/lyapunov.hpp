#pragma once

// Lyapunov exponents: the classical limsup of log|f|/t and the time-scale
// exponent inf{a : f / e_a -> 0}, exact-exponent tests, the alpha(t) surrogate
// of the trace and the defect of the Lyapunov inequality.
//
// A limit cannot be observed on a finite window. "g -> 0" is read as: the
// maximum of log|g| over the last quarter of the window lies at least ln(1000)
// below the window maximum, and the maxima of the four blocks of the last
// quarter do not increase. "g -> infinity" is the mirror image.

#include "chronoscale/hilger.hpp"
#include "chronoscale/linsys.hpp"

#include <string>
#include <vector>

namespace chronoscale {

struct ExponentEstimate {
  double value = 0.0;
  std::string method;  // "log-ratio" or "bisection-on-a"
  Window window{0.0, 0.0};
  double band = 0.0;
  bool saturated = false;  // no tested a gave decay from below: value is the lower bound
};

/// Logs of |f(t_k)| (vector norm per column); -inf where f vanishes.
std::vector<double> log_abs(const Trajectory& f);

/// max over the last third of the grid (t > 0) of log|f(t)|/t; band is half the
/// oscillation of the same quantity there.
ExponentEstimate classic_exponent(const std::vector<double>& log_f, const Grid& grid);
ExponentEstimate classic_exponent(const Trajectory& f);

struct TsExponentOptions {
  double a_max = 10.0;
  double eps = 1e-6;          // distance kept from the regressivity threshold -nu*
  double resolution = 1e-5;   // bisection bracket
  double drop = 6.907755278982137;  // ln(1000)
};

/// Tail tests on a log-magnitude profile (see the header comment).
/// Both use grid indices >= start; quarters and blocks are measured in time.
bool tends_to_zero(const std::vector<double>& log_g, const Grid& grid, std::size_t start = 0,
                   double drop = 6.907755278982137);
bool tends_to_infinity(const std::vector<double>& log_g, const Grid& grid, std::size_t start = 0,
                       double drop = 6.907755278982137);

/// Bisection for inf{a in (-nu* + eps, a_max] : f / e_a(., t0) -> 0}. Saturates
/// at -nu* when every tested a decays; throws Refusal on non-syndetic scales
/// and Numerical when f outgrows e_{a_max}.
ExponentEstimate ts_exponent(const std::vector<double>& log_f, const Grid& grid,
                             const TimeScale& scale, double t0,
                             const TsExponentOptions& options = {});
ExponentEstimate ts_exponent(const Trajectory& f, const TimeScale& scale, double t0,
                             const TsExponentOptions& options = {});

enum class TriState { False, True, Indeterminate };
const char* to_string(TriState s);

/// f / e_{alpha (+) eps} -> 0 and f / e_{alpha (-) eps} -> infinity.
TriState exact_exponent_check(const std::vector<double>& log_f, double alpha, double eps,
                              const Grid& grid, double t0);
TriState exact_exponent_check(const Trajectory& f, double alpha, double eps, double t0);

/// (det(E + mu A) - 1)/mu for mu > 0, tr A for mu = 0. With det_quotient the
/// quotient det(E + mu A)/mu is returned instead on jumps.
double alpha_function(const MatrixFunction& a, double t, const Grid& grid,
                      bool det_quotient = false);
ScalarCoefficient alpha_coefficient(const MatrixFunction& a, const Grid& grid,
                                    bool det_quotient = false);

/// Columns of a fundamental matrix as log-norm profiles; stepping renormalizes
/// each column so long windows neither overflow nor underflow.
struct FundamentalSystem {
  Grid grid;
  std::vector<std::vector<double>> log_norms;  // per column, per grid point
  int dim() const { return int(log_norms.size()); }
};

/// Phi(t, t0) Phi0 stepped with the transition table (Phi0 = E by default).
FundamentalSystem fundamental_system(const MatrixFunction& a, const Grid& grid,
                                     const Eigen::MatrixXd& phi0 = {});
/// From sampled columns.
FundamentalSystem fundamental_system(const std::vector<Trajectory>& columns);

struct FundamentalExponents {
  std::vector<ExponentEstimate> exponents;  // sorted by value
  double s = 0.0;
  double band = 0.0;
};

FundamentalExponents fundamental_exponents(const FundamentalSystem& phi, const TimeScale& scale,
                                           double t0, const TsExponentOptions& options = {});

struct RegularityDefect {
  double defect = 0.0;  // Upsilon[e_{alpha_1 (+) ... (+) alpha_n}] - Upsilon[e_alpha]
  double band = 0.0;
  ExponentEstimate lhs;
  ExponentEstimate rhs;
  FundamentalExponents columns;
  TriState nonnegative = TriState::Indeterminate;
  std::string message;
};

RegularityDefect regularity_defect(const MatrixFunction& a, const FundamentalSystem& phi,
                                   const TimeScale& scale, double t0,
                                   const TsExponentOptions& options = {},
                                   bool det_quotient_alpha = false);

}  // namespace chronoscale
