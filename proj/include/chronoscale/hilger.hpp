#pragma once

// Cylinder transformation, circle-plus algebra and the Hilger exponential.

#include "chronoscale/timescale.hpp"

#include <functional>
#include <vector>

namespace chronoscale {

/// Real-valued coefficient t -> p(t), evaluated on grid points and on the
/// midpoints of dense steps.
using ScalarCoefficient = std::function<double(double)>;

/// xi_h(z) = log(1 + z h) / h, and xi_0(z) = z.
double cylinder(double z, double h);

ScalarCoefficient oplus(ScalarCoefficient p, ScalarCoefficient q, const Grid& grid);
ScalarCoefficient ominus(ScalarCoefficient p, ScalarCoefficient q, const Grid& grid);
ScalarCoefficient neg(ScalarCoefficient q, const Grid& grid);

enum class Regressivity { NotRegressive, Regressive, PositivelyRegressive, UniformlyPositive };

struct RegressivityClass {
  Regressivity kind;
  double witness;  // inf of 1 + mu p over the grid
};

/// UR+ requires witness >= uniform_bound.
RegressivityClass regressivity_class(const ScalarCoefficient& p, const Grid& grid,
                                     double uniform_bound = 1e-8);

const char* to_string(Regressivity r);

enum class ExpBranch {
  Auto,     // product form through negative factors
  Positive  // throw when some 1 + mu p < 0
};

/// Overflow-free representation of e_p: mantissa * 2^exponent2 * exp(dense_log).
/// Jump factors multiply into the mantissa, so purely scattered products are
/// reproduced exactly; dense steps add to dense_log.
struct LogValue {
  double mantissa = 1.0;
  long exponent2 = 0;
  double dense_log = 0.0;

  int sign() const { return (mantissa > 0) - (mantissa < 0); }
  double log_abs() const;  // -inf for zero
  double value() const;
};

/// e_p(t, s) for grid points t, s. For t < s the reciprocal of e_p(s, t) is
/// returned, which requires p regressive on [t, s].
double hilger_exp(const ScalarCoefficient& p, double t, double s, const Grid& grid,
                  ExpBranch branch = ExpBranch::Auto);
LogValue hilger_log_exp(const ScalarCoefficient& p, double t, double s, const Grid& grid,
                        ExpBranch branch = ExpBranch::Auto);

/// log |e_p(t_k, t_start)| and its sign for every grid index k >= start.
std::vector<LogValue> hilger_log_profile(const ScalarCoefficient& p, const Grid& grid,
                                         std::size_t start = 0);

}  // namespace chronoscale
