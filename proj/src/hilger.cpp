#include "chronoscale/hilger.hpp"

#include "chronoscale/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chronoscale {

double cylinder(double z, double h) {
  if (h < 0.0) fail(ErrorKind::InvalidArgument, "cylinder: graininess must be non-negative");
  if (h == 0.0) return z;
  const double base = 1.0 + z * h;
  if (!(base > 0.0)) {
    fail(ErrorKind::InvalidArgument,
         "cylinder: 1 + z h = " + std::to_string(base) + " is not positive");
  }
  return std::log1p(z * h) / h;
}

ScalarCoefficient oplus(ScalarCoefficient p, ScalarCoefficient q, const Grid& grid) {
  return [p = std::move(p), q = std::move(q), grid](double t) {
    const double a = p(t);
    const double b = q(t);
    return a + b + grid.mu_at(t) * a * b;
  };
}

ScalarCoefficient ominus(ScalarCoefficient p, ScalarCoefficient q, const Grid& grid) {
  return [p = std::move(p), q = std::move(q), grid](double t) {
    const double b = q(t);
    const double d = 1.0 + grid.mu_at(t) * b;
    if (d == 0.0) fail(ErrorKind::Numerical, "ominus: q is not regressive at t = " + std::to_string(t));
    return (p(t) - b) / d;
  };
}

ScalarCoefficient neg(ScalarCoefficient q, const Grid& grid) {
  return [q = std::move(q), grid](double t) {
    const double b = q(t);
    const double d = 1.0 + grid.mu_at(t) * b;
    if (d == 0.0) fail(ErrorKind::Numerical, "neg: q is not regressive at t = " + std::to_string(t));
    return -b / d;
  };
}

RegressivityClass regressivity_class(const ScalarCoefficient& p, const Grid& grid,
                                     double uniform_bound) {
  double witness = kInf;
  bool zero = false;
  for (const GridPoint& g : grid.points()) {
    const double v = 1.0 + g.mu * p(g.t);
    witness = std::min(witness, v);
    zero = zero || v == 0.0;
  }
  if (zero) return {Regressivity::NotRegressive, witness};
  if (witness <= 0.0) return {Regressivity::Regressive, witness};
  if (witness >= uniform_bound) return {Regressivity::UniformlyPositive, witness};
  return {Regressivity::PositivelyRegressive, witness};
}

const char* to_string(Regressivity r) {
  switch (r) {
    case Regressivity::NotRegressive: return "not-regressive";
    case Regressivity::Regressive: return "R";
    case Regressivity::PositivelyRegressive: return "R+";
    case Regressivity::UniformlyPositive: return "UR+";
  }
  return "unknown";
}

double LogValue::log_abs() const {
  if (mantissa == 0.0) return -kInf;
  return std::log(std::abs(mantissa)) + double(exponent2) * std::log(2.0) + dense_log;
}

double LogValue::value() const {
  if (mantissa == 0.0) return 0.0;
  if (dense_log == 0.0) return std::ldexp(mantissa, int(exponent2));
  if (std::abs(exponent2) < 900 && std::abs(dense_log) < 600) {
    return std::ldexp(mantissa, int(exponent2)) * std::exp(dense_log);
  }
  return double(sign()) * std::exp(log_abs());
}

namespace {

// Three-point Gauss-Legendre rule; the nodes stay inside the open step, where
// the graininess is zero even when the right endpoint is right-scattered.
double gauss3(const ScalarCoefficient& p, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const double x = r * 0.7745966692414834;
  return r * (5.0 / 9.0 * (p(c - x) + p(c + x)) + 8.0 / 9.0 * p(c));
}

// Advances (log|e|, sign) across the step k -> k+1.
void advance(LogValue& acc, const ScalarCoefficient& p, const Grid& grid, std::size_t k,
             ExpBranch branch) {
  if (acc.mantissa == 0.0) return;
  const GridPoint& g = grid[k];
  if (grid.is_jump(k)) {
    const double factor = 1.0 + g.mu * p(g.t);
    if (factor < 0.0 && branch == ExpBranch::Positive) {
      fail(ErrorKind::Numerical, "hilger_exp: 1 + mu p < 0 at t = " + std::to_string(g.t) +
                                     " (sign-alternating exponential)");
    }
    acc.mantissa *= factor;
    if (acc.mantissa != 0.0 && (std::abs(acc.mantissa) > 0x1p400 || std::abs(acc.mantissa) < 0x1p-400)) {
      int e = 0;
      acc.mantissa = std::frexp(acc.mantissa, &e);
      acc.exponent2 += e;
    }
    return;
  }
  acc.dense_log += gauss3(p, g.t, grid[k + 1].t);
}

LogValue forward_log(const ScalarCoefficient& p, std::size_t is, std::size_t it, const Grid& grid,
                     ExpBranch branch) {
  LogValue acc;
  for (std::size_t k = is; k < it; ++k) advance(acc, p, grid, k, branch);
  return acc;
}

}  // namespace

LogValue hilger_log_exp(const ScalarCoefficient& p, double t, double s, const Grid& grid,
                        ExpBranch branch) {
  const std::size_t it = grid.index_of(t);
  const std::size_t is = grid.index_of(s);
  if (it >= is) return forward_log(p, is, it, grid, branch);
  const LogValue inv = forward_log(p, it, is, grid, branch);
  if (inv.mantissa == 0.0) {
    fail(ErrorKind::Numerical, "hilger_exp: backward evaluation needs p regressive on [t, s]");
  }
  int e = 0;
  const double m = std::frexp(1.0 / inv.mantissa, &e);
  return {m, e - inv.exponent2, -inv.dense_log};
}

double hilger_exp(const ScalarCoefficient& p, double t, double s, const Grid& grid,
                  ExpBranch branch) {
  return hilger_log_exp(p, t, s, grid, branch).value();
}

std::vector<LogValue> hilger_log_profile(const ScalarCoefficient& p, const Grid& grid,
                                         std::size_t start) {
  if (start >= grid.size()) fail(ErrorKind::InvalidArgument, "hilger_log_profile: bad start index");
  std::vector<LogValue> out;
  out.reserve(grid.size() - start);
  LogValue acc;
  out.push_back(acc);
  for (std::size_t k = start; k + 1 < grid.size(); ++k) {
    advance(acc, p, grid, k, ExpBranch::Auto);
    out.push_back(acc);
  }
  return out;
}

}  // namespace chronoscale
