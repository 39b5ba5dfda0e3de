#include "chronoscale/lyapunov.hpp"

#include "chronoscale/error.hpp"
#include "chronoscale/numeric.hpp"

#include <algorithm>
#include <cmath>
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

struct TailStats {
  double window_extreme;
  double last_extreme;
  std::vector<double> blocks;
  bool valid = false;
};

// Extremes (max when upper, min otherwise) over [start, n), over the last
// quarter in time, and over four equal time blocks of that quarter.
TailStats tail_stats(const std::vector<double>& g, const Grid& grid, std::size_t start, bool upper) {
  TailStats s;
  const std::size_t n = g.size();
  if (n != grid.size()) fail(ErrorKind::InvalidArgument, "profile and grid sizes differ");
  if (start + 8 > n) return s;
  const double t0 = grid[start].t;
  const double t1 = grid.back();
  const double q = t0 + 0.75 * (t1 - t0);
  const double init = upper ? -kInf : kInf;
  auto pick = [upper](double a, double b) { return upper ? std::max(a, b) : std::min(a, b); };
  s.window_extreme = init;
  s.last_extreme = init;
  s.blocks.assign(4, init);
  std::vector<char> seen(4, 0);
  for (std::size_t k = start; k < n; ++k) {
    const double v = std::isnan(g[k]) ? init : g[k];
    s.window_extreme = pick(s.window_extreme, v);
    if (grid[k].t >= q) {
      s.last_extreme = pick(s.last_extreme, v);
      const double frac = (grid[k].t - q) / std::max(t1 - q, 1e-300);
      const std::size_t b = std::min<std::size_t>(3, std::size_t(frac * 4.0));
      s.blocks[b] = pick(s.blocks[b], v);
      seen[b] = 1;
    }
  }
  std::vector<double> kept;
  for (std::size_t b = 0; b < 4; ++b) {
    if (seen[b]) kept.push_back(s.blocks[b]);
  }
  s.blocks = kept;
  s.valid = kept.size() >= 2;
  return s;
}

double slack(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

// log |e_a(t_k, t_i0)| for constant a; -inf once a factor vanishes.
void constant_log_exp(double a, const Grid& grid, std::size_t i0, std::vector<double>& out) {
  out.assign(grid.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = i0; k + 1 < grid.size(); ++k) {
    const double s = grid.step(k);
    acc += grid.is_jump(k) ? std::log(std::abs(1.0 + s * a)) : a * s;
    out[k + 1] = acc;
  }
}

}  // namespace

std::vector<double> log_abs(const Trajectory& f) {
  std::vector<double> out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::log(f.values.col(Eigen::Index(k)).norm());
  return out;
}

ExponentEstimate classic_exponent(const std::vector<double>& log_f, const Grid& grid) {
  const std::size_t n = grid.size();
  if (log_f.size() != n) fail(ErrorKind::InvalidArgument, "profile and grid sizes differ");
  const std::size_t first = n - std::max<std::size_t>(1, n / 3);
  double hi = -kInf, lo = kInf;
  for (std::size_t k = first; k < n; ++k) {
    const double t = grid[k].t;
    if (t <= 0.0 || !std::isfinite(log_f[k])) continue;
    const double v = log_f[k] / t;
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  if (hi == -kInf) {
    fail(ErrorKind::Numerical, "classic_exponent: f vanishes on the tail (or the tail has no t > 0)");
  }
  ExponentEstimate e;
  e.value = hi;
  e.band = 0.5 * (hi - lo);
  e.method = "log-ratio";
  e.window = {grid[first].t, grid.back()};
  return e;
}

ExponentEstimate classic_exponent(const Trajectory& f) { return classic_exponent(log_abs(f), f.grid); }

bool tends_to_zero(const std::vector<double>& log_g, const Grid& grid, std::size_t start,
                   double drop) {
  const TailStats s = tail_stats(log_g, grid, start, true);
  if (!s.valid) return false;
  if (s.last_extreme == -kInf) return true;
  if (!(s.last_extreme <= s.window_extreme - drop)) return false;
  for (std::size_t b = 1; b < s.blocks.size(); ++b) {
    if (s.blocks[b] > s.blocks[b - 1] + slack(s.blocks[b - 1])) return false;
  }
  return true;
}

bool tends_to_infinity(const std::vector<double>& log_g, const Grid& grid, std::size_t start,
                       double drop) {
  const TailStats s = tail_stats(log_g, grid, start, false);
  if (!s.valid) return false;
  if (!(s.last_extreme >= s.window_extreme + drop)) return false;
  for (std::size_t b = 1; b < s.blocks.size(); ++b) {
    if (s.blocks[b] < s.blocks[b - 1] - slack(s.blocks[b - 1])) return false;
  }
  return true;
}

ExponentEstimate ts_exponent(const std::vector<double>& log_f, const Grid& grid,
                             const TimeScale& scale, double t0, const TsExponentOptions& options) {
  if (!scale.is_syndetic()) {
    fail(ErrorKind::Refusal, "time-scale exponent needs a syndetic scale");
  }
  if (log_f.size() != grid.size()) fail(ErrorKind::InvalidArgument, "profile and grid sizes differ");
  const std::size_t i0 = grid.index_of(t0);
  const double nu = scale.nu_star();
  const double lower = std::isfinite(nu) ? -nu + options.eps : -options.a_max;
  if (!(lower < options.a_max)) fail(ErrorKind::InvalidArgument, "empty exponent search interval");

  std::vector<double> loge, g(grid.size());
  auto decays = [&](double a) {
    constant_log_exp(a, grid, i0, loge);
    for (std::size_t k = 0; k < grid.size(); ++k) g[k] = log_f[k] - loge[k];
    return tends_to_zero(g, grid, i0, options.drop);
  };

  ExponentEstimate e;
  e.method = "bisection-on-a";
  e.window = {grid[i0].t, grid.back()};
  const double width = grid.back() - grid[i0].t;
  if (!decays(options.a_max)) {
    fail(ErrorKind::Numerical, "f outgrows e_a for a = a_max = " + num(options.a_max) +
                                   "; raise a_max");
  }
  if (decays(lower)) {
    e.value = std::isfinite(nu) ? -nu : lower;
    e.saturated = true;
    e.band = 0.0;
    return e;
  }
  double lo = lower, hi = options.a_max;
  while (hi - lo > options.resolution) {
    const double mid = 0.5 * (lo + hi);
    (decays(mid) ? hi : lo) = mid;
  }
  e.value = hi;
  // A finite window needs the ratio to drop by `drop` over three quarters of
  // it, which biases the infimum upwards by about this much.
  const double mu_star = scale.mu_star(Window{grid[i0].t, grid.back()});
  const double mu = std::isfinite(mu_star) ? mu_star : 0.0;
  e.band = (hi - lo) + options.drop * (1.0 + mu * std::max(hi, 0.0)) / (0.75 * width);
  return e;
}

ExponentEstimate ts_exponent(const Trajectory& f, const TimeScale& scale, double t0,
                             const TsExponentOptions& options) {
  return ts_exponent(log_abs(f), f.grid, scale, t0, options);
}

const char* to_string(TriState s) {
  switch (s) {
    case TriState::False: return "false";
    case TriState::True: return "true";
    case TriState::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

TriState exact_exponent_check(const std::vector<double>& log_f, double alpha, double eps,
                              const Grid& grid, double t0) {
  if (!(eps > 0)) fail(ErrorKind::InvalidArgument, "exact_exponent_check needs eps > 0");
  const std::size_t i0 = grid.index_of(t0);
  // e_{alpha (+) eps} = e_alpha e_eps and e_{alpha (-) eps} = e_alpha / e_eps.
  std::vector<double> la, le;
  constant_log_exp(alpha, grid, i0, la);
  constant_log_exp(eps, grid, i0, le);
  for (std::size_t k = i0; k < grid.size(); ++k) {
    if (!std::isfinite(la[k])) return TriState::Indeterminate;
  }
  std::vector<double> up(grid.size()), down(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    up[k] = log_f[k] - la[k] - le[k];
    down[k] = log_f[k] - la[k] + le[k];
  }
  const bool zero = tends_to_zero(up, grid, i0);
  const bool inf = tends_to_infinity(down, grid, i0);
  if (zero && inf) return TriState::True;
  if (tends_to_infinity(up, grid, i0) || tends_to_zero(down, grid, i0)) return TriState::False;
  return TriState::Indeterminate;
}

TriState exact_exponent_check(const Trajectory& f, double alpha, double eps, double t0) {
  return exact_exponent_check(log_abs(f), alpha, eps, f.grid, t0);
}

double alpha_function(const MatrixFunction& a, double t, const Grid& grid, bool det_quotient) {
  const double mu = grid.mu_at(t);
  if (mu == 0.0) return a.dense(t).trace();
  const MatrixXd m = MatrixXd::Identity(a.dim, a.dim) + mu * a(t);
  return (m.determinant() - (det_quotient ? 0.0 : 1.0)) / mu;
}

ScalarCoefficient alpha_coefficient(const MatrixFunction& a, const Grid& grid, bool det_quotient) {
  return [a, grid, det_quotient](double t) { return alpha_function(a, t, grid, det_quotient); };
}

FundamentalSystem fundamental_system(const MatrixFunction& a, const Grid& grid,
                                     const MatrixXd& phi0) {
  const int dim = a.dim;
  const MatrixXd start = phi0.size() == 0 ? MatrixXd(MatrixXd::Identity(dim, dim)) : phi0;
  if (start.rows() != dim || start.cols() != dim) {
    fail(ErrorKind::InvalidArgument, "initial fundamental matrix has the wrong shape");
  }
  const TransitionTable table(a, grid);
  FundamentalSystem out{grid, std::vector<std::vector<double>>(dim, std::vector<double>(grid.size()))};
  for (int j = 0; j < dim; ++j) {
    VectorXd v = start.col(j);
    double scale_log = 0.0;
    out.log_norms[j][0] = std::log(v.norm());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      v = table.step(k) * v;
      const double nrm = v.norm();
      if (nrm == 0.0 || !std::isfinite(nrm)) {
        for (std::size_t r = k + 1; r < grid.size(); ++r) out.log_norms[j][r] = nrm == 0.0 ? -kInf : kInf;
        break;
      }
      if (nrm > 1e100 || nrm < 1e-100) {
        scale_log += std::log(nrm);
        v /= nrm;
      }
      out.log_norms[j][k + 1] = scale_log + std::log(v.norm());
    }
  }
  return out;
}

FundamentalSystem fundamental_system(const std::vector<Trajectory>& columns) {
  if (columns.empty()) fail(ErrorKind::InvalidArgument, "empty fundamental system");
  FundamentalSystem out{columns.front().grid, {}};
  for (const auto& c : columns) {
    if (c.size() != out.grid.size()) fail(ErrorKind::InvalidArgument, "columns on different grids");
    out.log_norms.push_back(log_abs(c));
  }
  return out;
}

FundamentalExponents fundamental_exponents(const FundamentalSystem& phi, const TimeScale& scale,
                                           double t0, const TsExponentOptions& options) {
  FundamentalExponents out;
  for (const auto& col : phi.log_norms) {
    out.exponents.push_back(ts_exponent(col, phi.grid, scale, t0, options));
  }
  std::sort(out.exponents.begin(), out.exponents.end(),
            [](const ExponentEstimate& a, const ExponentEstimate& b) { return a.value < b.value; });
  for (const auto& e : out.exponents) {
    out.s += e.value;
    out.band += e.band;
  }
  return out;
}

RegularityDefect regularity_defect(const MatrixFunction& a, const FundamentalSystem& phi,
                                   const TimeScale& scale, double t0,
                                   const TsExponentOptions& options, bool det_quotient_alpha) {
  RegularityDefect out;
  const Grid& grid = phi.grid;
  const std::size_t i0 = grid.index_of(t0);
  if (phi.dim() != a.dim) fail(ErrorKind::InvalidArgument, "fundamental system dimension differs");
  for (const auto& col : phi.log_norms) {
    for (std::size_t k = i0; k < grid.size(); ++k) {
      if (!std::isfinite(col[k])) fail(ErrorKind::Numerical, "degenerate fundamental system");
    }
  }
  out.columns = fundamental_exponents(phi, scale, t0, options);

  // log e_{alpha_1 (+) ... (+) alpha_n} = sum_i log e_{alpha_i}.
  std::vector<double> lhs(grid.size(), 0.0), li;
  for (const auto& e : out.columns.exponents) {
    constant_log_exp(e.value, grid, i0, li);
    for (std::size_t k = 0; k < grid.size(); ++k) lhs[k] += li[k];
  }
  const auto rhs_profile = hilger_log_profile(alpha_coefficient(a, grid, det_quotient_alpha), grid, i0);
  std::vector<double> rhs(grid.size(), 0.0);
  for (std::size_t k = 0; k < rhs_profile.size(); ++k) rhs[i0 + k] = rhs_profile[k].log_abs();

  for (std::size_t k = i0; k < grid.size(); ++k) {
    if (!std::isfinite(lhs[k]) || !std::isfinite(rhs[k])) {
      out.nonnegative = TriState::Indeterminate;
      out.message = "some Hilger exponential vanishes on the window; the inequality is undefined";
      return out;
    }
  }
  out.lhs = ts_exponent(lhs, grid, scale, t0, options);
  out.rhs = ts_exponent(rhs, grid, scale, t0, options);
  out.defect = out.lhs.value - out.rhs.value;
  out.band = out.lhs.band + out.rhs.band + out.columns.band;
  out.nonnegative = out.defect >= -out.band ? TriState::True : TriState::False;
  return out;
}

}  // namespace chronoscale
