#include "chronoscale/dichotomy.hpp"

#include "chronoscale/error.hpp"
#include "chronoscale/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chronoscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ProjectionFamily ProjectionFamily::constant_projection(const MatrixXd& p) {
  if (p.rows() != p.cols() || p.rows() == 0) {
    fail(ErrorKind::InvalidArgument, "projection must be square and non-empty");
  }
  ProjectionFamily f;
  f.dim = int(p.rows());
  f.eval = [p](double) { return p; };
  f.bound = op_norm(p);
  f.constant = true;
  return f;
}

double ProjectionFamily::idempotency_defect(const Grid& grid) const {
  double worst = 0.0;
  for (const GridPoint& g : grid.points()) {
    const MatrixXd m = eval(g.t);
    worst = std::max(worst, (m * m - m).cwiseAbs().maxCoeff());
  }
  return worst;
}

SpectralSplit spectral_split(const MatrixXd& a, const Grid& grid, double gap_tol) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorKind::InvalidArgument, "spectral_projections: A must be square");
  }
  const double length = grid.back() - grid.front();
  if (!(length > 0.0)) fail(ErrorKind::InvalidArgument, "spectral_projections: empty window");

  Eigen::EigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numerical, "eigen-decomposition failed");
  const Eigen::MatrixXcd v = es.eigenvectors();
  const Eigen::VectorXcd lambda = es.eigenvalues();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(v);
  if (!lu.isInvertible() || lu.rcond() < 1e-10) {
    fail(ErrorKind::Refusal, "spectral_projections: A is not diagonalizable");
  }

  SpectralSplit out;
  const Eigen::Index n = a.rows();
  Eigen::VectorXcd select = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> l = lambda(i);
    double log_growth = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      if (grid.is_jump(k)) {
        log_growth += std::log(std::abs(1.0 + grid[k].mu * l));
      } else {
        log_growth += l.real() * grid.step(k);
      }
    }
    const double rate = log_growth / length;
    out.eigenvalues.push_back(l);
    out.growth.push_back(rate);
    if (std::abs(rate) <= gap_tol) {
      std::ostringstream msg;
      msg << "spectral_projections: eigenvalue " << l.real() << (l.imag() < 0 ? "" : "+")
          << l.imag() << "i has growth rate " << rate << " within " << gap_tol
          << " of zero; no hyperbolic splitting";
      fail(ErrorKind::Refusal, msg.str());
    }
    if (rate < 0.0) select(i) = 1.0;
  }
  const MatrixXd p = (v * select.asDiagonal() * lu.inverse()).real();
  out.family = ProjectionFamily::constant_projection(p);
  return out;
}

ProjectionFamily spectral_projections(const MatrixXd& a, const Grid& grid, double gap_tol) {
  return spectral_split(a, grid, gap_tol).family;
}

MatrixXd interpolate_midpoints(const MatrixXd& samples, const Grid& grid) {
  if (std::size_t(samples.cols()) != grid.size()) {
    fail(ErrorKind::InvalidArgument, "interpolate_midpoints: sample count differs from grid size");
  }
  const std::size_t n = grid.size();
  MatrixXd out = MatrixXd::Zero(samples.rows(), Eigen::Index(n > 0 ? n - 1 : 0));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (grid.is_jump(k)) {
      out.col(Eigen::Index(k)) = samples.col(Eigen::Index(k));
      continue;
    }
    const double mid = 0.5 * (grid[k].t + grid[k + 1].t);
    std::vector<std::size_t> nodes;
    for (long j = long(k) - 1; j <= long(k) + 2; ++j) {
      if (j < 0 || std::size_t(j) >= n) continue;
      if (grid[std::size_t(j)].segment != grid[k].segment) continue;
      nodes.push_back(std::size_t(j));
    }
    VectorXd v = VectorXd::Zero(samples.rows());
    for (std::size_t a : nodes) {
      double w = 1.0;
      for (std::size_t b : nodes) {
        if (a != b) w *= (mid - grid[b].t) / (grid[a].t - grid[b].t);
      }
      v += w * samples.col(Eigen::Index(a));
    }
    out.col(Eigen::Index(k)) = v;
  }
  return out;
}

// --- GreenOperator ------------------------------------------------------------

GreenOperator::GreenOperator(MatrixFunction a, ProjectionFamily p, const TimeScale& scale,
                             Grid grid, GreenOptions options)
    : a_(std::move(a)),
      p_(std::move(p)),
      grid_(std::move(grid)),
      options_(options),
      table_(a_, grid_),
      mu_star_(scale.mu_star()),
      truncated_(grid_.back() < scale.sup() - kTimeTol),
      q_nonzero_(false) {
  if (p_.dim != a_.dim) fail(ErrorKind::InvalidArgument, "projection and system dimensions differ");
  if (grid_.front() < scale.inf() - kTimeTol) {
    fail(ErrorKind::InvalidArgument, "green operator window starts before the time scale");
  }
  const std::size_t n = grid_.size();
  pk_.resize(n);
  qk_.resize(n);
  pmid_.resize(n);
  qmid_.resize(n);
  const MatrixXd e = MatrixXd::Identity(a_.dim, a_.dim);
  for (std::size_t k = 0; k < n; ++k) {
    pk_[k] = p_.p(grid_[k].t);
    if (pk_[k].rows() != a_.dim || pk_[k].cols() != a_.dim) {
      fail(ErrorKind::InvalidArgument, "projection has the wrong shape");
    }
    qk_[k] = e - pk_[k];
    q_nonzero_ = q_nonzero_ || qk_[k].cwiseAbs().maxCoeff() > 1e-14;
    if (k + 1 < n && !grid_.is_jump(k)) {
      pmid_[k] = p_.p(0.5 * (grid_[k].t + grid_[k + 1].t));
      qmid_[k] = e - pmid_[k];
    }
  }
  // Constant invariant projections: re-project every recursion step so that
  // rounding in the complementary range is not amplified by the dichotomy.
  if (n > 1) {
    double drift = 0.0, defect = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      drift = std::max(drift, (pk_[k + 1] - pk_[k]).cwiseAbs().maxCoeff());
      const MatrixXd& m = table_.step(k);
      defect = std::max(defect, (m * pk_[k] - pk_[k + 1] * m).norm() / std::max(1.0, m.norm()));
    }
    stabilized_ = drift <= 1e-12 && defect <= 1e-9;
  }
  estimate_tail();
}

void GreenOperator::estimate_tail() {
  const std::size_t n = grid_.size();
  tail_factor_.assign(n, 0.0);
  if (!(truncated_ && q_nonzero_)) return;
  auto give_up = [&](const std::string& why) {
    tail_error_ = why;
    std::fill(tail_factor_.begin(), tail_factor_.end(), kInf);
  };
  if (!std::isfinite(mu_star_)) {
    give_up("Q-tail cannot be bounded on a non-syndetic time scale");
    return;
  }
  if (n < 3) {
    give_up("window too short to estimate the Q-tail");
    return;
  }
  // c[k] = ||Phi(t_k, T) Q(T)||, T the last grid point.
  std::vector<double> c(n);
  MatrixXd r = qk_[n - 1];
  c[n - 1] = op_norm(r);
  for (std::size_t k = n - 1; k-- > 0;) {
    if (!table_.invertible(k)) {
      give_up("E + mu A singular at t = " + std::to_string(grid_[k].t) +
              "; the Q-term needs the backward Cauchy matrix");
      return;
    }
    r = table_.step_inverse(k) * r;
    if (stabilized_) r = qk_[k] * r;
    c[k] = op_norm(r);
  }
  const double cn = c[n - 1];
  if (cn == 0.0) return;
  const double t_end = grid_.back();
  const double t_quarter = grid_.front() + 0.75 * (t_end - grid_.front());
  std::size_t a = 0;
  while (a + 2 < n && grid_[a].t < t_quarter) ++a;
  const double rate = -std::log(c[a] / cn) / (t_end - grid_[a].t);
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    std::ostringstream msg;
    msg << "no decay of Phi(t, T) Q along the window (estimated rate " << rate
        << "); window too short or no dichotomy";
    give_up(msg.str());
    return;
  }
  double k_const = 1.0;
  for (std::size_t k = a; k < n; ++k) {
    k_const = std::max(k_const, c[k] * std::exp(rate * (t_end - grid_[k].t)) / cn);
  }
  const double integral = cn * k_const * std::exp(rate * mu_star_) / rate;
  for (std::size_t k = 0; k < n; ++k) tail_factor_[k] = c[k] * integral;
}

void GreenOperator::require_tail() const {
  if (!tail_error_.empty()) fail(ErrorKind::Divergence, tail_error_);
}

GreenResult GreenOperator::apply(const Forcing& f) const {
  const std::size_t n = grid_.size();
  const MatrixXd samples = sample_forcing(f, a_.dim, grid_);
  MatrixXd mids = MatrixXd::Zero(a_.dim, Eigen::Index(n - 1));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!grid_.is_jump(k)) mids.col(Eigen::Index(k)) = f(0.5 * (grid_[k].t + grid_[k + 1].t));
  }
  return apply(samples, mids);
}

GreenResult GreenOperator::apply(const MatrixXd& samples) const {
  return apply(samples, interpolate_midpoints(samples, grid_));
}

GreenResult GreenOperator::apply(const MatrixXd& samples, const MatrixXd& midpoints) const {
  const std::size_t n = grid_.size();
  const int dim = a_.dim;
  if (samples.rows() != dim || std::size_t(samples.cols()) != n) {
    fail(ErrorKind::InvalidArgument, "green_apply: forcing samples have the wrong shape");
  }
  if (n > 1 && (midpoints.rows() != dim || std::size_t(midpoints.cols()) != n - 1)) {
    fail(ErrorKind::InvalidArgument, "green_apply: midpoint samples have the wrong shape");
  }
  if (truncated_ && q_nonzero_) require_tail();

  MatrixXd values = MatrixXd::Zero(dim, Eigen::Index(n));
  // Forward P-part.
  VectorXd y = VectorXd::Zero(dim);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const GridPoint& g = grid_[k];
    const VectorXd fk = samples.col(Eigen::Index(k));
    if (grid_.is_jump(k)) {
      y = table_.step(k) * y + g.mu * (pk_[k] * fk);
    } else {
      const double h = grid_.step(k);
      const VectorXd fm = midpoints.col(Eigen::Index(k));
      const VectorXd f1 = samples.col(Eigen::Index(k + 1));
      y = table_.step(k) * y +
          h / 6.0 *
              (table_.step(k) * (pk_[k] * fk) + 4.0 * (table_.second_half(k) * (pmid_[k] * fm)) +
               pk_[k + 1] * f1);
    }
    if (stabilized_) y = pk_[k + 1] * y;
    values.col(Eigen::Index(k + 1)) = y;
  }
  // Backward Q-part: J_k = int_{t_k}^{T} Phi(t_k, sigma(s)) Q f Ds.
  if (q_nonzero_) {
    VectorXd j = VectorXd::Zero(dim);
    for (std::size_t k = n - 1; k-- > 0;) {
      const GridPoint& g = grid_[k];
      const VectorXd fk = samples.col(Eigen::Index(k));
      const MatrixXd& inv = table_.step_inverse(k);
      if (grid_.is_jump(k)) {
        j = inv * (j + g.mu * (qk_[k] * fk));
      } else {
        const double h = grid_.step(k);
        const VectorXd fm = midpoints.col(Eigen::Index(k));
        const VectorXd f1 = samples.col(Eigen::Index(k + 1));
        j = inv * j + h / 6.0 *
                          (qk_[k] * fk + 4.0 * (table_.first_half_inverse(k) * (qmid_[k] * fm)) +
                           inv * (qk_[k + 1] * f1));
      }
      if (stabilized_) j = qk_[k] * j;
      values.col(Eigen::Index(k)) -= j;
    }
  }

  GreenResult out{{grid_, std::move(values)}, std::vector<double>(n, 0.0), n, 0.0};
  if (truncated_ && q_nonzero_) {
    double fsup = 0.0;
    for (std::size_t k = 0; k < n; ++k) fsup = std::max(fsup, samples.col(Eigen::Index(k)).norm());
    out.certified = 0;
    for (std::size_t k = 0; k < n; ++k) {
      out.tail_bound[k] = fsup * tail_factor_[k];
      out.max_tail = std::max(out.max_tail, out.tail_bound[k]);
      if (out.tail_bound[k] <= options_.tail_tol) ++out.certified;
    }
    if (out.certified == 0) {
      fail(ErrorKind::Numerical, "green_apply: Q-tail not negligible anywhere (window too short)");
    }
  }
  return out;
}

NormEstimate GreenOperator::norm_estimate() const {
  if (truncated_ && q_nonzero_) require_tail();
  const std::size_t n = grid_.size();
  const int dim = a_.dim;
  NormEstimate est;
  est.profile.assign(n, 0.0);
  const double guard = options_.overflow_guard;

  parallel_for(n, [&](std::size_t k) {
    MatrixXd r = MatrixXd::Identity(dim, dim);  // Phi(t_k, t_{i+1}), times P when stabilized
    if (stabilized_) r = pk_[k];
    MatrixXd tmp(dim, dim);
    double sum = 0.0;
    for (std::size_t i = k; i-- > 0;) {
      const GridPoint& g = grid_[i];
      if (grid_.is_jump(i)) {
        sum += g.mu * op_norm(r * pk_[i]);
      } else {
        const double h = grid_.step(i);
        sum += h / 6.0 *
               (op_norm(r * table_.step(i) * pk_[i]) +
                4.0 * op_norm(r * table_.second_half(i) * pmid_[i]) + op_norm(r * pk_[i + 1]));
      }
      tmp.noalias() = r * table_.step(i);
      if (stabilized_) tmp = tmp * pk_[i];
      r.swap(tmp);
      if (sum > guard || !std::isfinite(sum)) {
        fail(ErrorKind::Divergence, "green_norm_estimate: P-integral exceeds the overflow guard at t = " +
                                        std::to_string(grid_[k].t) + "; no dichotomy on the window");
      }
    }
    if (q_nonzero_) {
      MatrixXd s = MatrixXd::Identity(dim, dim);  // Phi(t_k, t_i), times Q when stabilized
      if (stabilized_) s = qk_[k];
      for (std::size_t i = k; i + 1 < n; ++i) {
        const GridPoint& g = grid_[i];
        const MatrixXd& inv = table_.step_inverse(i);
        if (grid_.is_jump(i)) {
          sum += g.mu * op_norm(s * inv * qk_[i]);
        } else {
          const double h = grid_.step(i);
          sum += h / 6.0 *
                 (op_norm(s * qk_[i]) + 4.0 * op_norm(s * table_.first_half_inverse(i) * qmid_[i]) +
                  op_norm(s * inv * qk_[i + 1]));
        }
        tmp.noalias() = s * inv;
        if (stabilized_) tmp = tmp * qk_[i + 1];
        s.swap(tmp);
        if (sum > guard || !std::isfinite(sum)) {
          fail(ErrorKind::Divergence,
               "green_norm_estimate: Q-integral exceeds the overflow guard at t = " +
                   std::to_string(grid_[k].t) + "; no dichotomy on the window");
        }
      }
    }
    est.profile[k] = sum;
  });

  est.value = *std::max_element(est.profile.begin(), est.profile.end());
  est.tail = tail_factor_.empty() ? 0.0 : *std::max_element(tail_factor_.begin(), tail_factor_.end());

  if (truncated_ && n >= 4) {
    const double t_quarter = grid_.front() + 0.75 * (grid_.back() - grid_.front());
    double head = 0.0;
    double last = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double& slot = grid_[k].t < t_quarter ? head : last;
      slot = std::max(slot, est.profile[k]);
    }
    if (last > head * (1.0 + options_.growth_tol)) {
      std::ostringstream msg;
      msg << "green_norm_estimate: the norm profile still grows in the last quarter of the window ("
          << head << " -> " << last << "); the integral diverges on the unbounded scale";
      fail(ErrorKind::Divergence, msg.str());
    }
  }
  return est;
}

GreenVerification GreenOperator::verify(const Forcing& f, double tol) const {
  GreenVerification v;
  try {
    const GreenResult r = apply(f);
    v.residual = residual(r.trajectory, a_, sample_forcing(f, a_.dim, grid_));
    v.pass = v.residual <= tol;
    if (!v.pass) {
      std::ostringstream msg;
      msg << "residual " << v.residual << " exceeds " << tol;
      v.reason = msg.str();
    }
  } catch (const Error& e) {
    v.reason = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return v;
}

}  // namespace chronoscale
