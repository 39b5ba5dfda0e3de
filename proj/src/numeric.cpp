#include "chronoscale/numeric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace chronoscale {

double op_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  if (m.rows() == 2 && m.cols() == 2) {
    // Largest eigenvalue of the 2x2 Gram matrix in closed form.
    const double a = m(0, 0) * m(0, 0) + m(1, 0) * m(1, 0);
    const double d = m(0, 1) * m(0, 1) + m(1, 1) * m(1, 1);
    const double b = m(0, 0) * m(0, 1) + m(1, 0) * m(1, 1);
    const double half = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return std::sqrt(half + disc);
  }

  const Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols()) / std::sqrt(double(m.cols()));
  double estimate = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::VectorXd w = gram * v;
    const double wn = w.norm();
    if (wn == 0.0) {
      // v landed in the kernel; fall back to the largest column.
      return m.colwise().norm().maxCoeff();
    }
    v = w / wn;
    const double next = std::sqrt(wn);
    if (std::abs(next - estimate) <= 1e-10 * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // The Rayleigh quotient is a lower bound; the largest column norm is
  // another, so take the larger of the two.
  return std::max(estimate, m.colwise().norm().maxCoeff());
}

std::vector<double> derivative_weights(double x0, std::span<const double> nodes) {
  const std::size_t n = nodes.size();
  // c[j][k]: weight of node j for derivative order k (k = 0, 1).
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (double(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - double(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = c[j][1];
  return w;
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHRONOSCALE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
    } catch (...) {
    }
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace chronoscale
