#pragma once

// Shared test helpers: seeded generators and independent oracles.

#include "chronoscale/timescale.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

  /// Smooth bounded coefficient c0 + c1 sin(w1 t + p1) + c2 cos(w2 t), |.| <= amp.
  std::function<double(double)> smooth_coefficient(double amp) {
    const double c0 = uniform(-amp / 3, amp / 3);
    const double c1 = uniform(-amp / 3, amp / 3);
    const double c2 = uniform(-amp / 3, amp / 3);
    const double w1 = uniform(0.1, 2.0);
    const double w2 = uniform(0.1, 2.0);
    const double p1 = uniform(0.0, 6.28);
    return [=](double t) { return c0 + c1 * std::sin(w1 * t + p1) + c2 * std::cos(w2 * t); };
  }

private:
  std::mt19937_64 rng_;
};

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

/// Brute-force oracle for e_p(t, s), t >= s: multiply 1 + mu p across jumps and
/// integrate p over dense steps by adaptive Gauss-Kronrod-free Romberg.
inline double romberg(const std::function<double(double)>& f, double a, double b) {
  const int levels = 12;
  std::vector<std::vector<double>> r(levels, std::vector<double>(levels));
  double h = b - a;
  r[0][0] = 0.5 * h * (f(a) + f(b));
  for (int i = 1; i < levels; ++i) {
    h *= 0.5;
    double sum = 0.0;
    for (int k = 1; k < (1 << i); k += 2) sum += f(a + k * h);
    r[i][0] = 0.5 * r[i - 1][0] + h * sum;
    double p4 = 4.0;
    for (int j = 1; j <= i; ++j) {
      r[i][j] = r[i][j - 1] + (r[i][j - 1] - r[i - 1][j - 1]) / (p4 - 1.0);
      p4 *= 4.0;
    }
    if (i > 4 && std::abs(r[i][i] - r[i - 1][i - 1]) <= 1e-14 * std::max(1.0, std::abs(r[i][i]))) {
      return r[i][i];
    }
  }
  return r[levels - 1][levels - 1];
}

}  // namespace testing_support
