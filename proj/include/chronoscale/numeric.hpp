#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace chronoscale {

/// Operator 2-norm. Vectors and 2x2 matrices are exact; larger matrices use
/// power iteration on M^T M (at most 50 sweeps, stopping at relative change 1e-10).
double op_norm(const Eigen::MatrixXd& m);

/// Finite-difference weights for the first derivative at x0 over arbitrary
/// distinct nodes (Fornberg's recursion).
std::vector<double> derivative_weights(double x0, std::span<const double> nodes);

/// Number of worker threads: CHRONOSCALE_THREADS when set and positive,
/// otherwise the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) across worker_count() threads. The body must
/// only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace chronoscale
