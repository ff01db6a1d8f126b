#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ietidp/linalg.hpp"

namespace ietidp {

struct PcgReport {
  int iterations = 0;
  /// ||b - A x_j|| / ||b|| for j = 0..iterations.
  std::vector<double> residual_history;
  std::vector<double> alphas;
  std::vector<double> betas;
  double lambda_min = 1;
  double lambda_max = 1;
  double condition = 1;
  bool converged = false;
  double seconds = 0;
};

struct PcgResult {
  Vector x;
  PcgReport report;
};

/// Preconditioned conjugate gradients. Stops once the unpreconditioned
/// residual satisfies ||b - A x|| <= tol ||b||; exceeding max_iter yields a
/// non-converged report. If ||b|| is below 1e-10 of the initial residual, b is
/// treated as roundoff: the residual is then reduced to 1e3 machine epsilon
/// relative to the initial residual. The residual is recomputed from A every
/// 50 steps.
PcgResult pcg(const LinearOperator &apply_A, const LinearOperator &apply_M, const Vector &b, const Vector &x0,
              double tol, int max_iter);

/// Extreme eigenvalues of the Lanczos tridiagonal assembled from CG step
/// lengths (alphas) and direction updates (betas). Ritz values below
/// filter * largest are dropped.
std::pair<double, double> lanczos_extremes(std::span<const double> alphas, std::span<const double> betas,
                                           double filter = 1e-10);

/// Uniform [-1,1) entries from a seeded 64-bit Mersenne twister; identical
/// across platforms for equal seeds.
Vector random_vector(Index n, std::uint64_t seed);

} // namespace ietidp
