#include "ietidp/krylov.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace ietidp {

namespace {
constexpr int kResidualRefresh = 50;
// Below this ratio to the initial residual the right-hand side counts as zero.
constexpr double kNegligibleRhs = 1e-10;
// Residual reduction reachable in double precision; used when b is roundoff.
constexpr double kRoundoffFloor = 1e3 * std::numeric_limits<double>::epsilon();
}

std::pair<double, double> lanczos_extremes(std::span<const double> alphas, std::span<const double> betas,
                                           double filter) {
  const std::size_t m = alphas.size();
  if (m == 0) throw Error("krylov", "no iterations recorded");
  if (betas.size() + 1 < m) throw Error("krylov", "lanczos_extremes: need at least m-1 betas");
  Vector diag(static_cast<Index>(m));
  Vector sub(static_cast<Index>(m > 1 ? m - 1 : 0));
  for (std::size_t j = 0; j < m; ++j) {
    diag[j] = 1.0 / alphas[j];
    if (j > 0) diag[j] += betas[j - 1] / alphas[j - 1];
    if (j + 1 < m) sub[j] = std::sqrt(betas[j]) / alphas[j];
  }
  if (m == 1) return {diag[0], diag[0]};
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const Vector &ritz = eig.eigenvalues();
  const double largest = ritz.maxCoeff();
  double smallest = largest;
  for (Index i = 0; i < ritz.size(); ++i)
    if (ritz[i] >= filter * largest) smallest = std::min(smallest, ritz[i]);
  return {smallest, largest};
}

PcgResult pcg(const LinearOperator &apply_A, const LinearOperator &apply_M, const Vector &b, const Vector &x0,
              double tol, int max_iter) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = apply_A.dimension;
  if (b.size() != n || x0.size() != n || apply_M.dimension != n) throw Error("krylov", "pcg: dimension mismatch");

  PcgResult result;
  auto &rep = result.report;
  Vector &x = result.x;
  x = x0;
  double b_norm = b.norm();
  if (b_norm == 0.0) {
    x.setZero();
    rep.residual_history.push_back(0.0);
    rep.converged = true;
    return result;
  }

  Vector r(n), z(n), q(n);
  apply_A.apply(x, q);
  r = b - q;
  if (b_norm < kNegligibleRhs * r.norm()) {
    b_norm = r.norm();
    tol = kRoundoffFloor;
  }
  rep.residual_history.push_back(r.norm() / b_norm);
  if (rep.residual_history.back() <= tol) rep.converged = true;

  apply_M.apply(r, z);
  Vector p = z;
  double rz = r.dot(z);
  while (!rep.converged && rep.iterations < max_iter) {
    apply_A.apply(p, q);
    const double curvature = p.dot(q);
    if (!(curvature > 0.0)) throw Error("krylov", "operator not positive definite (<p, Ap> = " +
                                                      std::to_string(curvature) + ")");
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * q;
    ++rep.iterations;
    rep.alphas.push_back(alpha);
    if (rep.iterations % kResidualRefresh == 0) {
      apply_A.apply(x, q);
      r = b - q;
    }
    rep.residual_history.push_back(r.norm() / b_norm);
    if (rep.residual_history.back() <= tol) {
      rep.converged = true;
      break;
    }
    apply_M.apply(r, z);
    const double rz_next = r.dot(z);
    if (rz_next <= 0.0) throw Error("krylov", "preconditioner not positive definite on the residual");
    const double beta = rz_next / rz;
    rep.betas.push_back(beta);
    rz = rz_next;
    p = z + beta * p;
  }

  if (!rep.alphas.empty()) {
    const auto [lo, hi] = lanczos_extremes(rep.alphas, rep.betas);
    rep.lambda_min = lo;
    rep.lambda_max = hi;
    rep.condition = std::max(1.0, hi / lo);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Vector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = 2.0 * std::ldexp(static_cast<double>(gen() >> 11), -53) - 1.0;
  return out;
}

} // namespace ietidp
