#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "ietidp/error.hpp"

namespace ietidp {

/// Gauss-Legendre nodes and weights on [0,1] (weights sum to one).
template <typename Scalar = double>
struct GaussRule1D {
  std::vector<Scalar> points;
  std::vector<Scalar> weights;
};

template <typename Scalar = double>
GaussRule1D<Scalar> gauss_legendre(int n) {
  if (n < 1) throw Error("assembly", "quadrature needs at least one point");
  GaussRule1D<Scalar> rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    Scalar x = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Scalar(1e-16)) break;
    }
    {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
    }
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.points[i] = (1 - x) / 2;
    rule.points[n - 1 - i] = (1 + x) / 2;
    rule.weights[i] = w / 2;
    rule.weights[n - 1 - i] = w / 2;
  }
  return rule;
}

/// Tensorized Gauss rule on [0,1]^d; points are rows of a (count x d) matrix.
template <typename Scalar = double>
struct QuadRule {
  int dim = 0;
  GaussRule1D<Scalar> line;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> points;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

template <typename Scalar = double>
QuadRule<Scalar> gauss_rule(int n_points_per_direction, int dim) {
  if (dim < 1 || dim > 3) throw Error("assembly", "quadrature dimension must be 1, 2 or 3");
  QuadRule<Scalar> rule;
  rule.dim = dim;
  rule.line = gauss_legendre<Scalar>(n_points_per_direction);
  const int n = n_points_per_direction;
  int total = 1;
  for (int k = 0; k < dim; ++k) total *= n;
  rule.points.resize(total, dim);
  rule.weights.resize(total);
  for (int q = 0; q < total; ++q) {
    int rest = q;
    Scalar w = 1;
    for (int k = 0; k < dim; ++k) {
      const int i = rest % n;
      rest /= n;
      rule.points(q, k) = rule.line.points[i];
      w *= rule.line.weights[i];
    }
    rule.weights[q] = w;
  }
  return rule;
}

} // namespace ietidp
