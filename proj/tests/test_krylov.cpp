#include <gtest/gtest.h>

#include <limits>

#include "ietidp/krylov.hpp"

using namespace ietidp;

namespace {

LinearOperator diagonal(const Vector &d) {
  return {d.size(), [d](const Vector &x, Vector &y) { y = d.cwiseProduct(x); }};
}

} // namespace

TEST(Pcg, IdentityOneIteration) {
  const Vector b = random_vector(8, 1);
  const auto res = pcg(identity_operator(8), identity_operator(8), b, Vector::Zero(8), 1e-12, 10);
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 1);
  EXPECT_NEAR(res.report.condition, 1.0, 1e-14);
  EXPECT_LE((res.x - b).norm(), 1e-14);
}

TEST(Pcg, DiagonalSpectrumEstimate) {
  const Vector d = Vector::LinSpaced(10, 1, 10);
  const auto res = pcg(diagonal(d), identity_operator(10), random_vector(10, 2), Vector::Zero(10), 1e-14, 10);
  EXPECT_EQ(res.report.iterations, 10);
  EXPECT_NEAR(res.report.condition, 10.0, 0.2);
}

TEST(Pcg, ExactPreconditioner) {
  // The preconditioner is applied as M^-1: diag(1,4) against A = diag(1,4).
  const Vector d(Eigen::Vector2d(1, 4));
  const auto res = pcg(diagonal(d), diagonal(d.cwiseInverse()), Vector(Eigen::Vector2d(1, 1)), Vector::Zero(2), 1e-12, 10);
  EXPECT_EQ(res.report.iterations, 1);
  EXPECT_NEAR(res.report.condition, 1.0, 1e-12);
  EXPECT_NEAR(res.x[1], 0.25, 1e-15);
}

TEST(Pcg, StopsOnUnpreconditionedResidual) {
  const Vector d = Vector::LinSpaced(50, 1, 1000);
  const Vector b = random_vector(50, 3);
  const auto op = diagonal(d);
  const auto res = pcg(op, identity_operator(50), b, random_vector(50, 4), 1e-6, 500);
  ASSERT_TRUE(res.report.converged);
  EXPECT_LE((b - op(res.x)).norm(), 1e-6 * b.norm() * (1 + 1e-8));
  EXPECT_EQ(res.report.residual_history.size(), std::size_t(res.report.iterations) + 1);
  EXPECT_GT(res.report.residual_history[res.report.iterations - 1], 1e-6);
  EXPECT_GE(res.report.condition, 1.0);
}

TEST(Pcg, NonConvergenceIsReported) {
  const Vector d = Vector::LinSpaced(40, 1, 1e4);
  const auto res = pcg(diagonal(d), identity_operator(40), random_vector(40, 5), Vector::Zero(40), 1e-12, 3);
  EXPECT_FALSE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 3);
}

TEST(Pcg, NegativeCurvatureThrows) {
  const Vector d(Eigen::Vector3d(1, -2, 3));
  try {
    pcg(diagonal(d), identity_operator(3), Vector(Eigen::Vector3d(0, 1, 0)), Vector::Zero(3), 1e-10, 10);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("operator not positive definite"), std::string::npos);
  }
}

TEST(Pcg, ZeroRightHandSide) {
  const auto res = pcg(identity_operator(4), identity_operator(4), Vector::Zero(4), random_vector(4, 6), 1e-6, 10);
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.x, Vector::Zero(4));
}

TEST(Pcg, RoundoffRightHandSideIteratesToFloor) {
  const Vector d = Vector::LinSpaced(20, 1, 50);
  const auto op = diagonal(d);
  const Vector b = 1e-16 * random_vector(20, 9);
  const Vector x0 = random_vector(20, 10);
  const auto res = pcg(op, identity_operator(20), b, x0, 1e-2, 200);
  ASSERT_TRUE(res.report.converged);
  EXPECT_LE((b - op(res.x)).norm(), 1e3 * std::numeric_limits<double>::epsilon() * (b - op(x0)).norm() * (1 + 1e-6));
  EXPECT_LE(res.x.norm(), 1e-10);
}

TEST(Pcg, SemidefiniteConsistentSystem) {
  // Rank-deficient operator with b in its range.
  Eigen::MatrixXd q = Eigen::MatrixXd::Random(12, 12);
  q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ();
  Vector ev = Vector::LinSpaced(12, 0, 5);
  ev.head(3).setZero();
  const Eigen::MatrixXd a = q * ev.asDiagonal() * q.transpose();
  const Vector b = a * random_vector(12, 7);
  const auto res = pcg(make_operator(a), identity_operator(12), b, random_vector(12, 8), 1e-10, 50);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LE(res.report.iterations, 9 + 3);
  EXPECT_NEAR(res.report.condition, 5.0 / ev[3], 1e-6 * 5.0 / ev[3]);
}

TEST(Pcg, BitReproducible) {
  const Vector d = Vector::LinSpaced(30, 1, 100);
  const Vector b = random_vector(30, 9);
  const auto a = pcg(diagonal(d), identity_operator(30), b, random_vector(30, 10), 1e-8, 100);
  const auto c = pcg(diagonal(d), identity_operator(30), b, random_vector(30, 10), 1e-8, 100);
  EXPECT_EQ(a.x, c.x);
  EXPECT_EQ(a.report.residual_history, c.report.residual_history);
}

TEST(Lanczos, Examples) {
  const std::vector<double> alpha{1.0 / 3.0}, none;
  const auto [lo, hi] = lanczos_extremes(alpha, none);
  EXPECT_DOUBLE_EQ(lo, 3.0);
  EXPECT_DOUBLE_EQ(hi, 3.0);
  EXPECT_THROW(lanczos_extremes(none, none), Error);

  const auto res = pcg(diagonal(Vector(Eigen::Vector3d(1, 2, 3))), identity_operator(3), Vector::Ones(3),
                       Vector::Zero(3), 1e-14, 3);
  EXPECT_NEAR(res.report.lambda_min, 1.0, 1e-8);
  EXPECT_NEAR(res.report.lambda_max, 3.0, 1e-8);
}

TEST(Lanczos, MonotoneInIterations) {
  const Vector d = Vector::LinSpaced(60, 0.5, 40);
  const auto res = pcg(diagonal(d), identity_operator(60), random_vector(60, 11), Vector::Zero(60), 1e-12, 60);
  const auto &al = res.report.alphas;
  const auto &be = res.report.betas;
  double prev_lo = 1e300, prev_hi = 0;
  for (std::size_t m = 1; m <= al.size(); ++m) {
    const auto [lo, hi] = lanczos_extremes(std::span(al.data(), m), std::span(be.data(), m - 1));
    EXPECT_LE(lo, prev_lo * (1 + 1e-10));
    EXPECT_GE(hi, prev_hi * (1 - 1e-10));
    EXPECT_GE(lo, 0.5 * (1 - 1e-8));
    EXPECT_LE(hi, 40 * (1 + 1e-8));
    prev_lo = lo;
    prev_hi = hi;
  }
}

TEST(RandomVector, DeterministicInRange) {
  const Vector a = random_vector(100, 42), b = random_vector(100, 42), c = random_vector(100, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
}
