#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ietidp/linalg.hpp"
#include "support/oracles.hpp"

using namespace ietidp;

namespace {

SparseMatrix to_sparse(const DenseMatrix &m) { return m.sparseView(); }

DenseMatrix random_dense(Index rows, Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(gen);
  return m;
}

Vector random_vec(Index n, unsigned seed) { return random_dense(n, 1, seed).col(0); }

} // namespace

TEST(Factorize, IdentitySolve) {
  const auto f = factorize(to_sparse(DenseMatrix::Identity(3, 3)), FactorKind::SPD);
  const Vector x = solve(f, Vector::LinSpaced(3, 1, 3));
  EXPECT_EQ(x, Vector::LinSpaced(3, 1, 3));
}

TEST(Factorize, TwoByTwoSpd) {
  DenseMatrix m(2, 2);
  m << 2, 1, 1, 2;
  const Vector x = factorize(to_sparse(m), FactorKind::SPD).solve(Vector(Vector::Constant(2, 3.0)));
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(Factorize, RandomSpdMatchesGaussianElimination) {
  const DenseMatrix a = random_dense(50, 50, 7);
  const DenseMatrix m = a + a.transpose() + 50.0 * DenseMatrix::Identity(50, 50);
  const Vector b = random_vec(50, 8);
  const Vector x = factorize(to_sparse(m), FactorKind::SPD).solve(b);
  const Vector ref = oracle::gauss_solve(m, b);
  EXPECT_LE((x - ref).norm() / ref.norm(), 1e-10);
}

TEST(Factorize, ZeroRightHandSide) {
  const auto f = factorize(to_sparse(DenseMatrix::Identity(2, 2)), FactorKind::SPD);
  EXPECT_EQ(solve(f, Vector::Zero(2)), Vector::Zero(2));
}

TEST(Factorize, SaddleHandSolve) {
  DenseMatrix m(2, 2);
  m << 1, 1, 1, 0;
  const Vector x = factorize(to_sparse(m), FactorKind::SymmetricIndefinite).solve(Vector(Eigen::Vector2d(2, 1)));
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(Factorize, BlockSolveEqualsColumnwise) {
  const DenseMatrix a = random_dense(12, 12, 3);
  DenseMatrix m = DenseMatrix::Zero(15, 15);
  m.topLeftCorner(12, 12) = a * a.transpose() + DenseMatrix::Identity(12, 12);
  m.block(12, 0, 3, 12) = random_dense(3, 12, 4);
  m.block(0, 12, 12, 3) = m.block(12, 0, 3, 12).transpose();
  const auto f = factorize(to_sparse(m), FactorKind::SymmetricIndefinite);
  const DenseMatrix rhs = random_dense(15, 4, 5);
  const DenseMatrix block = f.solve(rhs);
  const DenseMatrix ref = m.fullPivLu().solve(rhs);
  for (Index j = 0; j < rhs.cols(); ++j) {
    const Vector col = f.solve(Vector(rhs.col(j)));
    EXPECT_LE((col - block.col(j)).norm(), 1e-14 * block.col(j).norm());
    EXPECT_LE((col - ref.col(j)).norm(), 1e-10 * ref.col(j).norm());
  }
}

TEST(Factorize, SingularReportsPivotStage) {
  DenseMatrix m = DenseMatrix::Zero(3, 3);
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(0, 1) = m(1, 0) = 1;
  m(2, 2) = 2;
  for (auto kind : {FactorKind::SPD, FactorKind::SymmetricIndefinite}) {
    try {
      factorize(to_sparse(m), kind);
      FAIL() << "expected singular matrix error";
    } catch (const Error &e) {
      EXPECT_NE(std::string(e.what()).find("singular matrix"), std::string::npos) << e.what();
      EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
    }
  }
}

TEST(Factorize, DimensionMismatch) {
  const auto f = factorize(to_sparse(DenseMatrix::Identity(3, 3)), FactorKind::SPD);
  EXPECT_THROW(f.solve(Vector(Vector::Zero(2))), Error);
}

TEST(Factorize, ResidualPropertyOnSpdFamily) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Index n = 5 + 7 * seed;
    const DenseMatrix a = random_dense(n, n, 100 + seed);
    const DenseMatrix m = a * a.transpose() + double(n) * DenseMatrix::Identity(n, n);
    const Vector b = random_vec(n, 200 + seed);
    const Vector x = factorize(to_sparse(m), FactorKind::SPD).solve(b);
    EXPECT_LE((m * x - b).norm(), 1e-10 * b.norm());
  }
}

TEST(Factorize, RepeatedFactorizationsAgree) {
  const DenseMatrix a = random_dense(30, 30, 11);
  const SparseMatrix m = to_sparse(a * a.transpose() + 30.0 * DenseMatrix::Identity(30, 30));
  const Vector b = random_vec(30, 12);
  const Vector x1 = factorize(m, FactorKind::SPD).solve(b);
  const Vector x2 = factorize(m, FactorKind::SPD).solve(b);
  EXPECT_LE((x1 - x2).norm(), 1e-14 * x1.norm());
}

TEST(SparseMatvec, ZeroAndIdentity) {
  const Vector x = random_vec(6, 1);
  EXPECT_EQ(sparse_matvec(SparseMatrix(6, 6), x), Vector::Zero(6));
  EXPECT_EQ(sparse_matvec(to_sparse(DenseMatrix::Identity(6, 6)), x), x);
}

TEST(SparseMatvec, RandomMatchesDenseProduct) {
  DenseMatrix m = random_dense(20, 30, 21);
  m = (m.array().abs() > 0.5).select(m, 0.0);
  const Vector x = random_vec(30, 22);
  const Vector y = random_vec(20, 23);
  EXPECT_LE((sparse_matvec(to_sparse(m), x) - m * x).norm(), 1e-14 * (m * x).norm());
  EXPECT_LE((sparse_transpose_matvec(to_sparse(m), y) - m.transpose() * y).norm(), 1e-14 * (m.transpose() * y).norm());
}

TEST(SparseMatvec, TransposeBitwiseOnRepresentableData) {
  DenseMatrix m(3, 4);
  m << 1, 0, 2, 0, 0, 3, 0, -1, 4, 0, 0.5, 2;
  const Vector x = Vector(Eigen::Vector3d(1, -2, 0.25));
  const SparseMatrix s = to_sparse(m);
  const SparseMatrix st = s.transpose();
  EXPECT_EQ(sparse_transpose_matvec(s, x), sparse_matvec(st, x));
}

TEST(SparseMatvec, DimensionMismatch) {
  EXPECT_THROW(sparse_matvec(SparseMatrix(3, 4), Vector::Zero(3)), Error);
  EXPECT_THROW(sparse_transpose_matvec(SparseMatrix(3, 4), Vector::Zero(4)), Error);
}

TEST(LinearOperator, ToDenseRoundTrip) {
  const DenseMatrix m = random_dense(7, 7, 31);
  EXPECT_EQ(to_dense(make_operator(m)), m);
  EXPECT_EQ(to_dense(identity_operator(4)), DenseMatrix::Identity(4, 4));
}

TEST(MatrixMarket, HeaderAndEntries) {
  DenseMatrix m = DenseMatrix::Zero(2, 3);
  m(0, 1) = 0.1;
  m(1, 2) = -2;
  std::ostringstream out;
  write_matrix_market(out, to_sparse(m));
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real general");
  int r, c, nnz;
  in >> r >> c >> nnz;
  EXPECT_EQ(r, 2);
  EXPECT_EQ(c, 3);
  EXPECT_EQ(nnz, 2);
  int i, j;
  double v;
  in >> i >> j >> v;
  EXPECT_EQ(i, 1);
  EXPECT_EQ(j, 2);
  EXPECT_EQ(v, 0.1);
}
