#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include "ietidp/error.hpp"

namespace ietidp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Column-major compressed storage. Duplicates are summed by setFromTriplets.
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class FactorKind { SPD, SymmetricIndefinite };

/// Sparse direct factorization reusable for many right-hand sides.
///
/// SPD matrices use a simplicial LDL^T with AMD ordering; symmetric
/// indefinite matrices (saddle-point blocks) use a supernodal LU with
/// COLAMD ordering and partial pivoting. A pivot smaller than
/// 1e-12 * max|diag(M)| is reported as singular.
class Factorization {
public:
  Factorization();
  Factorization(const SparseMatrix &matrix, FactorKind kind);
  Factorization(Factorization &&) noexcept;
  Factorization &operator=(Factorization &&) noexcept;
  ~Factorization();

  Index size() const noexcept { return size_; }
  FactorKind kind() const noexcept { return kind_; }

  Vector solve(const Vector &rhs) const;
  DenseMatrix solve(const DenseMatrix &rhs) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index size_ = 0;
  FactorKind kind_ = FactorKind::SPD;
};

Factorization factorize(const SparseMatrix &matrix, FactorKind kind);
Vector solve(const Factorization &factor, const Vector &rhs);

Vector sparse_matvec(const SparseMatrix &matrix, const Eigen::Ref<const Vector> &x);
Vector sparse_transpose_matvec(const SparseMatrix &matrix, const Eigen::Ref<const Vector> &x);

/// Square operator given only through its action.
struct LinearOperator {
  Index dimension = 0;
  std::function<void(const Vector &, Vector &)> apply;

  Vector operator()(const Vector &x) const {
    Vector y(dimension);
    apply(x, y);
    return y;
  }
};

LinearOperator make_operator(const SparseMatrix &matrix);
LinearOperator make_operator(const DenseMatrix &matrix);
LinearOperator identity_operator(Index dimension);

/// Forms the dense matrix of an operator by applying it to unit vectors.
DenseMatrix to_dense(const LinearOperator &op);

/// MatrixMarket coordinate real general.
void write_matrix_market(std::ostream &out, const SparseMatrix &matrix);
void write_matrix_market(const std::string &path, const SparseMatrix &matrix);

} // namespace ietidp
