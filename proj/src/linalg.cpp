#include "ietidp/linalg.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <variant>

namespace ietidp {

namespace {

constexpr double kPivotTolerance = 1e-12;

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

// Exposes the diagonal of U, which SparseLU keeps inside its supernodal L store.
class PivotedLu : public Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> {
public:
  std::pair<double, Index> smallest_pivot() const {
    double smallest = std::numeric_limits<double>::infinity();
    Index where = 0;
    for (Index j = 0; j < this->cols(); ++j) {
      double pivot = 0.0;
      for (SCMatrix::InnerIterator it(m_Lstore, j); it; ++it) {
        if (it.index() == j) {
          pivot = std::abs(it.value());
          break;
        }
      }
      if (pivot < smallest) {
        smallest = pivot;
        where = j;
      }
    }
    return {smallest, where};
  }
};

double max_abs_diagonal(const SparseMatrix &m) {
  double largest = 0.0;
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (it.row() == it.col()) largest = std::max(largest, std::abs(it.value()));
  return largest;
}

[[noreturn]] void singular(const std::string &stage, Index step, double pivot, double threshold) {
  std::ostringstream msg;
  msg << "singular matrix: " << stage << " pivot " << pivot << " at elimination step " << step
      << " is below threshold " << threshold;
  throw Error("linalg", msg.str());
}

} // namespace

struct Factorization::Impl {
  std::variant<Ldlt, PivotedLu> solver;
  explicit Impl(FactorKind kind) {
    if (kind == FactorKind::SPD)
      solver.emplace<Ldlt>();
    else
      solver.emplace<PivotedLu>();
  }
};

Factorization::Factorization() = default;
Factorization::Factorization(Factorization &&) noexcept = default;
Factorization &Factorization::operator=(Factorization &&) noexcept = default;
Factorization::~Factorization() = default;

Factorization::Factorization(const SparseMatrix &matrix, FactorKind kind)
    : impl_(std::make_unique<Impl>(kind)), size_(matrix.rows()), kind_(kind) {
  if (matrix.rows() != matrix.cols())
    throw Error("linalg", "factorize: matrix is not square");
  if (size_ == 0) return;

  // Without any diagonal entry (pure saddle block) fall back to the entry scale.
  double scale = max_abs_diagonal(matrix);
  if (scale == 0.0) scale = matrix.coeffs().cwiseAbs().maxCoeff();
  const double threshold = kPivotTolerance * scale;

  SparseMatrix compressed = matrix;
  compressed.makeCompressed();

  if (kind == FactorKind::SPD) {
    auto &ldlt = std::get<Ldlt>(impl_->solver);
    ldlt.compute(compressed);
    if (ldlt.info() != Eigen::Success) singular("LDL^T", 0, 0.0, threshold);
    const Vector d = ldlt.vectorD();
    Index step = 0;
    const double smallest = d.minCoeff(&step);
    if (smallest < -threshold)
      throw Error("linalg", "factorize: matrix is not positive definite (negative pivot at elimination step " +
                                std::to_string(step) + ")");
    if (smallest < threshold) singular("LDL^T", step, smallest, threshold);
  } else {
    auto &lu = std::get<PivotedLu>(impl_->solver);
    lu.analyzePattern(compressed);
    lu.factorize(compressed);
    if (lu.info() != Eigen::Success) {
      // Eigen reports the failing column as the trailing number of its message.
      const std::string text = lu.lastErrorMessage();
      const auto digits = text.find_last_not_of("0123456789");
      const std::string step = digits + 1 < text.size() ? text.substr(digits + 1) : "unknown";
      throw Error("linalg", "singular matrix: LU failed at elimination step " + step + " (" + text + ")");
    }
    const auto [pivot, step] = lu.smallest_pivot();
    if (pivot < threshold) singular("LU", step, pivot, threshold);
  }
}

Vector Factorization::solve(const Vector &rhs) const {
  if (rhs.size() != size_)
    throw Error("linalg", "solve: dimension mismatch (rhs " + std::to_string(rhs.size()) + ", matrix " +
                              std::to_string(size_) + ")");
  if (size_ == 0) return Vector();
  return std::visit([&](const auto &s) -> Vector { return s.solve(rhs); }, impl_->solver);
}

DenseMatrix Factorization::solve(const DenseMatrix &rhs) const {
  if (rhs.rows() != size_)
    throw Error("linalg", "solve: dimension mismatch (rhs " + std::to_string(rhs.rows()) + ", matrix " +
                              std::to_string(size_) + ")");
  if (size_ == 0 || rhs.cols() == 0) return DenseMatrix::Zero(size_, rhs.cols());
  return std::visit([&](const auto &s) -> DenseMatrix { return s.solve(rhs); }, impl_->solver);
}

Factorization factorize(const SparseMatrix &matrix, FactorKind kind) { return Factorization(matrix, kind); }

Vector solve(const Factorization &factor, const Vector &rhs) { return factor.solve(rhs); }

Vector sparse_matvec(const SparseMatrix &matrix, const Eigen::Ref<const Vector> &x) {
  if (x.size() != matrix.cols()) throw Error("linalg", "sparse_matvec: dimension mismatch");
  return matrix * x;
}

Vector sparse_transpose_matvec(const SparseMatrix &matrix, const Eigen::Ref<const Vector> &x) {
  if (x.size() != matrix.rows()) throw Error("linalg", "sparse_transpose_matvec: dimension mismatch");
  return matrix.transpose() * x;
}

LinearOperator make_operator(const SparseMatrix &matrix) {
  return {matrix.rows(), [&matrix](const Vector &x, Vector &y) { y.noalias() = matrix * x; }};
}

LinearOperator make_operator(const DenseMatrix &matrix) {
  return {matrix.rows(), [&matrix](const Vector &x, Vector &y) { y.noalias() = matrix * x; }};
}

LinearOperator identity_operator(Index dimension) {
  return {dimension, [](const Vector &x, Vector &y) { y = x; }};
}

DenseMatrix to_dense(const LinearOperator &op) {
  DenseMatrix out(op.dimension, op.dimension);
  Vector unit = Vector::Zero(op.dimension);
  Vector column(op.dimension);
  for (Index j = 0; j < op.dimension; ++j) {
    unit[j] = 1.0;
    op.apply(unit, column);
    out.col(j) = column;
    unit[j] = 0.0;
  }
  return out;
}

void write_matrix_market(std::ostream &out, const SparseMatrix &matrix) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(const std::string &path, const SparseMatrix &matrix) {
  std::ofstream file(path);
  if (!file) throw Error("linalg", "cannot open " + path + " for writing");
  write_matrix_market(file, matrix);
}

} // namespace ietidp
