#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ietidp/error.hpp"

namespace ietidp {

/// Active basis functions at a parameter value: the p+1 functions starting at
/// `first` are the only ones that can be nonzero.
template <typename Scalar>
struct BasisValues {
  int first = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
};

/// Values and first derivatives of the active functions in one pass.
template <typename Scalar>
struct BasisValuesAndDerivs {
  int first = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> derivs;
};

/// Open knot vector on [0,1].
///
/// The first and last knots are repeated degree+1 times and interior knots
/// have multiplicity at most degree. Spans are half-open [t_s, t_{s+1}) except
/// that x = 1 belongs to the last nonempty span.
template <typename Scalar>
class BasicKnotVector {
public:
  BasicKnotVector() = default;

  BasicKnotVector(int degree, std::vector<Scalar> knots) : degree_(degree), knots_(std::move(knots)) {
    validate();
  }

  int degree() const noexcept { return degree_; }
  const std::vector<Scalar> &knots() const noexcept { return knots_; }
  /// Number of basis functions.
  int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }

  std::vector<Scalar> breaks() const {
    std::vector<Scalar> out(knots_.begin(), knots_.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  int num_intervals() const { return static_cast<int>(breaks().size()) - 1; }

  /// Knot averages; the coefficients that reproduce the identity map.
  std::vector<Scalar> greville() const {
    std::vector<Scalar> g(size());
    for (int i = 0; i < size(); ++i) {
      Scalar s = 0;
      for (int j = 1; j <= degree_; ++j) s += knots_[i + j];
      g[i] = s / Scalar(degree_);
    }
    return g;
  }

  /// Index s of the span [t_s, t_{s+1}) containing x, with degree <= s < size().
  int find_span(Scalar x) const {
    check_domain(x);
    const int n = size();
    if (x >= knots_[n]) return n - 1;
    const auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + n + 1, x);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  BasisValues<Scalar> eval(Scalar x) const {
    const auto all = eval_with_derivs(x);
    return {all.first, all.values};
  }

  BasisValues<Scalar> eval_deriv(Scalar x) const {
    const auto all = eval_with_derivs(x);
    return {all.first, all.derivs};
  }

  /// Cox-de Boor triangle for values, derivatives from the degree p-1 row.
  BasisValuesAndDerivs<Scalar> eval_with_derivs(Scalar x) const {
    const int p = degree_;
    const int span = find_span(x);
    std::vector<Scalar> left(p + 1), right(p + 1);
    // table[j] holds degree-j values; keep degree p-1 for the derivative.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> n = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(p + 1);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lower = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(p);
    n[0] = Scalar(1);
    for (int j = 1; j <= p; ++j) {
      if (j == p) lower = n.head(p);
      left[j] = x - knots_[span + 1 - j];
      right[j] = knots_[span + j] - x;
      Scalar saved = 0;
      for (int r = 0; r < j; ++r) {
        const Scalar temp = n[r] / (right[r + 1] + left[j - r]);
        n[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      n[j] = saved;
    }
    if (p == 0) lower.resize(0);

    BasisValuesAndDerivs<Scalar> out;
    out.first = span - p;
    out.values = n;
    out.derivs = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(p + 1);
    // N'_{i,p} = p [ N_{i,p-1}/(t_{i+p}-t_i) - N_{i+1,p-1}/(t_{i+p+1}-t_{i+1}) ]
    for (int a = 0; a <= p; ++a) {
      const int i = out.first + a;
      Scalar d = 0;
      if (a >= 1) {
        const Scalar den = knots_[i + p] - knots_[i];
        if (den > 0) d += lower[a - 1] / den;
      }
      if (a < p) {
        const Scalar den = knots_[i + p + 1] - knots_[i + 1];
        if (den > 0) d -= lower[a] / den;
      }
      out.derivs[a] = Scalar(p) * d;
    }
    return out;
  }

  bool operator==(const BasicKnotVector &other) const {
    return degree_ == other.degree_ && knots_ == other.knots_;
  }

private:
  void check_domain(Scalar x) const {
    if (!(x >= Scalar(0) && x <= Scalar(1))) {
      std::ostringstream msg;
      msg << "parameter " << x << " outside [0,1]";
      throw Error("spline", msg.str());
    }
  }

  void validate() const {
    const int p = degree_;
    if (p < 1) throw Error("spline", "degree must be >= 1, got " + std::to_string(p));
    const int m = static_cast<int>(knots_.size());
    if (m < 2 * (p + 1))
      throw Error("spline", "knot vector too short: " + std::to_string(m) + " knots for degree " + std::to_string(p));
    for (int i = 0; i + 1 < m; ++i)
      if (!(knots_[i] <= knots_[i + 1]))
        throw Error("spline", "knots not nondecreasing at knot index " + std::to_string(i + 1));
    for (int i = 0; i <= p; ++i) {
      if (knots_[i] != Scalar(0))
        throw Error("spline", "knot vector not open at start: knot index " + std::to_string(i) + " != 0");
      if (knots_[m - 1 - i] != Scalar(1))
        throw Error("spline", "knot vector not open at end: knot index " + std::to_string(m - 1 - i) + " != 1");
    }
    if (knots_[p + 1] == Scalar(0))
      throw Error("spline", "start knot multiplicity exceeds degree+1 at knot index " + std::to_string(p + 1));
    if (knots_[m - p - 2] == Scalar(1))
      throw Error("spline", "end knot multiplicity exceeds degree+1 at knot index " + std::to_string(m - p - 2));
    int run = 1;
    for (int i = p + 2; i < m - p - 1; ++i) {
      run = knots_[i] == knots_[i - 1] ? run + 1 : 1;
      if (run > p)
        throw Error("spline", "interior knot multiplicity exceeds degree at knot index " + std::to_string(i));
    }
  }

  int degree_ = 1;
  std::vector<Scalar> knots_{0, 0, 1, 1};
};

using KnotVector = BasicKnotVector<double>;

/// Open uniform knots with n_intervals spans and C^{p-1} continuity.
template <typename Scalar = double>
BasicKnotVector<Scalar> make_uniform_knots(int degree, int n_intervals) {
  if (degree < 1) throw Error("spline", "degree must be >= 1");
  if (n_intervals < 1) throw Error("spline", "number of intervals must be >= 1");
  std::vector<Scalar> knots(degree + 1, Scalar(0));
  for (int i = 1; i < n_intervals; ++i) knots.push_back(Scalar(i) / Scalar(n_intervals));
  knots.insert(knots.end(), degree + 1, Scalar(1));
  return BasicKnotVector<Scalar>(degree, std::move(knots));
}

/// Bisects every nonempty span once.
template <typename Scalar>
BasicKnotVector<Scalar> refine_uniform(const BasicKnotVector<Scalar> &kv) {
  const auto &t = kv.knots();
  std::vector<Scalar> out;
  out.reserve(t.size() * 2);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && t[i] > t[i - 1]) out.push_back((t[i] + t[i - 1]) / Scalar(2));
    out.push_back(t[i]);
  }
  return BasicKnotVector<Scalar>(kv.degree(), std::move(out));
}

/// Tensor product of 2 or 3 knot vectors. Dofs are numbered with the first
/// direction running fastest.
template <typename Scalar>
class BasicTensorBasis {
public:
  using MultiIndex = std::array<int, 3>;

  BasicTensorBasis() = default;
  explicit BasicTensorBasis(std::vector<BasicKnotVector<Scalar>> directions) : dirs_(std::move(directions)) {
    if (dirs_.size() < 1 || dirs_.size() > 3) throw Error("spline", "tensor basis needs 1 to 3 directions");
  }

  /// Same degree and interval count in every direction.
  static BasicTensorBasis uniform(int dim, int degree, int n_intervals) {
    return BasicTensorBasis(
        std::vector<BasicKnotVector<Scalar>>(dim, make_uniform_knots<Scalar>(degree, n_intervals)));
  }

  int dim() const noexcept { return static_cast<int>(dirs_.size()); }
  const BasicKnotVector<Scalar> &direction(int i) const { return dirs_.at(i); }
  const std::vector<BasicKnotVector<Scalar>> &directions() const noexcept { return dirs_; }

  int size(int direction) const { return dirs_.at(direction).size(); }
  int size() const {
    int n = 1;
    for (const auto &kv : dirs_) n *= kv.size();
    return n;
  }

  int index(const MultiIndex &mi) const {
    int idx = 0;
    for (int k = dim() - 1; k >= 0; --k) idx = idx * dirs_[k].size() + mi[k];
    return idx;
  }

  MultiIndex multi_index(int idx) const {
    MultiIndex mi{0, 0, 0};
    for (int k = 0; k < dim(); ++k) {
      mi[k] = idx % dirs_[k].size();
      idx /= dirs_[k].size();
    }
    return mi;
  }

  BasicTensorBasis refined() const {
    std::vector<BasicKnotVector<Scalar>> out;
    for (const auto &kv : dirs_) out.push_back(refine_uniform(kv));
    return BasicTensorBasis(std::move(out));
  }

  bool operator==(const BasicTensorBasis &other) const { return dirs_ == other.dirs_; }

private:
  std::vector<BasicKnotVector<Scalar>> dirs_;
};

using TensorBasis = BasicTensorBasis<double>;

/// Active tensor functions at a point: global indices, values, and gradients
/// with respect to the parameter (one row per active function).
template <typename Scalar>
struct TensorEval {
  std::vector<int> indices;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gradients;
};

template <typename Scalar, typename Point>
TensorEval<Scalar> tensor_eval(const BasicTensorBasis<Scalar> &basis, const Point &xi) {
  const int d = basis.dim();
  std::array<BasisValuesAndDerivs<Scalar>, 3> uni;
  std::array<int, 3> count{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    uni[k] = basis.direction(k).eval_with_derivs(Scalar(xi[k]));
    count[k] = static_cast<int>(uni[k].values.size());
  }
  const int n_active = count[0] * count[1] * count[2];

  TensorEval<Scalar> out;
  out.indices.resize(n_active);
  out.values.resize(n_active);
  out.gradients.resize(n_active, d);
  int a = 0;
  typename BasicTensorBasis<Scalar>::MultiIndex mi{0, 0, 0};
  for (int i2 = 0; i2 < count[2]; ++i2)
    for (int i1 = 0; i1 < count[1]; ++i1)
      for (int i0 = 0; i0 < count[0]; ++i0, ++a) {
        const std::array<int, 3> local{i0, i1, i2};
        Scalar value = 1;
        for (int k = 0; k < d; ++k) {
          mi[k] = uni[k].first + local[k];
          value *= uni[k].values[local[k]];
        }
        out.indices[a] = basis.index(mi);
        out.values[a] = value;
        for (int g = 0; g < d; ++g) {
          Scalar prod = 1;
          for (int k = 0; k < d; ++k) prod *= (k == g ? uni[k].derivs[local[k]] : uni[k].values[local[k]]);
          out.gradients(a, g) = prod;
        }
      }
  return out;
}

} // namespace ietidp
