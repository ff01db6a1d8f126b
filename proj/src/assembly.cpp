#include "ietidp/assembly.hpp"

#include <array>
#include <cmath>

namespace ietidp {

namespace {

/// Univariate values and derivatives at the quadrature nodes of one span.
struct SpanTable {
  int first = 0;
  std::vector<double> points;  // parameter values
  std::vector<double> weights; // scaled by span length
  Eigen::MatrixXd values;      // (n_points x p+1)
  Eigen::MatrixXd derivs;
};

SpanTable tabulate(const KnotVector &kv, double lo, double hi, const GaussRule1D<double> &line) {
  SpanTable t;
  const int nq = static_cast<int>(line.points.size());
  const int p = kv.degree();
  t.values.resize(nq, p + 1);
  t.derivs.resize(nq, p + 1);
  for (int q = 0; q < nq; ++q) {
    const double x = lo + (hi - lo) * line.points[q];
    const auto ev = kv.eval_with_derivs(x);
    t.first = ev.first;
    t.points.push_back(x);
    t.weights.push_back((hi - lo) * line.weights[q]);
    t.values.row(q) = ev.values.transpose();
    t.derivs.row(q) = ev.derivs.transpose();
  }
  return t;
}

std::vector<SpanTable> tabulate_direction(const KnotVector &kv, const GaussRule1D<double> &line) {
  const auto breaks = kv.breaks();
  std::vector<SpanTable> out;
  for (std::size_t e = 0; e + 1 < breaks.size(); ++e) out.push_back(tabulate(kv, breaks[e], breaks[e + 1], line));
  return out;
}

/// Calls body(element tables, local->global dof map) for every element.
template <typename Body>
void for_each_element(const TensorBasis &basis, const GaussRule1D<double> &line, Body &&body) {
  const int d = basis.dim();
  std::array<std::vector<SpanTable>, 3> tables;
  std::array<int, 3> n_spans{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    tables[k] = tabulate_direction(basis.direction(k), line);
    n_spans[k] = static_cast<int>(tables[k].size());
  }
  std::array<const SpanTable *, 3> element{};
  for (int e2 = 0; e2 < n_spans[2]; ++e2)
    for (int e1 = 0; e1 < n_spans[1]; ++e1)
      for (int e0 = 0; e0 < n_spans[0]; ++e0) {
        const std::array<int, 3> e{e0, e1, e2};
        for (int k = 0; k < d; ++k) element[k] = &tables[k][e[k]];
        body(element);
      }
}

struct ElementLayout {
  std::array<int, 3> n_fun{1, 1, 1};
  std::array<int, 3> n_q{1, 1, 1};
  int fun_count = 1;
  int q_count = 1;
};

ElementLayout layout(const std::array<const SpanTable *, 3> &el, int d) {
  ElementLayout l;
  for (int k = 0; k < d; ++k) {
    l.n_fun[k] = static_cast<int>(el[k]->values.cols());
    l.n_q[k] = static_cast<int>(el[k]->values.rows());
    l.fun_count *= l.n_fun[k];
    l.q_count *= l.n_q[k];
  }
  return l;
}

std::vector<int> element_dofs(const TensorBasis &basis, const std::array<const SpanTable *, 3> &el,
                              const ElementLayout &l) {
  const int d = basis.dim();
  std::vector<int> dofs(l.fun_count);
  TensorBasis::MultiIndex mi{0, 0, 0};
  int a = 0;
  for (int i2 = 0; i2 < l.n_fun[2]; ++i2)
    for (int i1 = 0; i1 < l.n_fun[1]; ++i1)
      for (int i0 = 0; i0 < l.n_fun[0]; ++i0, ++a) {
        const std::array<int, 3> i{i0, i1, i2};
        for (int k = 0; k < d; ++k) mi[k] = el[k]->first + i[k];
        dofs[a] = basis.index(mi);
      }
  return dofs;
}

/// Reference values (fun_count) and gradients (fun_count x d) at local point q.
void reference_at(const std::array<const SpanTable *, 3> &el, const ElementLayout &l, int d,
                  const std::array<int, 3> &q, Eigen::VectorXd &values, Eigen::MatrixXd &grads, Eigen::VectorXd &xi,
                  double &weight) {
  weight = 1;
  for (int k = 0; k < d; ++k) {
    xi[k] = el[k]->points[q[k]];
    weight *= el[k]->weights[q[k]];
  }
  int a = 0;
  for (int i2 = 0; i2 < l.n_fun[2]; ++i2)
    for (int i1 = 0; i1 < l.n_fun[1]; ++i1)
      for (int i0 = 0; i0 < l.n_fun[0]; ++i0, ++a) {
        const std::array<int, 3> i{i0, i1, i2};
        double v = 1;
        for (int k = 0; k < d; ++k) v *= el[k]->values(q[k], i[k]);
        values[a] = v;
        for (int g = 0; g < d; ++g) {
          double prod = 1;
          for (int k = 0; k < d; ++k) prod *= k == g ? el[k]->derivs(q[k], i[k]) : el[k]->values(q[k], i[k]);
          grads(a, g) = prod;
        }
      }
}

std::array<int, 3> unflatten(int q, const ElementLayout &l, int d) {
  std::array<int, 3> out{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    out[k] = q % l.n_q[k];
    q /= l.n_q[k];
  }
  return out;
}

SparseMatrix restrict_symmetric(const SparseMatrix &full, const std::vector<int> &tensor_to_free, int n_free) {
  std::vector<Triplet> trips;
  trips.reserve(full.nonZeros());
  for (Index c = 0; c < full.outerSize(); ++c) {
    const int fc = tensor_to_free[c];
    if (fc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
      const int fr = tensor_to_free[it.row()];
      if (fr >= 0) trips.emplace_back(fr, fc, it.value());
    }
  }
  SparseMatrix out(n_free, n_free);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

} // namespace

QuadRule<double> default_rule(const TensorBasis &basis) {
  return gauss_rule<double>(basis.direction(0).degree() + 1, basis.dim());
}

FullPatchSystem assemble_full(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                              const ScalarField *source) {
  const int d = basis.dim();
  if (patch.dim() != d) throw Error("assembly", "basis and geometry dimensions differ");
  const int n = basis.size();
  std::vector<Triplet> trips;
  Vector load = Vector::Zero(n);

  Eigen::VectorXd values, xi(d);
  Eigen::MatrixXd grads, stacked, local;
  for_each_element(basis, quad.line, [&](const std::array<const SpanTable *, 3> &el) {
    const auto l = layout(el, d);
    const auto dofs = element_dofs(basis, el, l);
    values.resize(l.fun_count);
    grads.resize(l.fun_count, d);
    stacked.resize(l.fun_count, d * l.q_count);
    for (int q = 0; q < l.q_count; ++q) {
      double weight = 0;
      reference_at(el, l, d, unflatten(q, l, d), values, grads, xi, weight);
      const auto geo = eval_geometry(patch, xi);
      const double measure = weight * std::abs(geo.det);
      // Physical gradients as rows: grad_ref * J^{-1}, scaled for the Gram product.
      stacked.middleCols(q * d, d).noalias() = std::sqrt(measure) * grads * geo.inverse_transpose.transpose();
      if (source) {
        const double fx = (*source)(geo.x);
        for (int a = 0; a < l.fun_count; ++a) load[dofs[a]] += measure * fx * values[a];
      }
    }
    local.noalias() = stacked * stacked.transpose();
    for (int b = 0; b < l.fun_count; ++b)
      for (int a = 0; a < l.fun_count; ++a) trips.emplace_back(dofs[a], dofs[b], local(a, b));
  });

  FullPatchSystem out;
  out.stiffness.resize(n, n);
  out.stiffness.setFromTriplets(trips.begin(), trips.end());
  out.load = std::move(load);
  return out;
}

PatchSystem assemble_stiffness(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                               const std::vector<Side> &dirichlet_sides) {
  const auto full = assemble_full(patch, basis, quad, nullptr);
  PatchSystem out;
  out.tensor_to_free.assign(basis.size(), -1);
  for (int i = 0; i < basis.size(); ++i) {
    const auto mi = basis.multi_index(i);
    bool fixed = false;
    for (Side s : dirichlet_sides) {
      const int axis = side_axis(s);
      fixed = fixed || mi[axis] == (side_is_upper(s) ? basis.size(axis) - 1 : 0);
    }
    if (fixed) continue;
    out.tensor_to_free[i] = static_cast<int>(out.free_to_tensor.size());
    out.free_to_tensor.push_back(i);
  }
  const int n_free = static_cast<int>(out.free_to_tensor.size());
  out.stiffness = restrict_symmetric(full.stiffness, out.tensor_to_free, n_free);
  out.load = Vector::Zero(n_free);
  return out;
}

Vector assemble_load(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                     const ScalarField &source) {
  const int d = basis.dim();
  Vector load = Vector::Zero(basis.size());
  Eigen::VectorXd values, xi(d);
  Eigen::MatrixXd grads;
  for_each_element(basis, quad.line, [&](const std::array<const SpanTable *, 3> &el) {
    const auto l = layout(el, d);
    const auto dofs = element_dofs(basis, el, l);
    values.resize(l.fun_count);
    grads.resize(l.fun_count, d);
    for (int q = 0; q < l.q_count; ++q) {
      double weight = 0;
      reference_at(el, l, d, unflatten(q, l, d), values, grads, xi, weight);
      const auto geo = eval_geometry(patch, xi);
      const double scale = weight * std::abs(geo.det) * source(geo.x);
      for (int a = 0; a < l.fun_count; ++a) load[dofs[a]] += scale * values[a];
    }
  });
  return load;
}

PatchSystem assemble_patch(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                           const PatchDofs &dofs, const ScalarField &source) {
  const auto full = assemble_full(patch, basis, quad, &source);
  PatchSystem out;
  out.free_to_tensor = dofs.free_to_tensor;
  out.tensor_to_free = dofs.tensor_to_free;
  out.stiffness = restrict_symmetric(full.stiffness, dofs.tensor_to_free, dofs.free_count());
  out.load.resize(dofs.free_count());
  for (int f = 0; f < dofs.free_count(); ++f) out.load[f] = full.load[dofs.free_to_tensor[f]];
  return out;
}

Vector expand_free(const Vector &free_values, const std::vector<int> &free_to_tensor, int total) {
  Vector out = Vector::Zero(total);
  for (std::size_t f = 0; f < free_to_tensor.size(); ++f) out[free_to_tensor[f]] = free_values[f];
  return out;
}

double eval_spline(const TensorBasis &basis, const Vector &coefs, const Eigen::VectorXd &xi) {
  const auto ev = tensor_eval(basis, xi);
  double u = 0;
  for (std::size_t a = 0; a < ev.indices.size(); ++a) u += ev.values[a] * coefs[ev.indices[a]];
  return u;
}

double l2_error_squared(const Patch &patch, const TensorBasis &basis, const Vector &coefs, const ScalarField &exact,
                        int points_per_direction) {
  const int d = basis.dim();
  const auto line = gauss_legendre<double>(points_per_direction);
  double total = 0;
  Eigen::VectorXd values, xi(d);
  Eigen::MatrixXd grads;
  for_each_element(basis, line, [&](const std::array<const SpanTable *, 3> &el) {
    const auto l = layout(el, d);
    const auto dofs = element_dofs(basis, el, l);
    values.resize(l.fun_count);
    grads.resize(l.fun_count, d);
    for (int q = 0; q < l.q_count; ++q) {
      double weight = 0;
      reference_at(el, l, d, unflatten(q, l, d), values, grads, xi, weight);
      const auto geo = eval_geometry(patch, xi);
      double uh = 0;
      for (int a = 0; a < l.fun_count; ++a) uh += values[a] * coefs[dofs[a]];
      const double diff = uh - exact(geo.x);
      total += weight * std::abs(geo.det) * diff * diff;
    }
  });
  return total;
}

} // namespace ietidp
