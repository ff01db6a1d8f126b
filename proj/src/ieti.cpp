#include "ietidp/ieti.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ietidp/parallel.hpp"

namespace ietidp {

namespace {

std::vector<EntityKind> primal_kinds(const PrimalChoice &choice, int dim) {
  std::vector<EntityKind> kinds;
  if (choice.vertices) kinds.push_back(EntityKind::Vertex);
  if (choice.edges) kinds.push_back(dim == 2 ? EntityKind::Face : EntityKind::Edge);
  if (choice.faces) kinds.push_back(EntityKind::Face);
  return kinds;
}

bool patch_is_floating(const PatchDofs &pd) { return pd.free_count() == pd.total; }

SparseMatrix select_columns(const SparseMatrix &m, const std::vector<int> &columns) {
  std::vector<Triplet> trips;
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (SparseMatrix::InnerIterator it(m, columns[j]); it; ++it)
      trips.emplace_back(it.row(), static_cast<int>(j), it.value());
  SparseMatrix out(m.rows(), static_cast<Index>(columns.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseMatrix select_block(const SparseMatrix &m, const std::vector<int> &rows, const std::vector<int> &columns) {
  std::vector<int> row_map(m.rows(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) row_map[rows[i]] = static_cast<int>(i);
  std::vector<Triplet> trips;
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (SparseMatrix::InnerIterator it(m, columns[j]); it; ++it)
      if (row_map[it.row()] >= 0) trips.emplace_back(row_map[it.row()], static_cast<int>(j), it.value());
  SparseMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(columns.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Vector gather(const Vector &v, const std::vector<int> &rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

void scatter_add(Vector &v, const std::vector<int> &rows, const Vector &local) {
  for (std::size_t i = 0; i < rows.size(); ++i) v[rows[i]] += local[i];
}

} // namespace

std::string PrimalChoice::name() const {
  if (empty()) return "none";
  std::string out;
  if (vertices) out += 'V';
  if (edges) out += 'E';
  if (faces) out += 'F';
  return out;
}

PrimalChoice PrimalChoice::parse(const std::string &text) {
  PrimalChoice choice;
  if (text == "none") return choice;
  if (text.empty()) throw Error("ieti", "empty primal choice (use 'none')");
  for (char c : text) {
    bool *flag = c == 'V' ? &choice.vertices : c == 'E' ? &choice.edges : c == 'F' ? &choice.faces : nullptr;
    if (!flag || *flag) throw Error("ieti", "invalid primal choice '" + text + "'");
    *flag = true;
  }
  return choice;
}

std::vector<PrimalChoice> PrimalChoice::all(int dim) {
  std::vector<PrimalChoice> out;
  const int flags = dim == 3 ? 8 : 4;
  for (int m = 0; m < flags; ++m) out.push_back({(m & 1) != 0, (m & 2) != 0, (m & 4) != 0});
  return out;
}

SparseMatrix PrimalConstraints::selection(int patch) const {
  const auto &idx = primal_index.at(patch);
  SparseMatrix out(static_cast<Index>(idx.size()), primal_count);
  std::vector<Triplet> trips;
  for (std::size_t i = 0; i < idx.size(); ++i) trips.emplace_back(static_cast<int>(i), idx[i], 1.0);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

PrimalConstraints build_primal_constraints(const Topology &topo, const DofClassification &dofs,
                                           const IetiOptions &options) {
  const int d = dofs.dim;
  const int n_patches = static_cast<int>(dofs.patches.size());
  if (d == 2 && options.primal.faces) throw Error("ieti", "face averages are not available in 2D");
  if (options.primal.empty())
    for (int k = 0; k < n_patches; ++k)
      if (patch_is_floating(dofs.patches[k]))
        throw Error("ieti", "floating patch without primal constraints: patch " + std::to_string(k) +
                                " has no Dirichlet boundary and the primal choice is empty");

  const auto kinds = primal_kinds(options.primal, d);
  const EntityKind edge_kind = d == 2 ? EntityKind::Face : EntityKind::Edge;

  // Free dofs of every patch grouped by entity class.
  std::vector<std::map<int, std::vector<int>>> by_class(n_patches);
  for (int k = 0; k < n_patches; ++k) {
    const auto &pd = dofs.patches[k];
    for (int f = 0; f < pd.free_count(); ++f)
      if (pd.entity_class[f] >= 0) by_class[k][pd.entity_class[f]].push_back(f);
  }
  // Free dofs on the closure of a local entity: fixed axes must agree.
  const auto closure = [&](const LocalEntity &member, std::set<int> &set) {
    const auto &pd = dofs.patches[member.patch];
    for (int f = 0; f < pd.free_count(); ++f) {
      bool on = true;
      for (int axis = 0; axis < d && on; ++axis)
        on = member.position[axis] == 2 || pd.position[f][axis] == member.position[axis];
      if (on) set.insert(f);
    }
  };

  PrimalConstraints out;
  out.primal_index.resize(n_patches);
  std::vector<std::vector<std::vector<int>>> row_dofs(n_patches);
  for (int c = 0; c < static_cast<int>(topo.classes.size()); ++c) {
    const auto &cls = topo.classes[c];
    if (!cls.coupled() || std::find(kinds.begin(), kinds.end(), cls.kind) == kinds.end()) continue;
    const bool closed = cls.kind == edge_kind ? options.edge_average_includes_endpoints : cls.kind == EntityKind::Face;

    std::map<int, std::set<int>> sets;
    for (const auto &member : cls.members) {
      auto &set = sets[member.patch];
      if (closed) {
        closure(member, set);
      } else if (auto it = by_class[member.patch].find(c); it != by_class[member.patch].end()) {
        set.insert(it->second.begin(), it->second.end());
      }
    }
    bool any = false;
    for (const auto &[patch, set] : sets) any = any || !set.empty();
    if (!any) continue;

    const int id = out.primal_count++;
    out.primal_entity.push_back(c);
    for (const auto &[patch, set] : sets) {
      if (set.empty()) continue;
      out.primal_index[patch].push_back(id);
      row_dofs[patch].emplace_back(set.begin(), set.end());
    }
  }

  out.constraints.resize(n_patches);
  for (int k = 0; k < n_patches; ++k) {
    std::vector<Triplet> trips;
    for (std::size_t row = 0; row < row_dofs[k].size(); ++row) {
      const double weight = 1.0 / static_cast<double>(row_dofs[k][row].size());
      for (int f : row_dofs[k][row]) trips.emplace_back(static_cast<int>(row), f, weight);
    }
    out.constraints[k].resize(static_cast<Index>(row_dofs[k].size()), dofs.patches[k].free_count());
    out.constraints[k].setFromTriplets(trips.begin(), trips.end());
  }
  return out;
}

SparseMatrix JumpMatrices::global(int patch) const {
  const auto &loc = local.at(patch);
  const auto &map = rows.at(patch);
  std::vector<Triplet> trips;
  for (Index c = 0; c < loc.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(loc, c); it; ++it) trips.emplace_back(map[it.row()], it.col(), it.value());
  SparseMatrix out(multiplier_count, loc.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

JumpMatrices build_jump_matrix(const DofClassification &dofs, const PrimalChoice &choice,
                               const PrimalConstraints *primal) {
  const int n_patches = static_cast<int>(dofs.patches.size());
  // Dofs fixed by the primal variables: a constraint row with a single
  // unfixed dof fixes it, repeated until nothing changes.
  std::vector<std::set<int>> pinned(n_patches);
  if (primal)
    for (int k = 0; k < n_patches; ++k) {
      const auto &c = primal->constraints.at(k);
      std::vector<std::vector<int>> support(c.rows());
      for (Index col = 0; col < c.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(c, col); it; ++it)
          if (it.value() != 0.0) support[it.row()].push_back(static_cast<int>(col));
      for (bool changed = true; changed;) {
        changed = false;
        for (const auto &row : support) {
          int open = 0, last = -1;
          for (int f : row)
            if (!pinned[k].count(f)) ++open, last = f;
          if (open == 1) changed = pinned[k].insert(last).second || changed;
        }
      }
    }
  JumpMatrices out;
  out.rows.resize(n_patches);
  std::vector<std::vector<Triplet>> trips(n_patches);
  for (const auto &cls : dofs.classes) {
    if (cls.at_vertex && choice.vertices) continue;
    if (std::all_of(cls.members.begin(), cls.members.end(),
                    [&](const auto &m) { return pinned[m.patch].count(m.dof) > 0; }))
      continue;
    for (std::size_t i = 0; i < cls.members.size(); ++i)
      for (std::size_t j = i + 1; j < cls.members.size(); ++j) {
        const int lambda = out.multiplier_count++;
        for (const auto &[member, sign] : {std::pair{cls.members[i], 1.0}, std::pair{cls.members[j], -1.0}}) {
          auto &rows = out.rows[member.patch];
          if (rows.empty() || rows.back() != lambda) rows.push_back(lambda);
          trips[member.patch].emplace_back(static_cast<int>(rows.size()) - 1, member.dof, sign);
        }
      }
  }
  out.local.resize(n_patches);
  for (int k = 0; k < n_patches; ++k) {
    out.local[k].resize(static_cast<Index>(out.rows[k].size()), dofs.patches[k].free_count());
    out.local[k].setFromTriplets(trips[k].begin(), trips[k].end());
  }
  return out;
}

std::vector<Vector> build_multiplicity_scaling(const DofClassification &dofs) {
  std::vector<Vector> out;
  for (int k = 0; k < static_cast<int>(dofs.patches.size()); ++k) {
    const auto &pd = dofs.patches[k];
    Vector diag(static_cast<Index>(pd.gamma.size()));
    for (std::size_t g = 0; g < pd.gamma.size(); ++g) diag[g] = dofs.multiplicity(k, pd.gamma[g]);
    out.push_back(std::move(diag));
  }
  return out;
}

SparseMatrix saddle_matrix(const SparseMatrix &stiffness, const SparseMatrix &constraints) {
  const Index n = stiffness.rows();
  const Index m = constraints.rows();
  std::vector<Triplet> trips;
  trips.reserve(stiffness.nonZeros() + 2 * constraints.nonZeros());
  for (Index c = 0; c < stiffness.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(stiffness, c); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  for (Index c = 0; c < constraints.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(constraints, c); it; ++it) {
      trips.emplace_back(n + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), n + it.row(), it.value());
    }
  SparseMatrix out(n + m, n + m);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

DenseMatrix compute_energy_basis(const Factorization &saddle, Index n_dofs, Index n_constraints) {
  if (saddle.size() != n_dofs + n_constraints) throw Error("ieti", "energy basis: saddle matrix size mismatch");
  DenseMatrix rhs = DenseMatrix::Zero(n_dofs + n_constraints, n_constraints);
  rhs.bottomRows(n_constraints).setIdentity();
  return saddle.solve(rhs).topRows(n_dofs);
}

ScaledDirichlet::ScaledDirichlet(const DofClassification &dofs, const std::vector<SparseMatrix> &stiffness,
                                 const JumpMatrices &jumps, int threads)
    : multipliers_(jumps.multiplier_count), threads_(threads) {
  const int n_patches = static_cast<int>(dofs.patches.size());
  const auto scaling = build_multiplicity_scaling(dofs);
  locals_.resize(n_patches);
  parallel_for(n_patches, threads, [&](int k) {
    const auto &pd = dofs.patches[k];
    auto &loc = locals_[k];
    loc.rows = jumps.rows[k];
    loc.scaling = scaling[k];
    loc.jump_gamma = select_columns(jumps.local[k], pd.gamma);
    loc.a_gg = select_block(stiffness[k], pd.gamma, pd.gamma);
    loc.a_gi = select_block(stiffness[k], pd.gamma, pd.interior);
    try {
      loc.a_ii = factorize(select_block(stiffness[k], pd.interior, pd.interior), FactorKind::SPD);
    } catch (const Error &e) {
      throw Error("ieti", "scaled Dirichlet: interior block of patch " + std::to_string(k) + ": " + e.what());
    }
  });
}

void ScaledDirichlet::apply(const Vector &residual, Vector &out) const {
  if (residual.size() != multipliers_) throw Error("ieti", "scaled Dirichlet: dimension mismatch");
  std::vector<Vector> contributions(locals_.size());
  parallel_for(static_cast<int>(locals_.size()), threads_, [&](int k) {
    const auto &loc = locals_[k];
    if (loc.rows.empty()) return;
    const Vector v = (loc.jump_gamma.transpose() * gather(residual, loc.rows)).cwiseQuotient(loc.scaling);
    Vector w = loc.a_gg * v;
    if (loc.a_ii.size() > 0) w -= loc.a_gi * loc.a_ii.solve(Vector(loc.a_gi.transpose() * v));
    contributions[k] = loc.jump_gamma * w.cwiseQuotient(loc.scaling);
  });
  out = Vector::Zero(multipliers_);
  for (std::size_t k = 0; k < locals_.size(); ++k)
    if (contributions[k].size() > 0) scatter_add(out, locals_[k].rows, contributions[k]);
}

Vector ScaledDirichlet::apply(const Vector &residual) const {
  Vector out;
  apply(residual, out);
  return out;
}

LinearOperator ScaledDirichlet::as_operator() const {
  return {multipliers_, [this](const Vector &x, Vector &y) { apply(x, y); }};
}

IetiSystem::IetiSystem(const Topology &topo, const DofClassification &dofs, std::vector<SparseMatrix> stiffness,
                       const IetiOptions &options)
    : threads_(options.threads) {
  const int n_patches = static_cast<int>(dofs.patches.size());
  if (static_cast<int>(stiffness.size()) != n_patches)
    throw Error("ieti", "expected one stiffness matrix per patch");
  for (int k = 0; k < n_patches; ++k)
    if (stiffness[k].rows() != dofs.patches[k].free_count())
      throw Error("ieti", "stiffness matrix of patch " + std::to_string(k) + " does not match its free dofs");

  primal_ = build_primal_constraints(topo, dofs, options);
  jumps_ = build_jump_matrix(dofs, options.primal, &primal_);

  locals_.resize(n_patches);
  parallel_for(n_patches, threads_, [&](int k) {
    auto &loc = locals_[k];
    loc.stiffness = std::move(stiffness[k]);
    loc.constraints = primal_.constraints[k];
    const Index nc = loc.constraints.rows();
    try {
      if (nc == 0)
        loc.saddle = factorize(loc.stiffness, FactorKind::SPD);
      else
        loc.saddle = factorize(saddle_matrix(loc.stiffness, loc.constraints), FactorKind::SymmetricIndefinite);
    } catch (const Error &e) {
      throw Error("ieti", "insufficient constraints on floating patch " + std::to_string(k) + ": " + e.what());
    }
    loc.psi = compute_energy_basis(loc.saddle, loc.stiffness.rows(), nc);
  });

  const Index n_primal = primal_.primal_count;
  primal_matrix_ = DenseMatrix::Zero(n_primal, n_primal);
  std::vector<Triplet> trips;
  for (int k = 0; k < n_patches; ++k) {
    const auto &loc = locals_[k];
    const auto &idx = primal_.primal_index[k];
    if (idx.empty()) continue;
    const DenseMatrix local = loc.psi.transpose() * (loc.stiffness * loc.psi);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) primal_matrix_(idx[i], idx[j]) += local(i, j);
    const DenseMatrix jump = jumps_.local[k] * loc.psi;
    for (Index i = 0; i < jump.rows(); ++i)
      for (Index j = 0; j < jump.cols(); ++j)
        if (jump(i, j) != 0.0) trips.emplace_back(jumps_.rows[k][i], idx[j], jump(i, j));
  }
  primal_matrix_ = 0.5 * (primal_matrix_ + primal_matrix_.transpose()).eval();
  primal_jump_.resize(jumps_.multiplier_count, n_primal);
  primal_jump_.setFromTriplets(trips.begin(), trips.end());
  if (n_primal > 0) {
    primal_factor_.compute(primal_matrix_);
    if (primal_factor_.info() != Eigen::Success) throw Error("ieti", "primal matrix is not positive definite");
  }

  std::vector<SparseMatrix> stiffness_copies;
  for (const auto &loc : locals_) stiffness_copies.push_back(loc.stiffness);
  dirichlet_ = ScaledDirichlet(dofs, stiffness_copies, jumps_, threads_);
}

Vector IetiSystem::local_solve(int patch, const Vector &r) const {
  const auto &loc = locals_[patch];
  const Index n = loc.stiffness.rows();
  if (loc.constraints.rows() == 0) return loc.saddle.solve(r);
  Vector full = Vector::Zero(n + loc.constraints.rows());
  full.head(n) = r;
  return loc.saddle.solve(full).head(n);
}

void IetiSystem::apply_F(const Vector &lambda, Vector &out) const {
  if (lambda.size() != multiplier_count()) throw Error("ieti", "apply_F: dimension mismatch");
  std::vector<Vector> contributions(locals_.size());
  parallel_for(patch_count(), threads_, [&](int k) {
    const auto &rows = jumps_.rows[k];
    if (rows.empty()) return;
    const Vector r = jumps_.local[k].transpose() * gather(lambda, rows);
    contributions[k] = jumps_.local[k] * local_solve(k, r);
  });
  out = Vector::Zero(multiplier_count());
  for (int k = 0; k < patch_count(); ++k)
    if (contributions[k].size() > 0) scatter_add(out, jumps_.rows[k], contributions[k]);
  if (primal_count() > 0) out += primal_jump_ * primal_factor_.solve(Vector(primal_jump_.transpose() * lambda));
}

Vector IetiSystem::apply_F(const Vector &lambda) const {
  Vector out;
  apply_F(lambda, out);
  return out;
}

LinearOperator IetiSystem::F_operator() const {
  return {multiplier_count(), [this](const Vector &x, Vector &y) { apply_F(x, y); }};
}

void IetiSystem::check_loads(const std::vector<Vector> &loads) const {
  if (static_cast<int>(loads.size()) != patch_count()) throw Error("ieti", "expected one load vector per patch");
  for (int k = 0; k < patch_count(); ++k)
    if (loads[k].size() != locals_[k].stiffness.rows())
      throw Error("ieti", "load vector of patch " + std::to_string(k) + " has the wrong size");
}

Vector IetiSystem::primal_load(const std::vector<Vector> &loads) const {
  Vector out = Vector::Zero(primal_count());
  for (int k = 0; k < patch_count(); ++k) {
    const auto &idx = primal_.primal_index[k];
    if (idx.empty()) continue;
    const Vector local = locals_[k].psi.transpose() * loads[k];
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] += local[i];
  }
  return out;
}

Vector IetiSystem::rhs(const std::vector<Vector> &loads) const {
  check_loads(loads);
  std::vector<Vector> contributions(locals_.size());
  parallel_for(patch_count(), threads_, [&](int k) {
    if (jumps_.rows[k].empty()) return;
    contributions[k] = jumps_.local[k] * local_solve(k, loads[k]);
  });
  Vector g = Vector::Zero(multiplier_count());
  for (int k = 0; k < patch_count(); ++k)
    if (contributions[k].size() > 0) scatter_add(g, jumps_.rows[k], contributions[k]);
  if (primal_count() > 0) g += primal_jump_ * primal_factor_.solve(primal_load(loads));
  return g;
}

std::vector<Vector> IetiSystem::recover(const Vector &lambda, const std::vector<Vector> &loads) const {
  check_loads(loads);
  if (lambda.size() != multiplier_count()) throw Error("ieti", "recover: dimension mismatch");
  Vector mu;
  if (primal_count() > 0) mu = primal_factor_.solve(Vector(primal_load(loads) - primal_jump_.transpose() * lambda));
  std::vector<Vector> out(locals_.size());
  parallel_for(patch_count(), threads_, [&](int k) {
    Vector r = loads[k];
    if (!jumps_.rows[k].empty()) r -= jumps_.local[k].transpose() * gather(lambda, jumps_.rows[k]);
    Vector u = local_solve(k, r);
    const auto &idx = primal_.primal_index[k];
    for (std::size_t i = 0; i < idx.size(); ++i) u += locals_[k].psi.col(static_cast<Index>(i)) * mu[idx[i]];
    out[k] = std::move(u);
  });
  return out;
}

double max_jump(const DofClassification &dofs, const std::vector<Vector> &coefficients) {
  double worst = 0;
  for (const auto &cls : dofs.classes) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto &m : cls.members) {
      lo = std::min(lo, coefficients[m.patch][m.dof]);
      hi = std::max(hi, coefficients[m.patch][m.dof]);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

} // namespace ietidp
