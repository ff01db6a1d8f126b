#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ietidp/linalg.hpp"
#include "ietidp/topology.hpp"

namespace ietidp {

/// Which quantities are continuous a priori: vertex values, edge averages,
/// face averages. In 2D the interface sides carry the edge averages and
/// face averages are unavailable.
struct PrimalChoice {
  bool vertices = false;
  bool edges = false;
  bool faces = false;

  bool empty() const { return !vertices && !edges && !faces; }
  /// "V", "E", "F", "VE", ..., "VEF" or "none".
  std::string name() const;
  static PrimalChoice parse(const std::string &text);
  /// All choices accepted in the given dimension, including the empty one.
  static std::vector<PrimalChoice> all(int dim);
  bool operator==(const PrimalChoice &) const = default;
};

struct IetiOptions {
  PrimalChoice primal;
  /// Whether an edge average also covers the dofs at the edge's end vertices.
  bool edge_average_includes_endpoints = false;
  int threads = 1;
};

/// Constraint matrices C^(k) and the binary map R_c^(k) from local constraint
/// rows to global primal indices.
struct PrimalConstraints {
  int primal_count = 0;
  std::vector<SparseMatrix> constraints;
  std::vector<std::vector<int>> primal_index;
  /// Topology entity class behind every global primal dof.
  std::vector<int> primal_entity;

  SparseMatrix selection(int patch) const;
};

PrimalConstraints build_primal_constraints(const Topology &topo, const DofClassification &dofs,
                                           const IetiOptions &options);

/// Fully redundant jump matrices stored per patch by their nonzero rows.
struct JumpMatrices {
  int multiplier_count = 0;
  /// rows[k][i] is the global multiplier of local row i of local[k].
  std::vector<std::vector<int>> rows;
  std::vector<SparseMatrix> local;

  /// B^(k) as an (multiplier_count x n_k) matrix.
  SparseMatrix global(int patch) const;
};

/// Vertex classes are skipped when vertices are primal. With `primal` given, any
/// class whose dofs are all fixed by the primal constraints is skipped as well.
JumpMatrices build_jump_matrix(const DofClassification &dofs, const PrimalChoice &choice,
                               const PrimalConstraints *primal = nullptr);

/// Diagonal of D_k over the Gamma dofs of each patch (in PatchDofs::gamma order).
std::vector<Vector> build_multiplicity_scaling(const DofClassification &dofs);

/// The constrained local saddle point matrix [[A, C^T], [C, 0]].
SparseMatrix saddle_matrix(const SparseMatrix &stiffness, const SparseMatrix &constraints);

/// Energy-minimizing extensions: column j has unit value for local
/// constraint j and zero for the others. Size n_k x (local constraint count).
DenseMatrix compute_energy_basis(const Factorization &saddle, Index n_dofs, Index n_constraints);

/// Scaled Dirichlet preconditioner with multiplicity scaling.
class ScaledDirichlet {
public:
  ScaledDirichlet() = default;
  ScaledDirichlet(const DofClassification &dofs, const std::vector<SparseMatrix> &stiffness, const JumpMatrices &jumps,
                  int threads = 1);

  Index dimension() const { return multipliers_; }
  void apply(const Vector &residual, Vector &out) const;
  Vector apply(const Vector &residual) const;
  LinearOperator as_operator() const;

private:
  struct Local {
    std::vector<int> rows;
    SparseMatrix jump_gamma;
    Vector scaling;
    SparseMatrix a_gg, a_gi;
    Factorization a_ii;
  };
  std::vector<Local> locals_;
  Index multipliers_ = 0;
  int threads_ = 1;
};

/// Assembled IETI-DP system on top of patch stiffness matrices.
class IetiSystem {
public:
  IetiSystem(const Topology &topo, const DofClassification &dofs, std::vector<SparseMatrix> stiffness,
             const IetiOptions &options);

  Index multiplier_count() const { return jumps_.multiplier_count; }
  Index primal_count() const { return primal_.primal_count; }
  int patch_count() const { return static_cast<int>(locals_.size()); }

  const PrimalConstraints &primal() const { return primal_; }
  const JumpMatrices &jumps() const { return jumps_; }
  const ScaledDirichlet &preconditioner() const { return dirichlet_; }
  const SparseMatrix &stiffness(int patch) const { return locals_.at(patch).stiffness; }
  /// Psi^(k) restricted to the primal dofs incident to patch k.
  const DenseMatrix &energy_basis(int patch) const { return locals_.at(patch).psi; }
  const DenseMatrix &primal_matrix() const { return primal_matrix_; }
  /// Sum of B^(k) Psi^(k) as a multiplier_count x primal_count matrix.
  const SparseMatrix &primal_jump() const { return primal_jump_; }

  void apply_F(const Vector &lambda, Vector &out) const;
  Vector apply_F(const Vector &lambda) const;
  LinearOperator F_operator() const;

  Vector rhs(const std::vector<Vector> &loads) const;
  /// Patch coefficient vectors over the free dofs.
  std::vector<Vector> recover(const Vector &lambda, const std::vector<Vector> &loads) const;

private:
  struct Local {
    SparseMatrix stiffness;
    SparseMatrix constraints;
    Factorization saddle;
    DenseMatrix psi;
  };

  /// Top block of saddle^{-1} (r, 0).
  Vector local_solve(int patch, const Vector &r) const;
  Vector primal_load(const std::vector<Vector> &loads) const;
  void check_loads(const std::vector<Vector> &loads) const;

  std::vector<Local> locals_;
  PrimalConstraints primal_;
  JumpMatrices jumps_;
  ScaledDirichlet dirichlet_;
  DenseMatrix primal_matrix_;
  Eigen::LLT<DenseMatrix> primal_factor_;
  SparseMatrix primal_jump_;
  int threads_ = 1;
};

/// Largest spread of coefficients within any coupled dof class.
double max_jump(const DofClassification &dofs, const std::vector<Vector> &coefficients);

} // namespace ietidp
