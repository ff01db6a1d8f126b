#pragma once

#include <functional>
#include <vector>

#include "ietidp/geometry.hpp"
#include "ietidp/linalg.hpp"
#include "ietidp/quadrature.hpp"
#include "ietidp/topology.hpp"

namespace ietidp {

using ScalarField = std::function<double(const Eigen::VectorXd &)>;

/// Patch-local Poisson system restricted to the free (non-Dirichlet) dofs.
struct PatchSystem {
  SparseMatrix stiffness;
  Vector load;
  std::vector<int> free_to_tensor;
  std::vector<int> tensor_to_free;
};

/// Stiffness and load over all tensor dofs, integrated span by span with the
/// reference rule `quad` mapped onto every nonempty knot span.
struct FullPatchSystem {
  SparseMatrix stiffness;
  Vector load;
};

FullPatchSystem assemble_full(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                              const ScalarField *source);

/// Stiffness with the dofs on the given Dirichlet sides removed.
PatchSystem assemble_stiffness(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                               const std::vector<Side> &dirichlet_sides);

/// Load vector over all tensor dofs.
Vector assemble_load(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                     const ScalarField &source);

/// Stiffness and load restricted to the free dofs of a classification.
PatchSystem assemble_patch(const Patch &patch, const TensorBasis &basis, const QuadRule<double> &quad,
                           const PatchDofs &dofs, const ScalarField &source);

/// Reference rule with degree+1 points per direction.
QuadRule<double> default_rule(const TensorBasis &basis);

/// Coefficients on all tensor dofs, zero on eliminated ones.
Vector expand_free(const Vector &free_values, const std::vector<int> &free_to_tensor, int total);

/// Squared L2 error of the spline with tensor coefficients `coefs` against `exact`.
double l2_error_squared(const Patch &patch, const TensorBasis &basis, const Vector &coefs, const ScalarField &exact,
                        int points_per_direction);

/// Values of the spline with tensor coefficients `coefs` at the parameter xi.
double eval_spline(const TensorBasis &basis, const Vector &coefs, const Eigen::VectorXd &xi);

} // namespace ietidp
