#pragma once

#include <array>
#include <string>
#include <vector>

#include "ietidp/geometry.hpp"

namespace ietidp {

/// Two matched patch sides. The tangential axes of a side are the remaining
/// axes in increasing order; side b's tangential coordinate j equals side a's
/// coordinate permutation[j], reversed when flip[j] is set.
struct Interface {
  int patch_a = 0;
  Side side_a = Side::XMin;
  int patch_b = 0;
  Side side_b = Side::XMin;
  std::array<int, 2> permutation{0, 1};
  std::array<bool, 2> flip{false, false};

  /// The same interface seen from side b.
  Interface reversed(int dim) const;
};

/// Kinds of patch-local boundary entities. In 2D the patch sides are faces
/// and there are no edges.
enum class EntityKind { Vertex, Edge, Face };

/// Patch-local entity encoded by one position per axis: 0 lower end,
/// 1 upper end, 2 free.
struct LocalEntity {
  int patch = 0;
  std::array<int, 3> position{2, 2, 2};
  bool operator==(const LocalEntity &) const = default;
};

/// Equivalence class of patch-local vertices, edges or faces glued by interfaces.
struct EntityClass {
  EntityKind kind = EntityKind::Vertex;
  std::vector<LocalEntity> members;
  bool dirichlet = false;

  int patch_count() const;
  /// Interface entity eligible for primal constraints and jumps.
  bool coupled() const { return !dirichlet && patch_count() >= 2; }
};

struct Topology {
  int dim = 0;
  std::vector<Interface> interfaces;
  std::vector<EntityClass> classes;
  /// entity_class[patch][code] with code = sum position[k] * 3^k; -1 for the patch interior.
  std::vector<std::vector<int>> entity_class;

  int class_of(int patch, const std::array<int, 3> &position) const;
  /// Coupled classes of one kind.
  std::vector<int> coupled_classes(EntityKind kind) const;
};

int entity_code(const std::array<int, 3> &position, int dim);
EntityKind entity_kind(const std::array<int, 3> &position, int dim);

/// Matches sides by sampled geometric coincidence (tolerance `tol`) and
/// derives vertex/edge/face classes by transitive closure over interfaces.
Topology build_topology(const MultiPatch &mp, double tol = 1e-8);

/// Per-patch partition of the basis functions.
struct PatchDofs {
  int total = 0;
  /// free index -> tensor index, and tensor index -> free index or -1 (Dirichlet).
  std::vector<int> free_to_tensor;
  std::vector<int> tensor_to_free;
  /// Free indices with zero trace on all interfaces (I) and the rest (Gamma).
  std::vector<int> interior;
  std::vector<int> gamma;
  /// Per free dof: coupled dof class or -1.
  std::vector<int> dof_class;
  /// Per free dof: entity class of the smallest patch entity containing it, or -1.
  std::vector<int> entity_class;
  /// Per free dof: entity position of the dof within the patch.
  std::vector<std::array<int, 3>> position;

  int free_count() const { return static_cast<int>(free_to_tensor.size()); }
};

struct DofMember {
  int patch = 0;
  int dof = 0; ///< free index within the patch
  auto operator<=>(const DofMember &) const = default;
};

/// Basis functions identified across patches.
struct DofClass {
  std::vector<DofMember> members; ///< sorted
  bool at_vertex = false;
  int multiplicity() const { return static_cast<int>(members.size()); }
};

struct DofClassification {
  int dim = 0;
  std::vector<PatchDofs> patches;
  std::vector<DofClass> classes;

  int multiplicity(int patch, int free_dof) const;
  int total_free() const;
  /// Dimension of the conforming global space: sum of free dofs minus the
  /// (multiplicity - 1) identifications of every class.
  int conforming_dimension() const;
};

/// Tensor index on side b of the side-a dof with tensor index `dof_a`.
int map_side_dof(const Interface &iface, const TensorBasis &basis_a, const TensorBasis &basis_b, int dof_a);

/// Matches interface dofs and classifies every patch dof. Throws
/// "fully matching violated" when traces do not agree across an interface.
DofClassification classify_dofs(const MultiPatch &mp, const std::vector<TensorBasis> &bases, const Topology &topo);

} // namespace ietidp
