#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include "ietidp/spline.hpp"

namespace ietidp {

/// Patch sides in the order xmin, xmax, ymin, ymax, zmin, zmax.
enum class Side : int { XMin = 0, XMax = 1, YMin = 2, YMax = 3, ZMin = 4, ZMax = 5 };

constexpr int side_axis(Side s) { return static_cast<int>(s) / 2; }
constexpr bool side_is_upper(Side s) { return static_cast<int>(s) % 2 == 1; }
constexpr Side make_side(int axis, bool upper) { return static_cast<Side>(2 * axis + (upper ? 1 : 0)); }
std::string side_name(Side s);
Side parse_side(const std::string &name);

/// Tensor B-spline map from [0,1]^d onto one patch of the domain.
struct Patch {
  TensorBasis basis;
  /// One row per basis function, d columns.
  Eigen::MatrixXd control_points;
  int id = 0;

  int dim() const { return basis.dim(); }
};

struct BoundaryTag {
  int patch = 0;
  Side side = Side::XMin;
  bool operator==(const BoundaryTag &) const = default;
  auto operator<=>(const BoundaryTag &) const = default;
};

struct MultiPatch {
  int dim = 0;
  std::vector<Patch> patches;
  /// Sides carrying homogeneous Dirichlet conditions.
  std::vector<BoundaryTag> dirichlet;

  int size() const { return static_cast<int>(patches.size()); }
  bool is_dirichlet(int patch, Side side) const;
};

struct GeometryEval {
  Eigen::VectorXd x;
  Eigen::MatrixXd jacobian;
  double det = 0;
  Eigen::MatrixXd inverse_transpose;
};

/// Physical point G(xi) only.
Eigen::VectorXd map_point(const Patch &patch, const Eigen::Ref<const Eigen::VectorXd> &xi);

/// Point, Jacobian and its inverse transpose. Throws "degenerate geometry"
/// when |det J| < 1e-14.
GeometryEval eval_geometry(const Patch &patch, const Eigen::Ref<const Eigen::VectorXd> &xi);

/// Checks sizes and that det J keeps one sign on a 5^d sample grid.
void validate_patch(const Patch &patch);
void validate_multipatch(const MultiPatch &mp);

/// Sum of the patch volumes, by Gauss quadrature on each knot span.
double patch_volume(const Patch &patch, int points_per_direction = 4);
double multipatch_volume(const MultiPatch &mp, int points_per_direction = 4);

/// Affine tiling of (0,1)^d into splits[0] x ... patches; outer boundary is Dirichlet.
MultiPatch make_unit_hypercube_multipatch(int dim, const std::vector<int> &splits);

/// Seven unit cubes forming (-1,1)^3 without the positive octant. A nonzero
/// twist rotates each point about the z-axis by twist*(z+1)/2, interpolated
/// quadratically in z.
MultiPatch make_fichera(double twist_angle);

/// Replaces every patch by m^d patches restricted to a uniform m-partition of
/// the parameter domain. Dirichlet tags follow the sub-patches.
MultiPatch split_patches(const MultiPatch &mp, int m);

/// Restriction of a knot vector to [a,b], rescaled to [0,1].
KnotVector restrict_knots(const KnotVector &kv, double a, double b);

void save_multipatch(const MultiPatch &mp, const std::string &path);
MultiPatch load_multipatch(const std::string &path);
std::string multipatch_to_json(const MultiPatch &mp);
MultiPatch multipatch_from_json(const std::string &text);

} // namespace ietidp
