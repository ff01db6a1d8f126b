#include "ietidp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ietidp/quadrature.hpp"

namespace ietidp {

namespace {

constexpr double kDegenerateDet = 1e-14;

const std::array<std::string, 6> kSideNames{"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};

/// Control points of a tensor spline interpolating `target` at the Greville
/// points of `basis`. Exact when the target lies in the spline space.
template <typename Map>
Eigen::MatrixXd interpolate(const TensorBasis &basis, int out_dim, Map &&target) {
  const int d = basis.dim();
  const int n = basis.size();
  std::array<std::vector<double>, 3> greville;
  for (int k = 0; k < d; ++k) greville[k] = basis.direction(k).greville();

  Eigen::MatrixXd collocation = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd values(n, out_dim);
  Eigen::VectorXd xi(d);
  for (int row = 0; row < n; ++row) {
    const auto mi = basis.multi_index(row);
    for (int k = 0; k < d; ++k) xi[k] = greville[k][mi[k]];
    const auto ev = tensor_eval(basis, xi);
    for (std::size_t a = 0; a < ev.indices.size(); ++a) collocation(row, ev.indices[a]) = ev.values[a];
    values.row(row) = target(xi).transpose();
  }
  return collocation.partialPivLu().solve(values);
}

Patch affine_box(const Eigen::VectorXd &lower, const Eigen::VectorXd &upper, int id) {
  const int d = static_cast<int>(lower.size());
  Patch patch;
  patch.basis = TensorBasis::uniform(d, 1, 1);
  patch.id = id;
  patch.control_points.resize(patch.basis.size(), d);
  for (int i = 0; i < patch.basis.size(); ++i) {
    const auto mi = patch.basis.multi_index(i);
    for (int k = 0; k < d; ++k) patch.control_points(i, k) = mi[k] == 0 ? lower[k] : upper[k];
  }
  return patch;
}

void tag_full_boundary_of_unmatched(MultiPatch &mp, const std::vector<std::array<bool, 6>> &interior) {
  for (int k = 0; k < mp.size(); ++k)
    for (int s = 0; s < 2 * mp.dim; ++s)
      if (!interior[k][s]) mp.dirichlet.push_back({k, static_cast<Side>(s)});
}

} // namespace

std::string side_name(Side s) { return kSideNames.at(static_cast<int>(s)); }

Side parse_side(const std::string &name) {
  for (int s = 0; s < 6; ++s)
    if (kSideNames[s] == name) return static_cast<Side>(s);
  throw Error("geometry", "unknown side name '" + name + "'");
}

bool MultiPatch::is_dirichlet(int patch, Side side) const {
  return std::find(dirichlet.begin(), dirichlet.end(), BoundaryTag{patch, side}) != dirichlet.end();
}

Eigen::VectorXd map_point(const Patch &patch, const Eigen::Ref<const Eigen::VectorXd> &xi) {
  const auto ev = tensor_eval(patch.basis, xi);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(patch.control_points.cols());
  for (std::size_t a = 0; a < ev.indices.size(); ++a)
    x += ev.values[a] * patch.control_points.row(ev.indices[a]).transpose();
  return x;
}

GeometryEval eval_geometry(const Patch &patch, const Eigen::Ref<const Eigen::VectorXd> &xi) {
  const int d = patch.dim();
  const auto ev = tensor_eval(patch.basis, xi);
  GeometryEval out;
  out.x = Eigen::VectorXd::Zero(d);
  out.jacobian = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t a = 0; a < ev.indices.size(); ++a) {
    const auto cp = patch.control_points.row(ev.indices[a]).transpose();
    out.x += ev.values[a] * cp;
    out.jacobian += cp * ev.gradients.row(a);
  }
  out.det = out.jacobian.determinant();
  if (std::abs(out.det) < kDegenerateDet) {
    std::ostringstream msg;
    msg << "degenerate geometry: det J = " << out.det << " in patch " << patch.id << " at xi = ("
        << xi.transpose() << ")";
    throw Error("geometry", msg.str());
  }
  out.inverse_transpose = out.jacobian.inverse().transpose();
  return out;
}

void validate_patch(const Patch &patch) {
  const int d = patch.dim();
  if (d < 2 || d > 3) throw Error("geometry", "patch " + std::to_string(patch.id) + ": dimension must be 2 or 3");
  if (patch.control_points.rows() != patch.basis.size() || patch.control_points.cols() != d)
    throw Error("geometry", "patch " + std::to_string(patch.id) + ": expected " + std::to_string(patch.basis.size()) +
                                " control points of dimension " + std::to_string(d) + ", got " +
                                std::to_string(patch.control_points.rows()) + "x" +
                                std::to_string(patch.control_points.cols()));
  const int samples = 5;
  int total = 1;
  for (int k = 0; k < d; ++k) total *= samples;
  int sign = 0;
  Eigen::VectorXd xi(d);
  for (int s = 0; s < total; ++s) {
    int rest = s;
    for (int k = 0; k < d; ++k) {
      xi[k] = (rest % samples) / double(samples - 1);
      rest /= samples;
    }
    const int here = eval_geometry(patch, xi).det > 0 ? 1 : -1;
    if (sign == 0) sign = here;
    if (here != sign)
      throw Error("geometry", "patch " + std::to_string(patch.id) + ": Jacobian determinant changes sign");
  }
}

void validate_multipatch(const MultiPatch &mp) {
  if (mp.patches.empty()) throw Error("geometry", "multipatch has no patches");
  std::vector<int> ids;
  for (const auto &patch : mp.patches) {
    if (patch.dim() != mp.dim)
      throw Error("geometry", "patch " + std::to_string(patch.id) + " has dimension " + std::to_string(patch.dim()) +
                                  ", multipatch has " + std::to_string(mp.dim));
    validate_patch(patch);
    ids.push_back(patch.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw Error("geometry", "patch ids are not unique");
  for (const auto &tag : mp.dirichlet)
    if (tag.patch < 0 || tag.patch >= mp.size() || side_axis(tag.side) >= mp.dim)
      throw Error("geometry", "invalid Dirichlet tag (" + std::to_string(tag.patch) + ", " + side_name(tag.side) + ")");
}

double patch_volume(const Patch &patch, int points_per_direction) {
  const int d = patch.dim();
  const auto line = gauss_legendre<double>(points_per_direction);
  std::array<std::vector<double>, 3> breaks;
  std::array<int, 3> spans{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    breaks[k] = patch.basis.direction(k).breaks();
    spans[k] = static_cast<int>(breaks[k].size()) - 1;
  }
  const int nq = points_per_direction;
  double volume = 0;
  Eigen::VectorXd xi(d);
  for (int e2 = 0; e2 < spans[2]; ++e2)
    for (int e1 = 0; e1 < spans[1]; ++e1)
      for (int e0 = 0; e0 < spans[0]; ++e0) {
        const std::array<int, 3> e{e0, e1, e2};
        int total = 1;
        for (int k = 0; k < d; ++k) total *= nq;
        for (int q = 0; q < total; ++q) {
          int rest = q;
          double w = 1;
          for (int k = 0; k < d; ++k) {
            const int i = rest % nq;
            rest /= nq;
            const double h = breaks[k][e[k] + 1] - breaks[k][e[k]];
            xi[k] = breaks[k][e[k]] + h * line.points[i];
            w *= h * line.weights[i];
          }
          volume += w * std::abs(eval_geometry(patch, xi).det);
        }
      }
  return volume;
}

double multipatch_volume(const MultiPatch &mp, int points_per_direction) {
  double total = 0;
  for (const auto &patch : mp.patches) total += patch_volume(patch, points_per_direction);
  return total;
}

MultiPatch make_unit_hypercube_multipatch(int dim, const std::vector<int> &splits) {
  if (dim < 2 || dim > 3) throw Error("geometry", "hypercube dimension must be 2 or 3");
  if (static_cast<int>(splits.size()) != dim)
    throw Error("geometry", "expected " + std::to_string(dim) + " split counts, got " + std::to_string(splits.size()));
  for (int s : splits)
    if (s < 1) throw Error("geometry", "split counts must be >= 1");

  MultiPatch mp;
  mp.dim = dim;
  std::vector<std::array<bool, 6>> interior;
  const int n2 = dim == 3 ? splits[2] : 1;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < splits[1]; ++i1)
      for (int i0 = 0; i0 < splits[0]; ++i0) {
        const std::array<int, 3> box{i0, i1, i2};
        Eigen::VectorXd lower(dim), upper(dim);
        std::array<bool, 6> inner{};
        for (int k = 0; k < dim; ++k) {
          lower[k] = double(box[k]) / splits[k];
          upper[k] = double(box[k] + 1) / splits[k];
          inner[2 * k] = box[k] > 0;
          inner[2 * k + 1] = box[k] + 1 < splits[k];
        }
        mp.patches.push_back(affine_box(lower, upper, mp.size()));
        interior.push_back(inner);
      }
  tag_full_boundary_of_unmatched(mp, interior);
  return mp;
}

MultiPatch make_fichera(double twist_angle) {
  if (std::abs(twist_angle) > M_PI / 2 + 1e-15) throw Error("geometry", "twist angle must satisfy |twist| <= pi/2");

  MultiPatch mp;
  mp.dim = 3;
  std::vector<std::array<int, 3>> cells;
  for (int c = 0; c < 8; ++c) {
    const std::array<int, 3> cell{c & 1, (c >> 1) & 1, (c >> 2) & 1};
    if (cell == std::array<int, 3>{1, 1, 1}) continue;
    cells.push_back(cell);
  }
  auto occupied = [&](std::array<int, 3> cell) {
    for (int k = 0; k < 3; ++k)
      if (cell[k] < 0 || cell[k] > 1) return false;
    return cell != std::array<int, 3>{1, 1, 1};
  };

  const auto twist = [twist_angle](const Eigen::Vector3d &p) -> Eigen::VectorXd {
    const double theta = twist_angle * (p.z() + 1) / 2;
    Eigen::VectorXd out(3);
    out << std::cos(theta) * p.x() - std::sin(theta) * p.y(), std::sin(theta) * p.x() + std::cos(theta) * p.y(), p.z();
    return out;
  };

  std::vector<std::array<bool, 6>> interior;
  for (const auto &cell : cells) {
    const Eigen::Vector3d lower(cell[0] - 1.0, cell[1] - 1.0, cell[2] - 1.0);
    Patch patch;
    patch.id = mp.size();
    if (twist_angle == 0.0) {
      patch = affine_box(lower, lower + Eigen::Vector3d::Ones(), mp.size());
    } else {
      patch.basis = TensorBasis({make_uniform_knots(1, 1), make_uniform_knots(1, 1), make_uniform_knots(2, 1)});
      patch.control_points = interpolate(patch.basis, 3, [&](const Eigen::VectorXd &xi) {
        return twist(lower + Eigen::Vector3d(xi[0], xi[1], xi[2]));
      });
    }
    std::array<bool, 6> inner{};
    for (int k = 0; k < 3; ++k)
      for (int up = 0; up < 2; ++up) {
        auto neighbour = cell;
        neighbour[k] += up ? 1 : -1;
        inner[2 * k + up] = occupied(neighbour);
      }
    mp.patches.push_back(std::move(patch));
    interior.push_back(inner);
  }
  tag_full_boundary_of_unmatched(mp, interior);
  return mp;
}

KnotVector restrict_knots(const KnotVector &kv, double a, double b) {
  const int p = kv.degree();
  std::vector<double> knots(p + 1, 0.0);
  for (double t : kv.knots())
    if (t > a && t < b) knots.push_back((t - a) / (b - a));
  knots.insert(knots.end(), p + 1, 1.0);
  return KnotVector(p, std::move(knots));
}

MultiPatch split_patches(const MultiPatch &mp, int m) {
  if (m < 1) throw Error("geometry", "subdivision count must be >= 1");
  if (m == 1) return mp;
  const int d = mp.dim;
  MultiPatch out;
  out.dim = d;
  int sub_count = 1;
  for (int k = 0; k < d; ++k) sub_count *= m;

  for (int k = 0; k < mp.size(); ++k) {
    const Patch &parent = mp.patches[k];
    for (int s = 0; s < sub_count; ++s) {
      std::array<int, 3> box{0, 0, 0};
      int rest = s;
      for (int a = 0; a < d; ++a) {
        box[a] = rest % m;
        rest /= m;
      }
      std::vector<KnotVector> dirs;
      Eigen::VectorXd lo(d), hi(d);
      for (int a = 0; a < d; ++a) {
        lo[a] = double(box[a]) / m;
        hi[a] = double(box[a] + 1) / m;
        dirs.push_back(restrict_knots(parent.basis.direction(a), lo[a], hi[a]));
      }
      Patch child;
      child.id = out.size();
      child.basis = TensorBasis(std::move(dirs));
      child.control_points = interpolate(child.basis, d, [&](const Eigen::VectorXd &xi) {
        const Eigen::VectorXd t = lo + (hi - lo).cwiseProduct(xi);
        return map_point(parent, t);
      });
      for (int a = 0; a < d; ++a) {
        if (box[a] == 0 && mp.is_dirichlet(k, make_side(a, false))) out.dirichlet.push_back({child.id, make_side(a, false)});
        if (box[a] == m - 1 && mp.is_dirichlet(k, make_side(a, true)))
          out.dirichlet.push_back({child.id, make_side(a, true)});
      }
      out.patches.push_back(std::move(child));
    }
  }
  return out;
}

std::string multipatch_to_json(const MultiPatch &mp) {
  using nlohmann::json;
  json doc;
  doc["dim"] = mp.dim;
  doc["patches"] = json::array();
  for (const auto &patch : mp.patches) {
    json p;
    p["degrees"] = json::array();
    p["knots"] = json::array();
    for (const auto &kv : patch.basis.directions()) {
      p["degrees"].push_back(kv.degree());
      p["knots"].push_back(kv.knots());
    }
    p["control_points"] = json::array();
    for (Eigen::Index i = 0; i < patch.control_points.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < patch.control_points.cols(); ++c) row.push_back(patch.control_points(i, c));
      p["control_points"].push_back(row);
    }
    doc["patches"].push_back(p);
  }
  doc["dirichlet"] = json::array();
  for (const auto &tag : mp.dirichlet) doc["dirichlet"].push_back(json::array({tag.patch, side_name(tag.side)}));
  return doc.dump(1);
}

MultiPatch multipatch_from_json(const std::string &text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error("geometry", std::string("multipatch JSON parse error: ") + e.what());
  }
  std::string field = "dim";
  try {
    MultiPatch mp;
    mp.dim = doc.at("dim").get<int>();
    const auto &patches = doc.at("patches");
    for (std::size_t k = 0; k < patches.size(); ++k) {
      const std::string prefix = "patches[" + std::to_string(k) + "]";
      const auto &p = patches[k];
      field = prefix + ".degrees";
      const auto degrees = p.at("degrees").get<std::vector<int>>();
      field = prefix + ".knots";
      const auto knots = p.at("knots").get<std::vector<std::vector<double>>>();
      if (degrees.size() != knots.size() || static_cast<int>(degrees.size()) != mp.dim)
        throw Error("geometry", field + ": expected " + std::to_string(mp.dim) + " directions");
      std::vector<KnotVector> dirs;
      for (std::size_t a = 0; a < degrees.size(); ++a) {
        try {
          dirs.emplace_back(degrees[a], knots[a]);
        } catch (const Error &e) {
          throw Error("geometry", prefix + ".knots[" + std::to_string(a) + "]: " + e.what());
        }
      }
      Patch patch;
      patch.id = static_cast<int>(k);
      patch.basis = TensorBasis(std::move(dirs));
      field = prefix + ".control_points";
      const auto cps = p.at("control_points").get<std::vector<std::vector<double>>>();
      patch.control_points.resize(static_cast<Eigen::Index>(cps.size()), mp.dim);
      for (std::size_t i = 0; i < cps.size(); ++i) {
        if (static_cast<int>(cps[i].size()) != mp.dim)
          throw Error("geometry", field + "[" + std::to_string(i) + "]: expected " + std::to_string(mp.dim) +
                                      " coordinates");
        for (int c = 0; c < mp.dim; ++c) patch.control_points(static_cast<Eigen::Index>(i), c) = cps[i][c];
      }
      mp.patches.push_back(std::move(patch));
    }
    field = "dirichlet";
    if (doc.contains("dirichlet"))
      for (const auto &tag : doc.at("dirichlet"))
        mp.dirichlet.push_back({tag.at(0).get<int>(), parse_side(tag.at(1).get<std::string>())});
    validate_multipatch(mp);
    return mp;
  } catch (const json::exception &e) {
    throw Error("geometry", "multipatch JSON field '" + field + "': " + e.what());
  }
}

void save_multipatch(const MultiPatch &mp, const std::string &path) {
  std::ofstream file(path);
  if (!file) throw Error("geometry", "cannot open " + path + " for writing");
  file << multipatch_to_json(mp) << '\n';
}

MultiPatch load_multipatch(const std::string &path) {
  std::ifstream file(path);
  if (!file) throw Error("geometry", "cannot open " + path);
  std::stringstream buffer;
  buffer << file.rdbuf();
  return multipatch_from_json(buffer.str());
}

} // namespace ietidp
