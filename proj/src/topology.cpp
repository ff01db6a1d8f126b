#include "ietidp/topology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace ietidp {

namespace {

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

private:
  std::vector<std::size_t> parent_;
};

int power3(int dim) { return dim == 2 ? 9 : 27; }

std::vector<int> tangential_axes(Side side, int dim) {
  std::vector<int> axes;
  for (int k = 0; k < dim; ++k)
    if (k != side_axis(side)) axes.push_back(k);
  return axes;
}

/// Parameter point on `side` with tangential coordinates `s`.
Eigen::VectorXd side_parameter(Side side, int dim, const std::array<double, 2> &s) {
  Eigen::VectorXd xi(dim);
  const auto tan = tangential_axes(side, dim);
  xi[side_axis(side)] = side_is_upper(side) ? 1.0 : 0.0;
  for (std::size_t j = 0; j < tan.size(); ++j) xi[tan[j]] = s[j];
  return xi;
}

std::vector<std::array<double, 2>> side_samples(int dim, int per_direction) {
  std::vector<std::array<double, 2>> out;
  const int n2 = dim == 3 ? per_direction : 1;
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < per_direction; ++i)
      out.push_back({double(i) / (per_direction - 1), dim == 3 ? double(j) / (per_direction - 1) : 0.0});
  return out;
}

std::array<double, 2> apply_orientation(const Interface &iface, int dim, const std::array<double, 2> &s) {
  std::array<double, 2> t{0, 0};
  for (int j = 0; j < dim - 1; ++j) {
    const double v = s[iface.permutation[j]];
    t[j] = iface.flip[j] ? 1.0 - v : v;
  }
  return t;
}

bool sides_coincide(const Patch &a, const Interface &iface, const Patch &b, int dim, double tol) {
  for (const auto &s : side_samples(dim, 5)) {
    const auto xa = map_point(a, side_parameter(iface.side_a, dim, s));
    const auto xb = map_point(b, side_parameter(iface.side_b, dim, apply_orientation(iface, dim, s)));
    if ((xa - xb).norm() > tol) return false;
  }
  return true;
}

std::vector<std::pair<std::array<int, 2>, std::array<bool, 2>>> orientations(int dim) {
  std::vector<std::pair<std::array<int, 2>, std::array<bool, 2>>> out;
  if (dim == 2) {
    out.push_back({{0, 1}, {false, false}});
    out.push_back({{0, 1}, {true, false}});
    return out;
  }
  for (const std::array<int, 2> perm : {std::array<int, 2>{0, 1}, std::array<int, 2>{1, 0}})
    for (int f = 0; f < 4; ++f) out.push_back({perm, {(f & 1) != 0, (f & 2) != 0}});
  return out;
}

std::array<int, 3> map_position(const Interface &iface, int dim, const std::array<int, 3> &pos_a) {
  std::array<int, 3> pos_b{0, 0, 0};
  pos_b[side_axis(iface.side_b)] = side_is_upper(iface.side_b) ? 1 : 0;
  const auto tan_a = tangential_axes(iface.side_a, dim);
  const auto tan_b = tangential_axes(iface.side_b, dim);
  for (int j = 0; j < dim - 1; ++j) {
    const int v = pos_a[tan_a[iface.permutation[j]]];
    pos_b[tan_b[j]] = v == 2 ? 2 : (iface.flip[j] ? 1 - v : v);
  }
  return pos_b;
}

std::array<int, 3> decode_position(int code, int dim) {
  std::array<int, 3> pos{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    pos[k] = code % 3;
    code /= 3;
  }
  return pos;
}

bool on_dirichlet_side(const MultiPatch &mp, int patch, const std::array<int, 3> &pos) {
  for (int k = 0; k < mp.dim; ++k)
    if (pos[k] != 2 && mp.is_dirichlet(patch, make_side(k, pos[k] == 1))) return true;
  return false;
}

std::string describe(const Interface &iface) {
  return "interface (patch " + std::to_string(iface.patch_a) + " " + side_name(iface.side_a) + ", patch " +
         std::to_string(iface.patch_b) + " " + side_name(iface.side_b) + ")";
}

std::array<int, 3> dof_position(const TensorBasis &basis, const TensorBasis::MultiIndex &mi) {
  std::array<int, 3> pos{0, 0, 0};
  for (int k = 0; k < basis.dim(); ++k)
    pos[k] = mi[k] == 0 ? 0 : (mi[k] == basis.size(k) - 1 ? 1 : 2);
  return pos;
}

void check_matching(const Interface &iface, const TensorBasis &ba, const TensorBasis &bb, int dim) {
  const auto tan_a = tangential_axes(iface.side_a, dim);
  const auto tan_b = tangential_axes(iface.side_b, dim);
  for (int j = 0; j < dim - 1; ++j) {
    const auto &ka = ba.direction(tan_a[iface.permutation[j]]);
    const auto &kb = bb.direction(tan_b[j]);
    if (ka.degree() != kb.degree())
      throw Error("topology", "fully matching violated on " + describe(iface) + ": degree " +
                                  std::to_string(ka.degree()) + " vs " + std::to_string(kb.degree()));
    const auto &ta = ka.knots();
    const auto &tb = kb.knots();
    if (ta.size() != tb.size())
      throw Error("topology", "fully matching violated on " + describe(iface) + ": knot count " +
                                  std::to_string(ta.size()) + " vs " + std::to_string(tb.size()));
    for (std::size_t i = 0; i < ta.size(); ++i) {
      const double expected = iface.flip[j] ? 1.0 - ta[ta.size() - 1 - i] : ta[i];
      if (std::abs(expected - tb[i]) > 1e-12) {
        std::ostringstream msg;
        msg << "fully matching violated on " << describe(iface) << ": knot index " << i << " differs (" << expected
            << " vs " << tb[i] << ")";
        throw Error("topology", msg.str());
      }
    }
  }
}

} // namespace

Interface Interface::reversed(int dim) const {
  Interface out;
  out.patch_a = patch_b;
  out.side_a = side_b;
  out.patch_b = patch_a;
  out.side_b = side_a;
  for (int j = 0; j < dim - 1; ++j) {
    out.permutation[permutation[j]] = j;
    out.flip[permutation[j]] = flip[j];
  }
  return out;
}

int EntityClass::patch_count() const {
  std::set<int> patches;
  for (const auto &m : members) patches.insert(m.patch);
  return static_cast<int>(patches.size());
}

int entity_code(const std::array<int, 3> &position, int dim) {
  int code = 0;
  for (int k = dim - 1; k >= 0; --k) code = code * 3 + position[k];
  return code;
}

EntityKind entity_kind(const std::array<int, 3> &position, int dim) {
  int fixed = 0;
  for (int k = 0; k < dim; ++k) fixed += position[k] != 2;
  if (fixed == dim) return EntityKind::Vertex;
  if (fixed == 1) return EntityKind::Face;
  return EntityKind::Edge;
}

int Topology::class_of(int patch, const std::array<int, 3> &position) const {
  return entity_class.at(patch).at(entity_code(position, dim));
}

std::vector<int> Topology::coupled_classes(EntityKind kind) const {
  std::vector<int> out;
  for (int c = 0; c < static_cast<int>(classes.size()); ++c)
    if (classes[c].kind == kind && classes[c].coupled()) out.push_back(c);
  return out;
}

Topology build_topology(const MultiPatch &mp, double tol) {
  validate_multipatch(mp);
  const int d = mp.dim;
  const int n_sides = 2 * d;
  Topology topo;
  topo.dim = d;

  std::vector<std::vector<bool>> matched(mp.size(), std::vector<bool>(n_sides, false));
  const std::array<double, 2> centre{0.5, 0.5};
  const auto candidates = orientations(d);
  for (int a = 0; a < mp.size(); ++a)
    for (int sa = 0; sa < n_sides; ++sa) {
      if (matched[a][sa] || mp.is_dirichlet(a, static_cast<Side>(sa))) continue;
      const auto centre_a = map_point(mp.patches[a], side_parameter(static_cast<Side>(sa), d, centre));
      for (int b = a + 1; b < mp.size() && !matched[a][sa]; ++b)
        for (int sb = 0; sb < n_sides && !matched[a][sa]; ++sb) {
          if (matched[b][sb] || mp.is_dirichlet(b, static_cast<Side>(sb))) continue;
          const auto centre_b = map_point(mp.patches[b], side_parameter(static_cast<Side>(sb), d, centre));
          if ((centre_a - centre_b).norm() > tol) continue;
          for (const auto &[perm, flip] : candidates) {
            Interface iface{a, static_cast<Side>(sa), b, static_cast<Side>(sb), perm, flip};
            if (sides_coincide(mp.patches[a], iface, mp.patches[b], d, tol)) {
              topo.interfaces.push_back(iface);
              matched[a][sa] = matched[b][sb] = true;
              break;
            }
          }
        }
    }

  // Any untagged side left over is either a partial overlap or a free boundary.
  for (int a = 0; a < mp.size(); ++a)
    for (int sa = 0; sa < n_sides; ++sa) {
      if (matched[a][sa] || mp.is_dirichlet(a, static_cast<Side>(sa))) continue;
      const auto probes = side_samples(d, 5);
      const auto targets = side_samples(d, 9);
      for (int b = 0; b < mp.size(); ++b)
        for (int sb = 0; sb < n_sides; ++sb) {
          if (b == a && sb == sa) continue;
          for (const auto &s : probes) {
            if (s[0] == 0.0 || s[0] == 1.0 || (d == 3 && (s[1] == 0.0 || s[1] == 1.0))) continue;
            const auto xa = map_point(mp.patches[a], side_parameter(static_cast<Side>(sa), d, s));
            for (const auto &t : targets)
              if ((xa - map_point(mp.patches[b], side_parameter(static_cast<Side>(sb), d, t))).norm() <= tol)
                throw Error("topology", "non-matching interface: patch " + std::to_string(a) + " " +
                                            side_name(static_cast<Side>(sa)) + " partially overlaps patch " +
                                            std::to_string(b) + " " + side_name(static_cast<Side>(sb)));
          }
        }
      throw Error("topology", "unassigned boundary: patch " + std::to_string(a) + " side " +
                                  side_name(static_cast<Side>(sa)) + " is neither matched nor Dirichlet");
    }

  const int n_codes = power3(d);
  UnionFind uf(static_cast<std::size_t>(mp.size()) * n_codes);
  for (const auto &iface : topo.interfaces)
    for (int code = 0; code < n_codes; ++code) {
      const auto pos = decode_position(code, d);
      const int normal = side_axis(iface.side_a);
      if (pos[normal] != (side_is_upper(iface.side_a) ? 1 : 0)) continue;
      const auto pos_b = map_position(iface, d, pos);
      uf.unite(static_cast<std::size_t>(iface.patch_a) * n_codes + code,
               static_cast<std::size_t>(iface.patch_b) * n_codes + entity_code(pos_b, d));
    }

  const int interior_code = n_codes - 1;
  std::map<std::size_t, int> root_to_class;
  topo.entity_class.assign(mp.size(), std::vector<int>(n_codes, -1));
  for (int k = 0; k < mp.size(); ++k)
    for (int code = 0; code < n_codes; ++code) {
      if (code == interior_code) continue;
      const auto pos = decode_position(code, d);
      const std::size_t root = uf.find(static_cast<std::size_t>(k) * n_codes + code);
      auto [it, inserted] = root_to_class.try_emplace(root, static_cast<int>(topo.classes.size()));
      if (inserted) topo.classes.push_back({entity_kind(pos, d), {}, false});
      auto &cls = topo.classes[it->second];
      cls.members.push_back({k, pos});
      cls.dirichlet = cls.dirichlet || on_dirichlet_side(mp, k, pos);
      topo.entity_class[k][code] = it->second;
    }
  return topo;
}

int map_side_dof(const Interface &iface, const TensorBasis &basis_a, const TensorBasis &basis_b, int dof_a) {
  const int d = basis_a.dim();
  const auto mi_a = basis_a.multi_index(dof_a);
  const int normal_a = side_axis(iface.side_a);
  if (mi_a[normal_a] != (side_is_upper(iface.side_a) ? basis_a.size(normal_a) - 1 : 0))
    throw Error("topology", "dof " + std::to_string(dof_a) + " is not on side " + side_name(iface.side_a));
  TensorBasis::MultiIndex mi_b{0, 0, 0};
  const int normal_b = side_axis(iface.side_b);
  mi_b[normal_b] = side_is_upper(iface.side_b) ? basis_b.size(normal_b) - 1 : 0;
  const auto tan_a = tangential_axes(iface.side_a, d);
  const auto tan_b = tangential_axes(iface.side_b, d);
  for (int j = 0; j < d - 1; ++j) {
    const int i = mi_a[tan_a[iface.permutation[j]]];
    mi_b[tan_b[j]] = iface.flip[j] ? basis_b.size(tan_b[j]) - 1 - i : i;
  }
  return basis_b.index(mi_b);
}

int DofClassification::multiplicity(int patch, int free_dof) const {
  const int c = patches.at(patch).dof_class.at(free_dof);
  return c < 0 ? 1 : classes[c].multiplicity();
}

int DofClassification::total_free() const {
  int n = 0;
  for (const auto &p : patches) n += p.free_count();
  return n;
}

int DofClassification::conforming_dimension() const {
  int n = total_free();
  for (const auto &c : classes) n -= c.multiplicity() - 1;
  return n;
}

DofClassification classify_dofs(const MultiPatch &mp, const std::vector<TensorBasis> &bases, const Topology &topo) {
  const int d = mp.dim;
  if (static_cast<int>(bases.size()) != mp.size())
    throw Error("topology", "expected one basis per patch (" + std::to_string(mp.size()) + "), got " +
                                std::to_string(bases.size()));
  std::vector<std::size_t> offset(mp.size() + 1, 0);
  for (int k = 0; k < mp.size(); ++k) {
    if (bases[k].dim() != d) throw Error("topology", "basis dimension mismatch on patch " + std::to_string(k));
    offset[k + 1] = offset[k] + bases[k].size();
  }

  UnionFind uf(offset.back());
  for (const auto &iface : topo.interfaces) {
    const auto &ba = bases[iface.patch_a];
    const auto &bb = bases[iface.patch_b];
    check_matching(iface, ba, bb, d);
    const int normal = side_axis(iface.side_a);
    const int fixed = side_is_upper(iface.side_a) ? ba.size(normal) - 1 : 0;
    for (int i = 0; i < ba.size(); ++i) {
      if (ba.multi_index(i)[normal] != fixed) continue;
      const int j = map_side_dof(iface, ba, bb, i);
      uf.unite(offset[iface.patch_a] + i, offset[iface.patch_b] + j);
    }
  }

  std::vector<char> dirichlet(offset.back(), 0);
  for (int k = 0; k < mp.size(); ++k)
    for (int i = 0; i < bases[k].size(); ++i)
      if (on_dirichlet_side(mp, k, dof_position(bases[k], bases[k].multi_index(i)))) dirichlet[offset[k] + i] = 1;
  std::vector<char> root_dirichlet(offset.back(), 0);
  for (std::size_t g = 0; g < offset.back(); ++g)
    if (dirichlet[g]) root_dirichlet[uf.find(g)] = 1;

  DofClassification out;
  out.dim = d;
  out.patches.resize(mp.size());
  for (int k = 0; k < mp.size(); ++k) {
    auto &pd = out.patches[k];
    pd.total = bases[k].size();
    pd.tensor_to_free.assign(pd.total, -1);
    for (int i = 0; i < pd.total; ++i) {
      if (root_dirichlet[uf.find(offset[k] + i)]) continue;
      pd.tensor_to_free[i] = pd.free_count();
      pd.free_to_tensor.push_back(i);
    }
  }

  std::map<std::size_t, std::vector<DofMember>> groups;
  for (int k = 0; k < mp.size(); ++k)
    for (int f = 0; f < out.patches[k].free_count(); ++f)
      groups[uf.find(offset[k] + out.patches[k].free_to_tensor[f])].push_back({k, f});

  for (int k = 0; k < mp.size(); ++k) {
    auto &pd = out.patches[k];
    pd.dof_class.assign(pd.free_count(), -1);
    pd.entity_class.assign(pd.free_count(), -1);
    pd.position.resize(pd.free_count());
    for (int f = 0; f < pd.free_count(); ++f) {
      const auto pos = dof_position(bases[k], bases[k].multi_index(pd.free_to_tensor[f]));
      pd.position[f] = pos;
      if (entity_code(pos, d) != power3(d) - 1) pd.entity_class[f] = topo.class_of(k, pos);
    }
  }
  for (auto &[root, members] : groups) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    DofClass cls;
    cls.members = members;
    const auto &first = out.patches[members.front().patch];
    cls.at_vertex = entity_kind(first.position[members.front().dof], d) == EntityKind::Vertex;
    const int id = static_cast<int>(out.classes.size());
    for (const auto &m : members) out.patches[m.patch].dof_class[m.dof] = id;
    out.classes.push_back(std::move(cls));
  }
  for (auto &pd : out.patches)
    for (int f = 0; f < pd.free_count(); ++f) (pd.dof_class[f] >= 0 ? pd.gamma : pd.interior).push_back(f);
  return out;
}

} // namespace ietidp
