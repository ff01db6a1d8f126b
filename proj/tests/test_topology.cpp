#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ietidp/topology.hpp"

using namespace ietidp;

namespace {

std::vector<TensorBasis> uniform_bases(const MultiPatch &mp, int p, int r) {
  return std::vector<TensorBasis>(mp.size(), TensorBasis::uniform(mp.dim, p, 1 << r));
}

int count_coupled(const Topology &t, EntityKind kind) { return static_cast<int>(t.coupled_classes(kind).size()); }

/// Conforming dimension by a direct global count: every patch-local tensor dof
/// is keyed by its physical Greville point; free keys are counted once.
int greville_count(const MultiPatch &mp, const std::vector<TensorBasis> &bases, const DofClassification &dofs) {
  std::set<std::array<long long, 3>> keys;
  for (int k = 0; k < mp.size(); ++k) {
    const auto &b = bases[k];
    for (int f = 0; f < dofs.patches[k].free_count(); ++f) {
      const auto mi = b.multi_index(dofs.patches[k].free_to_tensor[f]);
      Eigen::VectorXd xi(mp.dim);
      for (int a = 0; a < mp.dim; ++a) xi[a] = b.direction(a).greville()[mi[a]];
      const Eigen::VectorXd x = map_point(mp.patches[k], xi);
      std::array<long long, 3> key{0, 0, 0};
      for (int a = 0; a < mp.dim; ++a) key[a] = std::llround(x[a] * 1e8);
      keys.insert(key);
    }
  }
  return static_cast<int>(keys.size());
}

} // namespace

TEST(Topology, TwoPatchSquare) {
  const auto mp = make_unit_hypercube_multipatch(2, {2, 1});
  const auto t = build_topology(mp);
  ASSERT_EQ(t.interfaces.size(), 1u);
  EXPECT_EQ(t.interfaces[0].side_a, Side::XMax);
  EXPECT_EQ(t.interfaces[0].side_b, Side::XMin);
  int shared_vertices = 0;
  for (const auto &c : t.classes)
    if (c.kind == EntityKind::Vertex && c.patch_count() == 2) {
      ++shared_vertices;
      EXPECT_TRUE(c.dirichlet);
    }
  EXPECT_EQ(shared_vertices, 2);
  EXPECT_EQ(count_coupled(t, EntityKind::Face), 1);
  EXPECT_EQ(count_coupled(t, EntityKind::Edge), 0);
}

TEST(Topology, EightPatchCubeHandEnumeration) {
  const auto t = build_topology(make_unit_hypercube_multipatch(3, {2, 2, 2}));
  EXPECT_EQ(t.interfaces.size(), 12u);
  EXPECT_EQ(count_coupled(t, EntityKind::Face), 12);
  EXPECT_EQ(count_coupled(t, EntityKind::Edge), 6);
  EXPECT_EQ(count_coupled(t, EntityKind::Vertex), 1);
  for (int c : t.coupled_classes(EntityKind::Edge)) EXPECT_EQ(t.classes[c].patch_count(), 4);
  EXPECT_EQ(t.classes[t.coupled_classes(EntityKind::Vertex)[0]].patch_count(), 8);
}

TEST(Topology, FicheraInterfaces) {
  for (double twist : {0.0, 0.3}) {
    const auto t = build_topology(make_fichera(twist));
    EXPECT_EQ(t.interfaces.size(), 9u) << "twist " << twist;
  }
  // After splitting, every parent interface becomes m^2 interfaces and every
  // parent adds 3 m^2 (m-1) internal ones.
  const auto t2 = build_topology(split_patches(make_fichera(0.3), 2));
  EXPECT_EQ(t2.interfaces.size(), 9u * 4 + 7u * 3 * 4);
}

TEST(Topology, FicheraReentrantEdgeNotGlued) {
  // The re-entrant edge x=y=0, z in (0,1) is shared by exactly three patches.
  const auto mp = make_fichera(0.0);
  const auto t = build_topology(mp);
  int found = 0;
  for (const auto &cls : t.classes) {
    if (cls.kind != EntityKind::Edge) continue;
    const auto &m = cls.members[0];
    // midpoint of the edge in physical space
    Eigen::Vector3d xi;
    for (int a = 0; a < 3; ++a) xi[a] = m.position[a] == 2 ? 0.5 : m.position[a];
    const Eigen::VectorXd x = map_point(mp.patches[m.patch], xi);
    if (std::abs(x[0]) < 1e-12 && std::abs(x[1]) < 1e-12 && x[2] > 0) {
      ++found;
      EXPECT_EQ(cls.patch_count(), 3);
      EXPECT_TRUE(cls.dirichlet);
    }
  }
  EXPECT_EQ(found, 1);
}

TEST(Topology, UnassignedBoundary) {
  auto mp = make_unit_hypercube_multipatch(2, {2, 1});
  mp.dirichlet.erase(mp.dirichlet.begin());
  try {
    build_topology(mp);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("unassigned boundary"), std::string::npos) << e.what();
  }
}

TEST(Topology, NonMatchingInterface) {
  // patch 1 is shifted by half its height along the shared side
  auto mp = make_unit_hypercube_multipatch(2, {2, 1});
  for (Eigen::Index i = 0; i < mp.patches[1].control_points.rows(); ++i) mp.patches[1].control_points(i, 1) += 0.5;
  try {
    build_topology(mp);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("non-matching interface"), std::string::npos) << e.what();
  }
}

TEST(Topology, InterfaceMapsAreInvolutions) {
  const auto mp = split_patches(make_fichera(0.3), 2);
  const auto t = build_topology(mp);
  const auto b = TensorBasis::uniform(3, 2, 2);
  for (const auto &iface : t.interfaces) {
    const auto back = iface.reversed(3);
    for (int dof = 0; dof < b.size(); ++dof) {
      const auto mi = b.multi_index(dof);
      const int axis = side_axis(iface.side_a);
      if (mi[axis] != (side_is_upper(iface.side_a) ? b.size(axis) - 1 : 0)) continue;
      const int other = map_side_dof(iface, b, b, dof);
      EXPECT_EQ(map_side_dof(back, b, b, other), dof);
      // and the two dofs coincide physically at their Greville points
      const auto ma = b.multi_index(dof), mb = b.multi_index(other);
      Eigen::Vector3d xa, xb;
      for (int a = 0; a < 3; ++a) {
        xa[a] = b.direction(a).greville()[ma[a]];
        xb[a] = b.direction(a).greville()[mb[a]];
      }
      EXPECT_LE((map_point(mp.patches[iface.patch_a], xa) - map_point(mp.patches[iface.patch_b], xb)).norm(), 1e-9);
    }
  }
}

TEST(ClassifyDofs, TwoPatchSquareHandCount) {
  const auto mp = make_unit_hypercube_multipatch(2, {2, 1});
  const auto bases = uniform_bases(mp, 1, 1);
  const auto d = classify_dofs(mp, bases, build_topology(mp));
  for (const auto &pd : d.patches) {
    EXPECT_EQ(pd.total, 9);
    EXPECT_EQ(pd.free_count(), 2);
    EXPECT_EQ(pd.gamma.size(), 1u);
    EXPECT_EQ(pd.interior.size(), 1u);
  }
  ASSERT_EQ(d.classes.size(), 1u);
  EXPECT_EQ(d.classes[0].multiplicity(), 2);
  EXPECT_EQ(d.conforming_dimension(), 3);
}

TEST(ClassifyDofs, SinglePatchAllInterior) {
  const auto mp = make_unit_hypercube_multipatch(3, {1, 1, 1});
  const auto d = classify_dofs(mp, uniform_bases(mp, 2, 2), build_topology(mp));
  EXPECT_TRUE(d.patches[0].gamma.empty());
  EXPECT_EQ(d.patches[0].interior.size(), 4u * 4 * 4);
  EXPECT_TRUE(d.classes.empty());
}

TEST(ClassifyDofs, CentralVertexMultiplicityEight) {
  const auto mp = make_unit_hypercube_multipatch(3, {2, 2, 2});
  const auto d = classify_dofs(mp, uniform_bases(mp, 2, 1), build_topology(mp));
  int eights = 0;
  for (const auto &c : d.classes)
    if (c.multiplicity() == 8) {
      ++eights;
      EXPECT_TRUE(c.at_vertex);
    }
  EXPECT_EQ(eights, 1);
}

TEST(ClassifyDofs, PartitionAndMultiplicity) {
  const auto mp = split_patches(make_fichera(0.3), 2);
  const auto bases = uniform_bases(mp, 2, 1);
  const auto d = classify_dofs(mp, bases, build_topology(mp));
  for (const auto &pd : d.patches) {
    std::vector<int> all(pd.interior);
    all.insert(all.end(), pd.gamma.begin(), pd.gamma.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expected(pd.free_count());
    for (int i = 0; i < pd.free_count(); ++i) expected[i] = i;
    EXPECT_EQ(all, expected);
    for (int g : pd.gamma) EXPECT_GE(pd.dof_class[g], 0);
    for (int i : pd.interior) EXPECT_EQ(pd.dof_class[i], -1);
  }
  for (const auto &c : d.classes) EXPECT_GE(c.multiplicity(), 2);
  EXPECT_EQ(d.conforming_dimension(), greville_count(mp, bases, d));
}

TEST(ClassifyDofs, ConformingDimensionMatchesDirectCount) {
  for (int p = 1; p <= 3; ++p) {
    const auto mp = make_unit_hypercube_multipatch(3, {2, 2, 2});
    const auto bases = uniform_bases(mp, p, 1);
    const auto d = classify_dofs(mp, bases, build_topology(mp));
    const int n = 2 * (p + 2) - 1 - 2; // C^0 glued direction minus the two Dirichlet ends
    EXPECT_EQ(d.conforming_dimension(), n * n * n);
    EXPECT_EQ(d.conforming_dimension(), greville_count(mp, bases, d));
  }
}

TEST(ClassifyDofs, InvariantUnderPatchReordering) {
  const auto mp = make_unit_hypercube_multipatch(2, {2, 2});
  MultiPatch rev = mp;
  std::reverse(rev.patches.begin(), rev.patches.end());
  for (auto &tag : rev.dirichlet) tag.patch = mp.size() - 1 - tag.patch;
  const auto bases = uniform_bases(mp, 2, 1);
  const auto a = classify_dofs(mp, bases, build_topology(mp));
  const auto b = classify_dofs(rev, bases, build_topology(rev));
  const auto signature = [](const DofClassification &d, bool reversed) {
    std::multiset<std::vector<std::pair<int, int>>> out;
    for (const auto &c : d.classes) {
      std::vector<std::pair<int, int>> m;
      for (const auto &x : c.members) {
        const int k = reversed ? int(d.patches.size()) - 1 - x.patch : x.patch;
        m.emplace_back(k, d.patches[x.patch].free_to_tensor[x.dof]);
      }
      std::sort(m.begin(), m.end());
      out.insert(m);
    }
    return out;
  };
  EXPECT_EQ(signature(a, false), signature(b, true));
}

TEST(ClassifyDofs, FullyMatchingViolated) {
  const auto mp = make_unit_hypercube_multipatch(2, {2, 1});
  std::vector<TensorBasis> bases{TensorBasis::uniform(2, 2, 2), TensorBasis::uniform(2, 2, 4)};
  try {
    classify_dofs(mp, bases, build_topology(mp));
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("fully matching violated"), std::string::npos) << e.what();
  }
}
