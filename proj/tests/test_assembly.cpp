#include <gtest/gtest.h>

#include <numbers>

#include "ietidp/assembly.hpp"
#include "ietidp/experiment.hpp"

using namespace ietidp;

namespace {

/// The unit interval as a 1D patch with identity map.
Patch unit_interval() {
  Patch p;
  p.basis = TensorBasis({make_uniform_knots<double>(1, 1)});
  p.control_points.resize(2, 1);
  p.control_points << 0.0, 1.0;
  return p;
}

/// Composite Simpson on [a,b] with many panels.
template <typename F>
double simpson(F f, double a, double b, int panels = 4000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

std::vector<Side> all_sides(int d) {
  std::vector<Side> out;
  for (int s = 0; s < 2 * d; ++s) out.push_back(static_cast<Side>(s));
  return out;
}

} // namespace

TEST(Stiffness, BilinearSquareHasConstantKernel) {
  const auto mp = make_unit_hypercube_multipatch(2, {1, 1});
  const auto basis = TensorBasis::uniform(2, 1, 1);
  const auto sys = assemble_stiffness(mp.patches[0], basis, default_rule(basis), {});
  const Eigen::MatrixXd a(sys.stiffness);
  EXPECT_LE((a * Eigen::Vector4d::Ones()).norm(), 1e-15);
  Eigen::Matrix4d ref;
  ref << 4, -1, -1, -2, -1, 4, -2, -1, -1, -2, 4, -1, -2, -1, -1, 4;
  EXPECT_LE((a - ref / 6.0).norm(), 1e-15);
}

TEST(Stiffness, HandIntegratedHats) {
  const auto patch = unit_interval();
  const TensorBasis basis({make_uniform_knots<double>(1, 2)});
  const auto sys = assemble_stiffness(patch, basis, default_rule(basis), {});
  Eigen::Matrix3d ref;
  ref << 2, -2, 0, -2, 4, -2, 0, -2, 2;
  EXPECT_LE((Eigen::MatrixXd(sys.stiffness) - ref).norm(), 1e-14);
}

TEST(Stiffness, ScaledCubeFactorTwo) {
  const auto mp = make_unit_hypercube_multipatch(3, {1, 1, 1});
  Patch big = mp.patches[0];
  big.control_points *= 2.0;
  const auto basis = TensorBasis::uniform(3, 2, 2);
  const auto a = assemble_stiffness(mp.patches[0], basis, default_rule(basis), {});
  const auto b = assemble_stiffness(big, basis, default_rule(basis), {});
  EXPECT_LE((Eigen::MatrixXd(b.stiffness) - 2.0 * Eigen::MatrixXd(a.stiffness)).norm(),
            1e-12 * Eigen::MatrixXd(a.stiffness).norm());
}

TEST(Stiffness, SymmetricAndDefiniteness) {
  const auto mp = split_patches(make_fichera(0.3), 2);
  const auto basis = TensorBasis::uniform(3, 2, 1);
  for (int k : {0, 17}) {
    const auto full = assemble_stiffness(mp.patches[k], basis, default_rule(basis), {});
    const Eigen::MatrixXd a(full.stiffness);
    EXPECT_LE((a - a.transpose()).norm(), 1e-13 * a.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    EXPECT_NEAR(eig.eigenvalues()[0], 0.0, 1e-10 * eig.eigenvalues().maxCoeff());
    EXPECT_GT(eig.eigenvalues()[1], 1e-8 * eig.eigenvalues().maxCoeff());
    EXPECT_LE((a * Eigen::VectorXd::Ones(a.rows())).norm(), 1e-11 * a.norm());

    const auto fixed = assemble_stiffness(mp.patches[k], basis, default_rule(basis), {Side::ZMin});
    const Eigen::MatrixXd ad(fixed.stiffness);
    EXPECT_EQ(ad.rows(), basis.size() - 9);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ad).eigenvalues()[0], 0.0);
  }
}

TEST(Stiffness, DirichletRowsRemoved) {
  const auto mp = make_unit_hypercube_multipatch(2, {1, 1});
  const auto basis = TensorBasis::uniform(2, 2, 2);
  const auto sys = assemble_stiffness(mp.patches[0], basis, default_rule(basis), all_sides(2));
  EXPECT_EQ(sys.stiffness.rows(), 4);
  const auto full = assemble_stiffness(mp.patches[0], basis, default_rule(basis), {});
  const Eigen::MatrixXd a(full.stiffness);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_DOUBLE_EQ(sys.stiffness.coeff(i, j), a(sys.free_to_tensor[i], sys.free_to_tensor[j]));
  for (int t = 0; t < basis.size(); ++t) {
    const auto mi = basis.multi_index(t);
    const bool boundary = mi[0] == 0 || mi[0] == 3 || mi[1] == 0 || mi[1] == 3;
    EXPECT_EQ(sys.tensor_to_free[t] < 0, boundary);
  }
}

TEST(Load, Examples) {
  const auto patch = unit_interval();
  const TensorBasis basis({make_uniform_knots<double>(1, 1)});
  const Vector ones = assemble_load(patch, basis, default_rule(basis), [](const Eigen::VectorXd &) { return 1.0; });
  EXPECT_NEAR(ones[0], 0.5, 1e-15);
  EXPECT_NEAR(ones[1], 0.5, 1e-15);
  const Vector zero = assemble_load(patch, basis, default_rule(basis), [](const Eigen::VectorXd &) { return 0.0; });
  EXPECT_EQ(zero, Vector::Zero(2));
}

TEST(Load, SineAgainstReferenceQuadrature) {
  const auto patch = unit_interval();
  const TensorBasis basis({make_uniform_knots<double>(3, 4)});
  const ScalarField f = [](const Eigen::VectorXd &x) { return std::sin(std::numbers::pi * x[0]); };
  const Vector load = assemble_load(patch, basis, gauss_rule(8, 1), f);
  const auto &kv = basis.direction(0);
  for (int i = 0; i < basis.size(); ++i) {
    const double lo = kv.knots()[i], hi = kv.knots()[i + 4];
    const double ref = simpson(
        [&](double x) {
          const auto v = kv.eval(x);
          const int a = i - v.first;
          return (a >= 0 && a <= 3 ? v.values[a] : 0.0) * std::sin(std::numbers::pi * x);
        },
        lo, hi);
    EXPECT_NEAR(load[i], ref, 1e-10) << "i=" << i;
  }
}

TEST(Assembly, SinglePatchConvergenceOrder) {
  for (int p = 1; p <= 3; ++p) {
    std::vector<double> errors;
    // Cubics on 2 intervals are still pre-asymptotic (order 2.9 from r=1 to r=2).
    const int first = p == 3 ? 2 : 1;
    for (int r = first; r <= first + 2; ++r) {
      ExperimentConfig c;
      c.geometry = "square";
      c.splits = {1, 1};
      c.degree = p;
      c.refine = r;
      const auto disc = discretize(c);
      const auto &sys = disc.systems[0];
      const Vector u = Eigen::MatrixXd(sys.stiffness).ldlt().solve(sys.load);
      const Vector coefs = expand_free(u, sys.free_to_tensor, disc.bases[0].size());
      errors.push_back(std::sqrt(l2_error_squared(disc.multipatch.patches[0], disc.bases[0], coefs,
                                                  manufactured_solution, p + 2)));
    }
    for (std::size_t i = 1; i < errors.size(); ++i)
      EXPECT_GE(std::log2(errors[i - 1] / errors[i]), p + 0.8) << "p=" << p << " errors " << errors[i - 1] << " " << errors[i];
  }
}

TEST(Assembly, EvalSplineReproducesGreville) {
  const auto basis = TensorBasis::uniform(2, 3, 3);
  Vector coefs(basis.size());
  for (int t = 0; t < basis.size(); ++t) coefs[t] = basis.direction(0).greville()[basis.multi_index(t)[0]];
  EXPECT_NEAR(eval_spline(basis, coefs, Eigen::Vector2d(0.42, 0.9)), 0.42, 1e-14);
}
