// SPDX-License-Identifier: Apache-2.0
#include "mvem/error.hpp"
#include "mvem/quadrature.hpp"
#include "mvem/vemspace.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

using namespace mvem;
using mvem::test_util::cell_samples;
using mvem::test_util::RandomField;
using mvem::test_util::RandomPoly;

namespace {

double rel_err(double got, double want, double scale) { return std::abs(got - want) / std::max(scale, 1e-300); }

struct Space {
  PreparedMesh mesh;
  DofLayout layout;
  std::vector<ElementOperators> ops;

  Space(PreparedMesh m, int k)
      : mesh(std::move(m)), layout(k, mesh.num_faces(), mesh.num_cells()), ops(build_elements(mesh, layout)) {}
};

// max |f| over sample points, for relative tolerances
template <class F>
double sup(const std::vector<Vec3>& pts, F&& f) {
  double s = 0.0;
  for (const auto& x : pts) s = std::max(s, std::abs(f(x)));
  return s;
}

}  // namespace

TEST(DofCounts, LargeCubeTotals) {
  // 3 n^2 (n + 1) faces and n^3 cells on the structured cube mesh
  auto faces = [](long long n) { return 3 * n * n * (n + 1); };
  EXPECT_EQ(dof_counts(1, faces(32), 32LL * 32 * 32).total, 435201);
  EXPECT_EQ(dof_counts(2, faces(24), 24LL * 24 * 24).total, 508033);
  EXPECT_EQ(dof_counts(3, faces(20), 20LL * 20 * 20).total, 612001);
}

TEST(DofCounts, MatchesEntityCountAudit) {
  for (int k = 1; k <= 4; ++k) {
    const auto mesh = gen_cube_mesh(3);
    long long count = 0;
    for (int f = 0; f < mesh.num_faces(); ++f) count += (k + 1) * (k + 2) / 2;
    for (int c = 0; c < mesh.num_cells(); ++c) count += dim_pk(k - 1) - 1 + dim_gperp(k) + dim_pk(k - 1);
    const auto d = dof_counts(k, mesh);
    EXPECT_EQ(d.total, count + 1);
    const DofLayout layout(k, mesh.num_faces(), mesh.num_cells());
    EXPECT_EQ(layout.total(), d.total);
  }
}

TEST(DofCounts, RejectsUnsupportedOrder) {
  EXPECT_THROW(dof_counts(0, 10, 1), ConfigError);
  EXPECT_THROW(dof_counts(5, 10, 1), ConfigError);
}

TEST(FaceNormalPoly, ConstantFieldOnTopFace) {
  Space s(test_util::cube(1), 2);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, [](const Vec3&) { return Vec3(0, 0, 1); }, 6);
  const auto faces = s.mesh.topology.cell(0);
  for (int j = 0; j < static_cast<int>(faces.size()); ++j) {
    const Vec3 n = s.mesh.geometry.faces[faces[j].face].normal;
    if (std::abs(n.z() - 1.0) > 1e-12) continue;
    const Eigen::VectorXd c = face_normal_poly(s.ops[0], j, dofs.segment(j * s.layout.n_face, s.layout.n_face));
    EXPECT_NEAR(c[0], 1.0, 1e-12);
    for (int i = 1; i < c.size(); ++i) EXPECT_NEAR(c[i], 0.0, 1e-12);
  }
}

TEST(FaceNormalPoly, LinearFieldOnRightFace) {
  Space s(test_util::cube(1), 1);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, [](const Vec3& x) { return Vec3(x.x(), 0, 0); }, 6);
  const auto faces = s.mesh.topology.cell(0);
  for (int j = 0; j < static_cast<int>(faces.size()); ++j) {
    const auto& fg = s.mesh.geometry.faces[faces[j].face];
    if (std::abs(fg.centroid.x() - 1.0) > 1e-12) continue;
    const Eigen::VectorXd c = face_normal_poly(s.ops[0], j, dofs.segment(j * s.layout.n_face, s.layout.n_face));
    // stored normal of the x = 1 face is +x on the generated mesh
    EXPECT_NEAR(c[0] * fg.normal.x(), 1.0, 1e-12);
  }
}

class PerOrder : public ::testing::TestWithParam<int> {};

TEST_P(PerOrder, FaceNormalPolyReproducesPolynomialTraces) {
  const int k = GetParam();
  std::mt19937 rng(11 + k);
  for (auto mesh : {test_util::cube(1), test_util::voronoi(2)}) {
    Space s(std::move(mesh), k);
    const RandomField p(k, rng);
    const int cell = 0;
    const auto dofs = interpolate_velocity(s.mesh, s.layout, cell, p.field(), 2 * k + 2);
    const auto faces = s.mesh.topology.cell(cell);
    for (int j = 0; j < static_cast<int>(faces.size()); ++j) {
      const auto& fg = s.mesh.geometry.faces[faces[j].face];
      const Eigen::VectorXd c = face_normal_poly(s.ops[cell], j, dofs.segment(j * s.layout.n_face, s.layout.n_face));
      const MonomialBasis2 basis(k, fg);
      const auto rule = face_rule(s.mesh, faces[j].face, 2);
      std::vector<double> psi(basis.size());
      const double scale = sup(rule.points, [&](const Vec3& x) { return p(x).norm(); });
      for (const auto& x : rule.points) {
        basis.evaluate(x, psi);
        double value = 0.0;
        for (int i = 0; i < basis.size(); ++i) value += c[i] * psi[i];
        EXPECT_LT(rel_err(value, p(x).dot(fg.normal), scale), 1e-10) << "face " << faces[j].face;
      }
    }
  }
}

TEST_P(PerOrder, DivergenceCommutesWithInterpolation) {
  const int k = GetParam();
  std::mt19937 rng(23 + k);
  for (auto mesh : {test_util::cube(2), test_util::voronoi(2)}) {
    Space s(std::move(mesh), k);
    for (int cell = 0; cell < s.mesh.num_cells(); cell += 3) {
      const RandomField p(k, rng);
      const auto dofs = interpolate_velocity(s.mesh, s.layout, cell, p.field(), 2 * k + 2);
      const Eigen::VectorXd div = s.ops[cell].divergence * dofs;
      const MonomialBasis3 basis(k - 1, s.ops[cell].center, s.ops[cell].h);
      std::vector<double> m(basis.size());
      const auto pts = cell_samples(s.mesh, cell, 10, rng);
      const double scale = sup(pts, [&](const Vec3& x) { return p.divergence(x); }) + 1.0;
      for (const auto& x : pts) {
        basis.evaluate(x, m);
        double value = 0.0;
        for (int i = 0; i < basis.size(); ++i) value += div[i] * m[i];
        EXPECT_LT(rel_err(value, p.divergence(x), scale), 1e-10);
      }
    }
  }
}

TEST_P(PerOrder, ProjectionReproducesPolynomials) {
  const int k = GetParam();
  std::mt19937 rng(31 + k);
  for (auto mesh : {test_util::cube(2), test_util::voronoi(2)}) {
    Space s(std::move(mesh), k);
    for (int cell = 0; cell < s.mesh.num_cells(); cell += 2) {
      const RandomField p(k, rng);
      const auto dofs = interpolate_velocity(s.mesh, s.layout, cell, p.field(), 2 * k + 2);
      const auto pts = cell_samples(s.mesh, cell, 10, rng);
      const double scale = sup(pts, [&](const Vec3& x) { return p(x).norm(); });
      for (const auto& x : pts) EXPECT_LT((projection_eval(s.ops[cell], dofs, x) - p(x)).norm() / scale, 1e-9);
    }
  }
}

TEST_P(PerOrder, MonomialDofsMatchInterpolation) {
  const int k = GetParam();
  Space s(test_util::voronoi(2), k);
  const auto& ops = s.ops[1];
  const MonomialBasis3 basis(k, ops.center, ops.h);
  const auto idx = basis.indices();
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < basis.size(); ++a) {
      const VectorField m = [&](const Vec3& x) {
        Vec3 v = Vec3::Zero();
        v[c] = eval_monomial(idx[a], x, ops.center, ops.h);
        return v;
      };
      const Eigen::VectorXd want = interpolate_velocity(s.mesh, s.layout, 1, m, 2 * k + 2);
      const Eigen::VectorXd got = ops.monomial_dofs.col(c * basis.size() + a);
      EXPECT_LT((got - want).norm(), 1e-11 * std::max(want.norm(), 1.0)) << "component " << c << " monomial " << a;
    }
}

TEST_P(PerOrder, StabilizationResidualVanishesOnPolynomials) {
  const int k = GetParam();
  std::mt19937 rng(41 + k);
  Space s(test_util::voronoi(2), k);
  const auto& ops = s.ops[0];
  const RandomField p(k, rng);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, p.field(), 2 * k + 2);
  const Eigen::VectorXd r = dofs - ops.monomial_dofs * (ops.projection * dofs);
  EXPECT_LT(r.norm(), 1e-9 * dofs.norm());
}

INSTANTIATE_TEST_SUITE_P(Orders, PerOrder, ::testing::Values(1, 2, 3, 4));

TEST(Divergence, RadialFieldHasDivergenceThree) {
  Space s(test_util::cube(1), 2);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, [](const Vec3& x) { return x; }, 6);
  const Eigen::VectorXd div = s.ops[0].divergence * dofs;
  EXPECT_NEAR(div[0], 3.0, 1e-12);
  for (int i = 1; i < div.size(); ++i) EXPECT_NEAR(div[i], 0.0, 1e-12);
}

TEST(Divergence, ConstantFieldIsDivergenceFree) {
  Space s(test_util::voronoi(2), 3);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 2, [](const Vec3&) { return Vec3(0.3, -1.0, 2.0); }, 8);
  EXPECT_LT((s.ops[2].divergence * dofs).norm(), 1e-11);
}

TEST(Divergence, ManufacturedFieldGivesProjectedSource) {
  // The divergence of the interpolant is the L2 projection of div v onto
  // P_{k-1}; the projection is computed here by an independent quadrature.
  const int k = 3;
  Space s(test_util::cube(1), k);
  const VectorField v = [](const Vec3& p) {
    const double x = p.x(), y = p.y(), z = p.z();
    return Vec3(-5 * std::pow(x, 4) - y * y * z * z * z, -24 * y * y * y - 2 * x * y * z * z * z,
                -27 * z * z - 3 * x * y * y * z * z);
  };
  auto div_v = [](const Vec3& p) {
    const double x = p.x(), y = p.y(), z = p.z();
    return -20 * x * x * x - 72 * y * y - 2 * x * z * z * z - 54 * z - 6 * x * y * y * z;
  };
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, v, 12);
  const Eigen::VectorXd div = s.ops[0].divergence * dofs;

  const MonomialBasis3 basis(k - 1, s.ops[0].center, s.ops[0].h);
  const auto rule = cell_rule(s.mesh, 0, 14);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.size());
  std::vector<double> m(basis.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate(rule.points[q], m);
    const Eigen::Map<Eigen::VectorXd> mv(m.data(), basis.size());
    mass += rule.weights[q] * mv * mv.transpose();
    rhs += rule.weights[q] * div_v(rule.points[q]) * mv;
  }
  const Eigen::VectorXd want = mass.ldlt().solve(rhs);
  EXPECT_LT((div - want).norm(), 1e-9 * want.norm());
}

TEST(Projection, ConstantFieldCoefficients) {
  Space s(test_util::cube(1), 2);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, [](const Vec3&) { return Vec3(1, 0, 0); }, 6);
  const Eigen::VectorXd c = s.ops[0].projection * dofs;
  const int nk = dim_pk(2);
  for (int i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], i == 0 ? 1.0 : 0.0, 1e-12) << i;
  EXPECT_EQ(c.size(), 3 * nk);
}

TEST(Projection, SatisfiesItsDefiningMoments) {
  // int (Pi v) . m_j by quadrature equals (M Pi dofs)_j
  const int k = 2;
  std::mt19937 rng(5);
  Space s(test_util::voronoi(2), k);
  const auto& ops = s.ops[3];
  Eigen::VectorXd dofs = Eigen::VectorXd::Random(ops.num_local());
  const Eigen::VectorXd coeffs = ops.projection * dofs;
  const MonomialBasis3 basis(k, ops.center, ops.h);
  const int nk = basis.size();
  const auto rule = cell_rule(s.mesh, 3, 2 * k);
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(3 * nk);
  std::vector<double> m(nk);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate(rule.points[q], m);
    const Vec3 pv = projection_eval(ops, dofs, rule.points[q]);
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < nk; ++a) moments[c * nk + a] += rule.weights[q] * pv[c] * m[a];
  }
  Eigen::VectorXd want(3 * nk);
  for (int c = 0; c < 3; ++c) want.segment(c * nk, nk) = ops.mass * coeffs.segment(c * nk, nk);
  EXPECT_LT((moments - want).norm(), 1e-11 * want.norm());
}

TEST(Interpolation, ConstantFieldOnUnitCubeAtOrderOne) {
  Space s(test_util::cube(1), 1);
  const Vec3 v(1.0, 2.0, 3.0);
  const auto dofs = interpolate_velocity(s.mesh, s.layout, 0, [&](const Vec3&) { return v; }, 4);
  const auto faces = s.mesh.topology.cell(0);
  for (int j = 0; j < 6; ++j) {
    const Vec3 n = s.mesh.geometry.faces[faces[j].face].normal;
    EXPECT_NEAR(dofs[j * 3], v.dot(n), 1e-13);
    EXPECT_NEAR(dofs[j * 3 + 1], 0.0, 1e-13);
    EXPECT_NEAR(dofs[j * 3 + 2], 0.0, 1e-13);
  }
  EXPECT_EQ(s.layout.n_grad, 0);
  // cross moments of a constant: (1/|P|) int v . (m_I x g) vanish by symmetry about the centroid
  for (int i = 18; i < dofs.size(); ++i) EXPECT_NEAR(dofs[i], 0.0, 1e-13);
}

TEST(Interpolation, IsLinear) {
  std::mt19937 rng(9);
  Space s(test_util::voronoi(2), 2);
  const RandomField u(3, rng), w(3, rng);
  const double a = 1.7, b = -0.4;
  const VectorField comb = [&](const Vec3& x) { return Vec3(a * u(x) + b * w(x)); };
  const auto iu = interpolate_velocity(s.mesh, s.layout, u.field(), 8);
  const auto iw = interpolate_velocity(s.mesh, s.layout, w.field(), 8);
  const auto ic = interpolate_velocity(s.mesh, s.layout, comb, 8);
  EXPECT_LT((ic - (a * iu + b * iw)).cwiseAbs().maxCoeff(), 1e-13 * std::max(1.0, ic.cwiseAbs().maxCoeff()));
}

TEST(Interpolation, ScalesExactlyWithTheField) {
  std::mt19937 rng(10);
  Space s(test_util::cube(2), 2);
  const RandomField u(2, rng);
  const VectorField scaled = [&](const Vec3& x) { return Vec3(4.0 * u(x)); };
  const auto iu = interpolate_velocity(s.mesh, s.layout, u.field(), 6);
  const auto is = interpolate_velocity(s.mesh, s.layout, scaled, 6);
  EXPECT_EQ((is - 4.0 * iu).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Interpolation, InvariantUnderTranslation) {
  std::mt19937 rng(12);
  const PolyMesh base = gen_cube_mesh(2);
  const Vec3 shift(1.0, 2.0, 3.0);
  std::vector<Vec3> moved(base.vertices().begin(), base.vertices().end());
  for (auto& v : moved) v += shift;
  std::vector<std::vector<int>> faces;
  for (int f = 0; f < base.num_faces(); ++f) faces.emplace_back(base.face(f).begin(), base.face(f).end());
  std::vector<std::vector<CellFace>> cells;
  for (int c = 0; c < base.num_cells(); ++c) cells.emplace_back(base.cell(c).begin(), base.cell(c).end());
  Space s0(prepare_mesh(base), 2);
  Space s1(prepare_mesh(PolyMesh(moved, faces, cells)), 2);
  const RandomField u(2, rng);
  const VectorField shifted = [&](const Vec3& x) { return u(x - shift); };
  const auto i0 = interpolate_velocity(s0.mesh, s0.layout, u.field(), 6);
  const auto i1 = interpolate_velocity(s1.mesh, s1.layout, shifted, 6);
  EXPECT_LT((i0 - i1).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, i0.cwiseAbs().maxCoeff()));
}

TEST(Pressure, ConstantRoundTrip) {
  Space s(test_util::voronoi(2), 3);
  const auto dofs = interpolate_pressure(s.mesh, s.layout, 4, [](const Vec3&) { return 1.0; }, 6);
  EXPECT_NEAR(dofs[0], 1.0, 1e-13);
  EXPECT_NEAR(pressure_eval(s.ops[4], dofs, s.ops[4].center + Vec3(0.01, 0.02, -0.01)), 1.0, 1e-12);
}

TEST(Pressure, PolynomialRoundTrip) {
  std::mt19937 rng(13);
  for (int k = 1; k <= 4; ++k) {
    Space s(test_util::voronoi(2), k);
    const RandomPoly q(k - 1, rng);
    const ScalarField qf = [&](const Vec3& x) { return q(x); };
    const auto dofs = interpolate_pressure(s.mesh, s.layout, 1, qf, 2 * k);
    for (const auto& x : cell_samples(s.mesh, 1, 10, rng))
      EXPECT_NEAR(pressure_eval(s.ops[1], dofs, x), q(x), 1e-11 * std::max(1.0, std::abs(q(x))));
  }
}

TEST(Pressure, CenteredMonomialHasZeroMean) {
  Space s(test_util::cube(1), 2);
  const Vec3 xc = s.mesh.geometry.cells[0].centroid;
  const double h = s.mesh.geometry.cells[0].diameter;
  const auto dofs = interpolate_pressure(s.mesh, s.layout, 0, [&](const Vec3& x) { return (x.x() - xc.x()) / h; }, 4);
  EXPECT_NEAR(dofs[0], 0.0, 1e-15);
}
