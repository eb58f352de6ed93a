// SPDX-License-Identifier: Apache-2.0
#include "mvem/error.hpp"
#include "mvem/poly.hpp"
#include "mvem/quadrature.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mvem;
using test_util::fixture;

namespace {

double power_product(const Vec3& x, int a, int b, int c) { return std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c); }

PreparedMesh unit_cube(FaceFrame frame = FaceFrame::principal) {
  return prepare_mesh(load_mesh(fixture("unit_cube.json")), {.face_frame = frame});
}

}  // namespace

TEST(GaussJacobi, IntegratesWeightedPowers) {
  // int_0^1 (1 - t)^alpha t^m dt = alpha! m! / (alpha + m + 1)!
  for (int alpha : {0, 1, 2}) {
    std::vector<double> x, w;
    gauss_jacobi(6, alpha, x, w);
    for (int m = 0; m <= 11; ++m) {
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * std::pow(x[i], m);
      const double want = std::tgamma(alpha + 1) * std::tgamma(m + 1) / std::tgamma(alpha + m + 2);
      EXPECT_NEAR(sum, want, 1e-14 * want) << "alpha " << alpha << " m " << m;
    }
  }
}

TEST(ReferenceRules, ExactOnReferenceSimplices) {
  // int over the reference tet of x^a y^b z^c = a! b! c! / (a + b + c + 3)!
  for (int d = 0; d <= 12; ++d) {
    const auto& tet = reference_tet_rule(d);
    const auto& tri = reference_triangle_rule(d);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        const int c = d - a - b;
        const double want3 = std::tgamma(a + 1) * std::tgamma(b + 1) * std::tgamma(c + 1) / std::tgamma(d + 4);
        EXPECT_NEAR(tet.integrate([&](const Vec3& x) { return power_product(x, a, b, c); }), want3, 1e-14 * want3);
        const double want2 = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
        EXPECT_NEAR(tri.integrate([&](const Vec3& x) { return power_product(x, a, b, 0); }), want2, 1e-14 * want2);
      }
  }
}

TEST(ReferenceRules, RejectsDegreeBeyondTable) {
  EXPECT_THROW(reference_tet_rule(max_quadrature_degree + 1), ConfigError);
  EXPECT_THROW(reference_triangle_rule(-1), ConfigError);
}

TEST(IntegrateCell, UnitCubeBasics) {
  const PreparedMesh m = unit_cube();
  EXPECT_NEAR(integrate_cell(m, 0, 0, [](const Vec3&) { return 1.0; }), 1.0, 1e-15);
  const Vec3 xp = m.geometry.cells[0].centroid;
  const double h = m.geometry.cells[0].diameter;
  EXPECT_NEAR(integrate_cell(m, 0, 1, [&](const Vec3& x) { return eval_monomial({{1, 0, 0}}, x, xp, h); }), 0.0, 1e-16);
  EXPECT_NEAR(integrate_cell(m, 0, 3, [](const Vec3& x) { return x[0] * x[0] * x[1]; }), 1.0 / 6.0, 1e-15);
}

TEST(IntegrateCell, ExactForAllMonomialsUpToDegreeTen) {
  const PreparedMesh m = unit_cube();
  for (int d = 0; d <= 10; ++d)
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        const int c = d - a - b;
        const double want = 1.0 / ((a + 1.0) * (b + 1.0) * (c + 1.0));
        const double got = integrate_cell(m, 0, d, [&](const Vec3& x) { return power_product(x, a, b, c); });
        EXPECT_LT(std::abs(got - want), 1e-13 * want) << a << b << c;
      }
}

TEST(IntegrateCell, AgreesWithDivergenceTheoremOnVoronoiCells) {
  // int_P x^a y^b z^c = (1 / (a + 1)) sum_f s_f n_x int_f x^(a+1) y^b z^c
  const PreparedMesh m = test_util::voronoi(3);
  for (int cell : {0, 7, 13}) {
    for (int d = 0; d <= 6; ++d)
      for (int a = 0; a <= d; ++a)
        for (int b = 0; a + b <= d; ++b) {
          const int c = d - a - b;
          const double vol = integrate_cell(m, cell, d, [&](const Vec3& x) { return power_product(x, a, b, c); });
          double surf = 0.0;
          for (const auto& cf : m.topology.cell(cell)) {
            const double nx = cf.sign * m.geometry.faces[cf.face].normal[0];
            surf += nx * integrate_face(m, cf.face, d + 1, [&](const Vec3& x) { return power_product(x, a + 1, b, c); });
          }
          surf /= a + 1.0;
          EXPECT_NEAR(vol, surf, 1e-13 * std::max(1.0, std::abs(vol))) << "cell " << cell << " " << a << b << c;
        }
  }
}

TEST(IntegrateFace, AreaAndCentroid) {
  const PreparedMesh m = test_util::voronoi(3);
  for (int f = 0; f < m.num_faces(); ++f) {
    const auto& g = m.geometry.faces[f];
    EXPECT_NEAR(integrate_face(m, f, 0, [](const Vec3&) { return 1.0; }), g.area, 1e-14 * g.area);
    const MonomialBasis2 basis(1, g);
    std::vector<double> v(basis.size());
    const double first = integrate_face(m, f, 1, [&](const Vec3& x) {
      basis.evaluate(x, v);
      return v[1];
    });
    EXPECT_NEAR(first, 0.0, 1e-14 * g.area);
  }
}

TEST(IntegrateFace, CenteredSquareMoment) {
  // unit square, centered coordinates over [-1/2, 1/2]^2: int u^2 v^2 = 1/144,
  // scaled by h_f^4 = 4
  const PreparedMesh m = unit_cube(FaceFrame::first_edge);
  const auto& g = m.geometry.faces[1];
  const MonomialBasis2 basis(4, g);
  std::vector<double> v(basis.size());
  const int idx = monomial_index(MultiIndex2{{2, 2}});
  const double got = integrate_face(m, 1, 4, [&](const Vec3& x) {
    basis.evaluate(x, v);
    return v[idx];
  });
  EXPECT_NEAR(got, 1.0 / 576.0, 1e-16);
}

TEST(IntegrateFace, PolynomialMomentsOnTiltedFaces) {
  // a face of the Voronoi fixture against the same integral split over its
  // sub-triangles with a high-order reference rule
  const PreparedMesh m = test_util::voronoi(2);
  const auto& ref = reference_triangle_rule(20);
  for (int f = 0; f < m.num_faces(); ++f) {
    auto p = [](const Vec3& x) { return power_product(x, 3, 2, 1) - 2.0 * power_product(x, 0, 4, 2); };
    double want = 0.0;
    for (const auto& t : m.tessellation.face_triangles[f]) {
      const Vec3& a = m.tessellation.points[t[0]];
      const Vec3& b = m.tessellation.points[t[1]];
      const Vec3& c = m.tessellation.points[t[2]];
      const double jac = (b - a).cross(c - a).norm();
      want += jac * ref.integrate([&](const Vec3& s) { return p(a + s[0] * (b - a) + s[1] * (c - a)); });
    }
    EXPECT_NEAR(integrate_face(m, f, 6, p), want, 1e-13 * std::max(1.0, std::abs(want)));
  }
}
