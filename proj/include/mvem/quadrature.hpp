// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mvem/mesh.hpp"

#include <functional>
#include <vector>

namespace mvem {

/// Points and weights in physical coordinates.
struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t q = 0; q < weights.size(); ++q) sum += weights[q] * f(points[q]);
    return sum;
  }
};

/// Highest polynomial exactness the rule tables provide.
inline constexpr int max_quadrature_degree = 30;

/// Gauss-Jacobi nodes/weights on [0, 1] for the weight (1 - t)^alpha, exact
/// for polynomials of degree 2n - 1.
void gauss_jacobi(int n, int alpha, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate rule on the reference tetrahedron {x, y, z >= 0,
/// x + y + z <= 1} (points as barycentric-free reference coordinates),
/// exact to `degree`. Cached; safe to call concurrently.
const QuadratureRule& reference_tet_rule(int degree);

/// Same for the reference triangle {x, y >= 0, x + y <= 1} (z = 0).
const QuadratureRule& reference_triangle_rule(int degree);

/// Rule on cell c assembled from its sub-tetrahedra. Weights carry the signed
/// tetrahedron volumes, so the rule stays exact for polynomial integrands.
QuadratureRule cell_rule(const PreparedMesh& mesh, int cell, int degree);

/// Rule on face f from its centroid fan. Weights carry triangle areas
/// measured along the face normal.
QuadratureRule face_rule(const PreparedMesh& mesh, int face, int degree);

/// Integrates `integrand` (exact for polynomials of total degree <= degree).
double integrate_cell(const PreparedMesh& mesh, int cell, int degree,
                      const std::function<double(const Vec3&)>& integrand);
double integrate_face(const PreparedMesh& mesh, int face, int degree,
                      const std::function<double(const Vec3&)>& integrand);

}  // namespace mvem
