// SPDX-License-Identifier: Apache-2.0
#include "mvem/quadrature.hpp"

#include "mvem/error.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <string>

namespace mvem {

void gauss_jacobi(int n, int alpha, std::vector<double>& nodes, std::vector<double>& weights) {
  // Golub-Welsch on the Jacobi matrix of P^(alpha, 0) over [-1, 1], mapped to [0, 1].
  const double a = alpha;
  const double b = 0.0;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = 2.0 * i + a + b;
    jacobi(i, i) = (i == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (i + 1 < n) {
      const double m = i + 1;
      const double t = 2.0 * m + a + b;
      const double beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1.0) * (t - 1.0));
      jacobi(i, i + 1) = jacobi(i + 1, i) = std::sqrt(beta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  // mu0 = 2^(a+1) / (a+1) for b = 0
  const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    nodes[i] = 0.5 * (1.0 + x);
    weights[i] = mu0 * v0 * v0 / std::pow(2.0, a + 1.0);
  }
}

namespace {

void check_degree(int degree) {
  if (degree < 0 || degree > max_quadrature_degree)
    throw ConfigError("no quadrature rule of exactness " + std::to_string(degree) +
                      " (table covers 0.." + std::to_string(max_quadrature_degree) + ")");
}

QuadratureRule make_tet_rule(int degree) {
  const int n = degree / 2 + 1;
  std::vector<double> x0, w0, x1, w1, x2, w2;
  gauss_jacobi(n, 2, x0, w0);
  gauss_jacobi(n, 1, x1, w1);
  gauss_jacobi(n, 0, x2, w2);
  QuadratureRule rule;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double u = x0[i], v = x1[j], w = x2[k];
        rule.points.emplace_back(u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v));
        rule.weights.push_back(w0[i] * w1[j] * w2[k]);
      }
  return rule;
}

QuadratureRule make_triangle_rule(int degree) {
  const int n = degree / 2 + 1;
  std::vector<double> x0, w0, x1, w1;
  gauss_jacobi(n, 1, x0, w0);
  gauss_jacobi(n, 0, x1, w1);
  QuadratureRule rule;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      rule.points.emplace_back(x0[i], x1[j] * (1.0 - x0[i]), 0.0);
      rule.weights.push_back(w0[i] * w1[j]);
    }
  return rule;
}

using RuleTable = std::array<QuadratureRule, max_quadrature_degree + 1>;

RuleTable make_table(QuadratureRule (*make)(int)) {
  RuleTable t;
  for (int d = 0; d <= max_quadrature_degree; ++d) t[d] = make(d);
  return t;
}

}  // namespace

const QuadratureRule& reference_tet_rule(int degree) {
  check_degree(degree);
  static const RuleTable table = make_table(make_tet_rule);
  return table[degree];
}

const QuadratureRule& reference_triangle_rule(int degree) {
  check_degree(degree);
  static const RuleTable table = make_table(make_triangle_rule);
  return table[degree];
}

QuadratureRule cell_rule(const PreparedMesh& mesh, int cell, int degree) {
  const auto& ref = reference_tet_rule(degree);
  const auto& tess = mesh.tessellation;
  QuadratureRule rule;
  const auto& tets = tess.cell_tets[cell];
  rule.points.reserve(tets.size() * ref.size());
  rule.weights.reserve(tets.size() * ref.size());
  for (const auto& t : tets) {
    const Vec3& p0 = tess.points[t[0]];
    const Vec3 e1 = tess.points[t[1]] - p0;
    const Vec3 e2 = tess.points[t[2]] - p0;
    const Vec3 e3 = tess.points[t[3]] - p0;
    const double jac = e1.dot(e2.cross(e3));
    for (std::size_t q = 0; q < ref.size(); ++q) {
      const Vec3& r = ref.points[q];
      rule.points.push_back(p0 + r.x() * e1 + r.y() * e2 + r.z() * e3);
      rule.weights.push_back(ref.weights[q] * jac);
    }
  }
  return rule;
}

QuadratureRule face_rule(const PreparedMesh& mesh, int face, int degree) {
  const auto& ref = reference_triangle_rule(degree);
  const auto& tess = mesh.tessellation;
  const Vec3& normal = mesh.geometry.faces[face].normal;
  QuadratureRule rule;
  for (const auto& t : tess.face_triangles[face]) {
    const Vec3& p0 = tess.points[t[0]];
    const Vec3 e1 = tess.points[t[1]] - p0;
    const Vec3 e2 = tess.points[t[2]] - p0;
    const double jac = e1.cross(e2).dot(normal);
    for (std::size_t q = 0; q < ref.size(); ++q) {
      const Vec3& r = ref.points[q];
      rule.points.push_back(p0 + r.x() * e1 + r.y() * e2);
      rule.weights.push_back(ref.weights[q] * jac);
    }
  }
  return rule;
}

double integrate_cell(const PreparedMesh& mesh, int cell, int degree,
                      const std::function<double(const Vec3&)>& integrand) {
  return cell_rule(mesh, cell, degree).integrate(integrand);
}

double integrate_face(const PreparedMesh& mesh, int face, int degree,
                      const std::function<double(const Vec3&)>& integrand) {
  return face_rule(mesh, face, degree).integrate(integrand);
}

}  // namespace mvem
