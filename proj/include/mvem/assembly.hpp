// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mvem/vemspace.hpp"

#include <Eigen/Sparse>

#include <filesystem>
#include <functional>
#include <vector>

namespace mvem {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Normal flux u_N(x, n_out) prescribed on the boundary.
using FluxField = std::function<double(const Vec3& point, const Vec3& outward_normal)>;

/// Problem data. nu is sampled at each cell centroid (piecewise constant).
struct CoefficientField {
  ScalarField nu = [](const Vec3&) { return 1.0; };
  ScalarField source = [](const Vec3&) { return 0.0; };
  FluxField boundary_flux = [](const Vec3&, const Vec3&) { return 0.0; };
};

/// Boundary flux of a known velocity field: u . n_out.
FluxField flux_of(VectorField velocity);

struct LocalForms {
  Eigen::MatrixXd a;  ///< n_local x n_local
  Eigen::MatrixXd b;  ///< n_q x n_local, int_P div v q_h in dof coordinates
  Eigen::VectorXd f;  ///< n_q, int_P f q_h in dof coordinates
};

/// nu (Pi^T M Pi) + nu |P| (I - D Pi)^T (I - D Pi).
Eigen::MatrixXd local_a(const ElementOperators& ops, double nu);
/// Consistency and stabilization parts of local_a, separately.
Eigen::MatrixXd local_consistency(const ElementOperators& ops, double nu);
Eigen::MatrixXd local_stabilization(const ElementOperators& ops, double nu);
Eigen::MatrixXd local_b(const ElementOperators& ops);
Eigen::VectorXd local_f(const PreparedMesh& mesh, const ElementOperators& ops, const ScalarField& f, int degree);
LocalForms local_forms(const PreparedMesh& mesh, const ElementOperators& ops, const CoefficientField& fields);

/// Discrete saddle-point system
///
///   [ A   B^T  0 ] [u]   [rhs_u]
///   [ B  -C    e ] [p] = [rhs_p]
///   [ 0   e^T  0 ] [l]   [  0  ]
///
/// B holds -b_h(v, q), i.e. the minus sign of a_h(u, v) - b_h(v, p) = 0 is
/// folded into the block so the bordered matrix is symmetric, and rhs_p is
/// -int f q_h. Neumann dofs are eliminated: their rows and columns are
/// replaced by the original diagonal entry of A, and fixed_values feed rhs.
struct SaddleSystem {
  DofLayout layout;
  SpMat A;
  SpMat B;
  SpMat C;
  Eigen::VectorXd e;
  Eigen::VectorXd rhs_u;
  Eigen::VectorXd rhs_p;
  std::vector<int> fixed_dofs;
  Eigen::VectorXd fixed_values;  ///< full velocity vector, zero off the boundary
  std::vector<ElementOperators> elements;

  int num_velocity() const { return static_cast<int>(A.rows()); }
  int num_pressure() const { return static_cast<int>(B.rows()); }
  int size() const { return num_velocity() + num_pressure() + 1; }

  SpMat monolithic() const;
  Eigen::VectorXd rhs() const;
};

struct AssemblyOptions {
  int threads = 1;
  /// Relative tolerance of the check int f = int u_N.
  double compatibility_tol = 1e-8;
};

SaddleSystem assemble(const PreparedMesh& mesh, int k, const CoefficientField& fields,
                      const AssemblyOptions& options = {});

/// Boundary face dofs: L2 projection of u_N onto P_k(f), measured against the
/// stored normal.
Eigen::VectorXd boundary_dofs(const PreparedMesh& mesh, const DofLayout& layout, const FluxField& flux, int degree);

/// Matrix Market coordinate file.
void export_triplets(const std::filesystem::path& path, const SpMat& matrix);

}  // namespace mvem
