// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mvem/mesh.hpp"
#include "mvem/poly.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace mvem {

using VectorField = std::function<Vec3(const Vec3&)>;
using ScalarField = std::function<double(const Vec3&)>;

inline constexpr int min_order = 1;
inline constexpr int max_order = 4;

/// Throws ConfigError unless 1 <= k <= 4.
void check_order(int k);

/// Global numbering: velocity (face moments face by face, then per-cell
/// gradient and cross moments), then pressure moments cell by cell, then the
/// mean-value multiplier.
struct DofLayout {
  int order = 1;
  int num_faces = 0;
  int num_cells = 0;
  int n_face = 0;   ///< dim P_k(f)
  int n_grad = 0;   ///< dim P_{k-1}(P) - 1
  int n_cross = 0;  ///< dim of the gradient complement
  int n_q = 0;      ///< dim P_{k-1}(P)

  DofLayout() = default;
  DofLayout(int k, int faces, int cells);

  int n_internal() const { return n_grad + n_cross; }
  int velocity_dofs() const { return num_faces * n_face + num_cells * n_internal(); }
  int pressure_dofs() const { return num_cells * n_q; }
  int total() const { return velocity_dofs() + pressure_dofs() + 1; }

  int face_dof(int f, int i) const { return f * n_face + i; }
  int internal_dof(int c, int i) const { return num_faces * n_face + c * n_internal() + i; }
  /// Index inside the pressure block.
  int pressure_dof(int c, int i) const { return c * n_q + i; }
  /// Index inside the bordered pressure block (pressure dofs + multiplier).
  int multiplier() const { return pressure_dofs(); }
};

struct DofCounts {
  long long velocity = 0;
  long long pressure = 0;
  long long total = 0;  ///< velocity + pressure + 1 multiplier
};

DofCounts dof_counts(int k, long long num_faces, long long num_cells);
DofCounts dof_counts(int k, const PolyMesh& mesh);

/// Computable operators of one cell. Local dofs: the face moments of each
/// face in cell order, then gradient moments, then cross moments. Face dofs
/// are measured against the stored (global) face normal.
struct ElementOperators {
  int cell = 0;
  int order = 1;
  double volume = 0.0;
  double h = 0.0;
  Vec3 center = Vec3::Zero();
  std::vector<int> global_dofs;  ///< local -> global velocity dof

  /// Per local face: face dofs -> coefficients of v.n_f (stored normal) in M_k(f).
  std::vector<Eigen::MatrixXd> face_normal;
  /// Local dofs -> coefficients of div v in M_{k-1}(P).
  Eigen::MatrixXd divergence;
  /// Local dofs -> coefficients of the L2 projection in [M_k(P)]^3, component-major.
  Eigen::MatrixXd projection;
  /// Dof functionals applied to the vector monomials, n_local x 3 dim P_k.
  Eigen::MatrixXd monomial_dofs;
  /// Scalar mass matrix over M_k(P); M_{k-1}(P) is its leading block.
  Eigen::MatrixXd mass;

  int num_local() const { return static_cast<int>(global_dofs.size()); }
  int num_monomials() const { return static_cast<int>(mass.rows()); }
};

ElementOperators build_element(const PreparedMesh& mesh, const DofLayout& layout, int cell);

/// Element operators for every cell, built on `threads` workers.
std::vector<ElementOperators> build_elements(const PreparedMesh& mesh, const DofLayout& layout, int threads = 1);

/// Coefficients of v.n_f (stored normal) in M_k(f) from the face's dof slice.
Eigen::VectorXd face_normal_poly(const ElementOperators& ops, int local_face, const Eigen::Ref<const Eigen::VectorXd>& face_dofs);

/// Quadrature exactness used to interpolate non-polynomial data at order k.
inline int interpolation_degree(int k) { return 2 * k + 4; }

/// Dofs of an analytic field on one cell (local ordering).
Eigen::VectorXd interpolate_velocity(const PreparedMesh& mesh, const DofLayout& layout, int cell, const VectorField& v,
                                     int degree);
/// Dofs of an analytic field on the whole mesh (global velocity block).
Eigen::VectorXd interpolate_velocity(const PreparedMesh& mesh, const DofLayout& layout, const VectorField& v,
                                     int degree);

/// Scaled moments (1/|P|) int_P q m_alpha over M_{k-1}(P).
Eigen::VectorXd interpolate_pressure(const PreparedMesh& mesh, const DofLayout& layout, int cell, const ScalarField& q,
                                     int degree);
Eigen::VectorXd interpolate_pressure(const PreparedMesh& mesh, const DofLayout& layout, const ScalarField& q,
                                     int degree);

/// Monomial coefficients over M_{k-1}(P) of the pressure with the given moments.
Eigen::VectorXd pressure_coefficients(const ElementOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& dofs);
double pressure_eval(const ElementOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& dofs, const Vec3& point);

/// Value of Pi v at a point, from the projection coefficients.
Vec3 projection_eval(const ElementOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& local_dofs, const Vec3& point);

/// Solves M x = rhs for a symmetric positive definite M by pivoted LDL^T;
/// throws IllConditionedError naming `what` on failure.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs, const std::string& what);

}  // namespace mvem
