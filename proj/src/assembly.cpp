// SPDX-License-Identifier: Apache-2.0
#include "mvem/assembly.hpp"

#include "mvem/error.hpp"
#include "mvem/parallel.hpp"
#include "mvem/quadrature.hpp"

#include <unsupported/Eigen/SparseExtra>

#include <cmath>
#include <sstream>

namespace mvem {

FluxField flux_of(VectorField velocity) {
  return [v = std::move(velocity)](const Vec3& x, const Vec3& n) { return v(x).dot(n); };
}

namespace {

Eigen::MatrixXd vector_mass(const ElementOperators& ops) {
  const int nk = ops.num_monomials();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * nk, 3 * nk);
  for (int c = 0; c < 3; ++c) m.block(c * nk, c * nk, nk, nk) = ops.mass;
  return m;
}

}  // namespace

Eigen::MatrixXd local_consistency(const ElementOperators& ops, double nu) {
  const Eigen::MatrixXd a = ops.projection.transpose() * vector_mass(ops) * ops.projection;
  return nu * 0.5 * (a + a.transpose());
}

Eigen::MatrixXd local_stabilization(const ElementOperators& ops, double nu) {
  const int n = ops.num_local();
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n) - ops.monomial_dofs * ops.projection;
  return nu * ops.volume * (r.transpose() * r);
}

Eigen::MatrixXd local_a(const ElementOperators& ops, double nu) {
  return local_consistency(ops, nu) + local_stabilization(ops, nu);
}

Eigen::MatrixXd local_b(const ElementOperators& ops) { return ops.volume * ops.divergence; }

Eigen::VectorXd local_f(const PreparedMesh& mesh, const ElementOperators& ops, const ScalarField& f, int degree) {
  const int nq = dim_pk(ops.order - 1);
  const MonomialBasis3 basis(ops.order - 1, ops.center, ops.h);
  const auto rule = cell_rule(mesh, ops.cell, degree);
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(nq);
  std::vector<double> m(nq);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate(rule.points[q], m);
    const double wf = rule.weights[q] * f(rule.points[q]);
    for (int a = 0; a < nq; ++a) moments[a] += wf * m[a];
  }
  return ops.volume *
         solve_spd(ops.mass.topLeftCorner(nq, nq), moments, "cell " + std::to_string(ops.cell) + " mass matrix");
}

LocalForms local_forms(const PreparedMesh& mesh, const ElementOperators& ops, const CoefficientField& fields) {
  const double nu = fields.nu(ops.center);
  if (!(nu > 0.0)) throw DataError("nu must be positive (cell " + std::to_string(ops.cell) + ")");
  return {local_a(ops, nu), local_b(ops), local_f(mesh, ops, fields.source, interpolation_degree(ops.order))};
}

namespace {

int boundary_sign(const PreparedMesh& mesh, int f) {
  const int c = mesh.topology.face_cells(f)[0];
  for (const auto& cf : mesh.topology.cell(c))
    if (cf.face == f) return cf.sign;
  throw MeshError("face " + std::to_string(f) + " not found in its cell");
}

}  // namespace

Eigen::VectorXd boundary_dofs(const PreparedMesh& mesh, const DofLayout& layout, const FluxField& flux, int degree) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.velocity_dofs());
  for (int f : mesh.topology.boundary_faces()) {
    const auto& fg = mesh.geometry.faces[f];
    const double s = boundary_sign(mesh, f);
    const Vec3 n_out = s * fg.normal;
    const MonomialBasis2 fbasis(layout.order, fg);
    const auto rule = face_rule(mesh, f, degree);
    std::vector<double> psi(fbasis.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      fbasis.evaluate(rule.points[q], psi);
      const double w = rule.weights[q] * s * flux(rule.points[q], n_out) / fg.area;
      for (int i = 0; i < layout.n_face; ++i) out[layout.face_dof(f, i)] += w * psi[i];
    }
  }
  return out;
}

SaddleSystem assemble(const PreparedMesh& mesh, int k, const CoefficientField& fields,
                      const AssemblyOptions& options) {
  SaddleSystem sys;
  sys.layout = DofLayout(k, mesh.num_faces(), mesh.num_cells());
  const auto& layout = sys.layout;
  const int nv = layout.velocity_dofs();
  const int np = layout.pressure_dofs();
  const int qdeg = interpolation_degree(k);

  // data compatibility: int f = int u_N
  {
    double src = 0.0, src_abs = 0.0, flux = 0.0, flux_abs = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto rule = cell_rule(mesh, c, qdeg);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double v = rule.weights[q] * fields.source(rule.points[q]);
        src += v;
        src_abs += std::abs(v);
      }
    }
    for (int f : mesh.topology.boundary_faces()) {
      const Vec3 n_out = boundary_sign(mesh, f) * mesh.geometry.faces[f].normal;
      const auto rule = face_rule(mesh, f, qdeg);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double v = rule.weights[q] * fields.boundary_flux(rule.points[q], n_out);
        flux += v;
        flux_abs += std::abs(v);
      }
    }
    const double scale = std::max({src_abs, flux_abs, 1e-300});
    if (std::abs(src - flux) > options.compatibility_tol * scale) {
      std::ostringstream msg;
      msg << "incompatible data: int f = " << src << " but boundary flux = " << flux;
      throw DataError(msg.str());
    }
  }

  sys.elements = build_elements(mesh, layout, options.threads);
  std::vector<LocalForms> forms(mesh.num_cells());
  parallel_for(mesh.num_cells(), options.threads, [&](int begin, int end) {
    for (int c = begin; c < end; ++c) forms[c] = local_forms(mesh, sys.elements[c], fields);
  });

  // Neumann data
  sys.fixed_values = boundary_dofs(mesh, layout, fields.boundary_flux, qdeg);
  std::vector<char> fixed(nv, 0);
  for (int f : mesh.topology.boundary_faces())
    for (int i = 0; i < layout.n_face; ++i) {
      fixed[layout.face_dof(f, i)] = 1;
      sys.fixed_dofs.push_back(layout.face_dof(f, i));
    }
  std::sort(sys.fixed_dofs.begin(), sys.fixed_dofs.end());

  // serial merge in cell order keeps the summation order independent of threads
  using Triplet = Eigen::Triplet<double, int>;
  std::vector<Triplet> ta, tb;
  std::vector<double> diag(nv, 0.0);
  sys.rhs_u = Eigen::VectorXd::Zero(nv);
  sys.rhs_p = Eigen::VectorXd::Zero(np);
  const Eigen::VectorXd& g = sys.fixed_values;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& ops = sys.elements[c];
    const auto& lf = forms[c];
    // element orientation: face dofs are global-normal moments, so the sign
    // only enters through the face reconstruction inside the operators
    const auto& dofs = ops.global_dofs;
    const int n = ops.num_local();
    for (int j = 0; j < n; ++j) {
      const int col = dofs[j];
      for (int i = 0; i < n; ++i) {
        const int row = dofs[i];
        const double v = lf.a(i, j);
        if (row == col) diag[row] += v;
        if (fixed[col]) {
          if (!fixed[row]) sys.rhs_u[row] -= v * g[col];
        } else if (!fixed[row]) {
          ta.emplace_back(row, col, v);
        }
      }
      for (int a = 0; a < layout.n_q; ++a) {
        const int row = layout.pressure_dof(c, a);
        const double v = -lf.b(a, j);
        if (fixed[col])
          sys.rhs_p[row] -= v * g[col];
        else
          tb.emplace_back(row, col, v);
      }
    }
    for (int a = 0; a < layout.n_q; ++a) sys.rhs_p[layout.pressure_dof(c, a)] -= lf.f[a];
  }
  for (int i : sys.fixed_dofs) {
    ta.emplace_back(i, i, diag[i]);
    sys.rhs_u[i] = diag[i] * g[i];
  }

  sys.A.resize(nv, nv);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.resize(np, nv);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  sys.C.resize(np, np);
  sys.e = Eigen::VectorXd::Zero(np);
  for (int c = 0; c < mesh.num_cells(); ++c) sys.e[layout.pressure_dof(c, 0)] = mesh.geometry.cells[c].volume;
  return sys;
}

SpMat SaddleSystem::monolithic() const {
  const int nv = num_velocity();
  const int np = num_pressure();
  using Triplet = Eigen::Triplet<double, int>;
  std::vector<Triplet> t;
  t.reserve(A.nonZeros() + 2 * B.nonZeros() + C.nonZeros() + 2 * np);
  for (int j = 0; j < A.outerSize(); ++j)
    for (SpMat::InnerIterator it(A, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < B.outerSize(); ++j)
    for (SpMat::InnerIterator it(B, j); it; ++it) {
      t.emplace_back(nv + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), nv + it.row(), it.value());
    }
  for (int j = 0; j < C.outerSize(); ++j)
    for (SpMat::InnerIterator it(C, j); it; ++it) t.emplace_back(nv + it.row(), nv + it.col(), -it.value());
  for (int i = 0; i < np; ++i)
    if (e[i] != 0.0) {
      t.emplace_back(nv + i, nv + np, e[i]);
      t.emplace_back(nv + np, nv + i, e[i]);
    }
  SpMat m(size(), size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::VectorXd SaddleSystem::rhs() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(size());
  r.head(num_velocity()) = rhs_u;
  r.segment(num_velocity(), num_pressure()) = rhs_p;
  return r;
}

void export_triplets(const std::filesystem::path& path, const SpMat& matrix) {
  if (!Eigen::saveMarket(matrix, path.string())) throw Error("cannot write matrix file " + path.string());
}

}  // namespace mvem
