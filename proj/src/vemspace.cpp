// SPDX-License-Identifier: Apache-2.0
#include "mvem/vemspace.hpp"

#include "mvem/error.hpp"
#include "mvem/parallel.hpp"
#include "mvem/quadrature.hpp"

#include <Eigen/Cholesky>

#include <map>
#include <string>

namespace mvem {

void check_order(int k) {
  if (k < min_order || k > max_order)
    throw ConfigError("unsupported order k = " + std::to_string(k) + " (supported: 1..4)");
}

DofLayout::DofLayout(int k, int faces, int cells)
    : order(k),
      num_faces(faces),
      num_cells(cells),
      n_face(dim_pk(k, 2)),
      n_grad(dim_pk(k - 1) - 1),
      n_cross(dim_gperp(k)),
      n_q(dim_pk(k - 1)) {
  check_order(k);
}

DofCounts dof_counts(int k, long long num_faces, long long num_cells) {
  check_order(k);
  DofCounts c;
  c.velocity = num_faces * dim_pk(k, 2) + num_cells * (dim_pk(k - 1) - 1 + dim_gperp(k));
  c.pressure = num_cells * dim_pk(k - 1);
  c.total = c.velocity + c.pressure + 1;
  return c;
}

DofCounts dof_counts(int k, const PolyMesh& mesh) { return dof_counts(k, mesh.num_faces(), mesh.num_cells()); }

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs, const std::string& what) {
  // symmetric diagonal equilibration before the pivoted factorization
  const Eigen::VectorXd d = m.diagonal();
  if (!((d.array() > 0.0).all()))
    throw IllConditionedError(what + ": non-positive diagonal entry");
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = s.asDiagonal() * m * s.asDiagonal();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > 1e-15))
    throw IllConditionedError(what + ": factorization failed (rcond " + std::to_string(ldlt.rcond()) + ")");
  return s.asDiagonal() * ldlt.solve(s.asDiagonal() * rhs);
}

namespace {

// rows: quadrature points, columns: basis functions
template <class Basis>
Eigen::MatrixXd basis_table(const Basis& basis, const QuadratureRule& rule) {
  Eigen::MatrixXd table(rule.size(), basis.size());
  std::vector<double> values(basis.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate(rule.points[q], values);
    for (int j = 0; j < basis.size(); ++j) table(q, j) = values[j];
  }
  return table;
}

Eigen::Map<const Eigen::VectorXd> weights_of(const QuadratureRule& rule) {
  return {rule.weights.data(), static_cast<Eigen::Index>(rule.weights.size())};
}

std::string cell_label(int cell) { return "cell " + std::to_string(cell); }
std::string face_label(int face) { return "face " + std::to_string(face); }

}  // namespace

ElementOperators build_element(const PreparedMesh& mesh, const DofLayout& layout, int cell) {
  const int k = layout.order;
  const auto& geo = mesh.geometry.cells[cell];
  const auto faces = mesh.topology.cell(cell);
  const int nf = static_cast<int>(faces.size());
  const int n_face = layout.n_face;
  const int nk = dim_pk(k);
  const int nk1 = dim_pk(k - 1);
  const int nk2 = dim_pk(k + 1);
  const int grad_offset = nf * n_face;
  const int cross_offset = grad_offset + layout.n_grad;
  const int n_loc = cross_offset + layout.n_cross;
  const double vol = geo.volume;
  const double h = geo.diameter;

  ElementOperators ops;
  ops.cell = cell;
  ops.order = k;
  ops.volume = vol;
  ops.h = h;
  ops.center = geo.centroid;
  ops.global_dofs.resize(n_loc);
  for (int j = 0; j < nf; ++j)
    for (int i = 0; i < n_face; ++i) ops.global_dofs[j * n_face + i] = layout.face_dof(faces[j].face, i);
  for (int i = 0; i < layout.n_internal(); ++i) ops.global_dofs[grad_offset + i] = layout.internal_dof(cell, i);

  // Gram matrix over M_{k+1}(P); every cell integral below is read from it.
  const MonomialBasis3 basis(k + 1, geo.centroid, h);
  const auto idx = basis.indices();
  const auto rule = cell_rule(mesh, cell, 2 * k + 2);
  const Eigen::MatrixXd phi = basis_table(basis, rule);
  const Eigen::MatrixXd gram = phi.transpose() * weights_of(rule).asDiagonal() * phi;
  ops.mass = gram.topLeftCorner(nk, nk);

  // boundary[alpha] = int_{dP} (v . n_out) m_alpha as a row over local dofs
  Eigen::MatrixXd boundary = Eigen::MatrixXd::Zero(nk2, n_loc);
  std::vector<Eigen::MatrixXd> face_moment(nf);  // Ef: n_face x nk2
  ops.face_normal.resize(nf);
  for (int j = 0; j < nf; ++j) {
    const int f = faces[j].face;
    const auto& fg = mesh.geometry.faces[f];
    const MonomialBasis2 fbasis(k, fg);
    const auto frule = face_rule(mesh, f, 2 * k + 2);
    const Eigen::MatrixXd psi = basis_table(fbasis, frule);
    const Eigen::MatrixXd cphi = basis_table(basis, frule);
    const auto w = weights_of(frule);
    const Eigen::MatrixXd fmass = psi.transpose() * w.asDiagonal() * psi;
    face_moment[j] = psi.transpose() * w.asDiagonal() * cphi;
    ops.face_normal[j] =
        solve_spd(fmass, fg.area * Eigen::MatrixXd::Identity(n_face, n_face), face_label(f) + " mass matrix");
    boundary.middleCols(j * n_face, n_face) = faces[j].sign * face_moment[j].transpose() * ops.face_normal[j];
  }

  auto grad_dof = [&](const MultiIndex3& a) { return grad_offset + monomial_index(a) - 1; };

  // divergence: int div v m_a = -int v . grad m_a + boundary[a]
  {
    Eigen::MatrixXd rhs = boundary.topRows(nk1);
    for (int a = 1; a < nk1; ++a) rhs(a, grad_dof(idx[a])) -= vol / h;
    ops.divergence = solve_spd(gram.topLeftCorner(nk1, nk1), rhs, cell_label(cell) + " mass matrix");
  }

  // int v . grad m_b for |b| <= k + 1
  auto grad_moment = [&](const MultiIndex3& b) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n_loc);
    const int bi = monomial_index(b);
    if (b.degree() == 0) return row;
    if (b.degree() <= k - 1) {
      row(grad_dof(b)) = vol / h;
      return row;
    }
    row = boundary.row(bi) - gram.col(bi).head(nk1).transpose() * ops.divergence;
    return row;
  };

  const auto gens = gperp_generators(k);
  std::map<VectorMonomial, int> gen_slot;
  for (std::size_t i = 0; i < gens.size(); ++i) gen_slot[gens[i]] = cross_offset + static_cast<int>(i);

  // int v . (m_I x g)
  auto cross_moment = [&](const VectorMonomial& g) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n_loc);
    if (auto it = gen_slot.find(g); it != gen_slot.end()) {
      row(it->second) = vol;
      return row;
    }
    for (const auto& t : rewrite_first_component(g.index)) row(gen_slot.at(t.generator)) += t.coeff * vol;
    return row;
  };

  Eigen::MatrixXd proj_rhs(3 * nk, n_loc);
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < nk; ++a) {
      const auto d = decompose_vector_monomial({c, idx[a]}, h);
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n_loc);
      for (const auto& t : d.gradient) row += t.coeff * grad_moment(t.index);
      for (const auto& t : d.cross) row += t.coeff * cross_moment(t.generator);
      proj_rhs.row(c * nk + a) = row;
    }
  ops.projection.resize(3 * nk, n_loc);
  for (int c = 0; c < 3; ++c)
    ops.projection.middleRows(c * nk, nk) =
        solve_spd(ops.mass, proj_rhs.middleRows(c * nk, nk), cell_label(cell) + " vector mass matrix");

  // dof functionals applied to each vector monomial (c, a)
  ops.monomial_dofs = Eigen::MatrixXd::Zero(n_loc, 3 * nk);
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < nk; ++a) {
      const int col = c * nk + a;
      for (int j = 0; j < nf; ++j) {
        const auto& fg = mesh.geometry.faces[faces[j].face];
        ops.monomial_dofs.block(j * n_face, col, n_face, 1) = (fg.normal[c] / fg.area) * face_moment[j].col(a);
      }
      for (int g = 1; g < nk1; ++g) {
        const auto& gam = idx[g];
        if (gam[c] > 0) ops.monomial_dofs(grad_dof(gam), col) = gam[c] / vol * gram(a, monomial_index(gam.shifted(c, -1)));
      }
      for (std::size_t i = 0; i < gens.size(); ++i) {
        // component c of m_I x (e_cp m_gam) is sum_s eps(c, s, cp) m_{gam + e_s}
        const int cp = gens[i].component;
        const auto& gam = gens[i].index;
        double value = 0.0;
        for (int s = 0; s < 3; ++s) {
          if (s == c || s == cp || c == cp) continue;
          const double eps = ((c - s + 3) % 3 == 2) ? 1.0 : -1.0;  // eps(c, s, cp) for distinct indices
          value += eps * gram(a, monomial_index(gam.shifted(s, 1)));
        }
        ops.monomial_dofs(cross_offset + static_cast<int>(i), col) = value / vol;
      }
    }
  return ops;
}

std::vector<ElementOperators> build_elements(const PreparedMesh& mesh, const DofLayout& layout, int threads) {
  std::vector<ElementOperators> out(mesh.num_cells());
  parallel_for(mesh.num_cells(), threads, [&](int begin, int end) {
    for (int c = begin; c < end; ++c) out[c] = build_element(mesh, layout, c);
  });
  return out;
}

Eigen::VectorXd face_normal_poly(const ElementOperators& ops, int local_face,
                                 const Eigen::Ref<const Eigen::VectorXd>& face_dofs) {
  return ops.face_normal.at(local_face) * face_dofs;
}

namespace {

Eigen::VectorXd face_moments(const PreparedMesh& mesh, const DofLayout& layout, int f, const VectorField& v,
                             int degree) {
  const auto& fg = mesh.geometry.faces[f];
  const MonomialBasis2 fbasis(layout.order, fg);
  const auto rule = face_rule(mesh, f, degree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_face);
  std::vector<double> psi(fbasis.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    fbasis.evaluate(rule.points[q], psi);
    const double vn = v(rule.points[q]).dot(fg.normal) * rule.weights[q];
    for (int i = 0; i < layout.n_face; ++i) out[i] += vn * psi[i];
  }
  return out / fg.area;
}

Eigen::VectorXd internal_moments(const PreparedMesh& mesh, const DofLayout& layout, int cell, const VectorField& v,
                                 int degree) {
  const int k = layout.order;
  const auto& geo = mesh.geometry.cells[cell];
  const MonomialBasis3 basis(k, geo.centroid, geo.diameter);
  const auto idx = basis.indices();
  const auto gens = gperp_generators(k);
  const auto rule = cell_rule(mesh, cell, degree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_internal());
  std::vector<double> m(basis.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec3& x = rule.points[q];
    const double w = rule.weights[q];
    const Vec3 val = v(x);
    basis.evaluate(x, m);
    // h v . grad m_a = sum_i a_i v_i m_{a - e_i}
    for (int a = 1; a < layout.n_q; ++a)
      for (int i = 0; i < 3; ++i)
        if (idx[a][i] > 0) out[a - 1] += w * idx[a][i] * val[i] * m[monomial_index(idx[a].shifted(i, -1))];
    const Vec3 s = basis.scaled(x);
    for (std::size_t g = 0; g < gens.size(); ++g)
      out[layout.n_grad + g] += w * val.dot(eval_cross_with_position(gens[g], s));
  }
  return out / geo.volume;
}

}  // namespace

Eigen::VectorXd interpolate_velocity(const PreparedMesh& mesh, const DofLayout& layout, int cell, const VectorField& v,
                                     int degree) {
  const auto faces = mesh.topology.cell(cell);
  const int nf = static_cast<int>(faces.size());
  Eigen::VectorXd out(nf * layout.n_face + layout.n_internal());
  for (int j = 0; j < nf; ++j) out.segment(j * layout.n_face, layout.n_face) = face_moments(mesh, layout, faces[j].face, v, degree);
  out.tail(layout.n_internal()) = internal_moments(mesh, layout, cell, v, degree);
  return out;
}

Eigen::VectorXd interpolate_velocity(const PreparedMesh& mesh, const DofLayout& layout, const VectorField& v,
                                     int degree) {
  Eigen::VectorXd out(layout.velocity_dofs());
  for (int f = 0; f < layout.num_faces; ++f)
    out.segment(layout.face_dof(f, 0), layout.n_face) = face_moments(mesh, layout, f, v, degree);
  for (int c = 0; c < layout.num_cells; ++c)
    out.segment(layout.internal_dof(c, 0), layout.n_internal()) = internal_moments(mesh, layout, c, v, degree);
  return out;
}

Eigen::VectorXd interpolate_pressure(const PreparedMesh& mesh, const DofLayout& layout, int cell, const ScalarField& q,
                                     int degree) {
  const auto& geo = mesh.geometry.cells[cell];
  const MonomialBasis3 basis(layout.order - 1, geo.centroid, geo.diameter);
  const auto rule = cell_rule(mesh, cell, degree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_q);
  std::vector<double> m(basis.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    basis.evaluate(rule.points[i], m);
    const double wq = rule.weights[i] * q(rule.points[i]);
    for (int a = 0; a < layout.n_q; ++a) out[a] += wq * m[a];
  }
  return out / geo.volume;
}

Eigen::VectorXd interpolate_pressure(const PreparedMesh& mesh, const DofLayout& layout, const ScalarField& q,
                                     int degree) {
  Eigen::VectorXd out(layout.pressure_dofs());
  for (int c = 0; c < layout.num_cells; ++c)
    out.segment(layout.pressure_dof(c, 0), layout.n_q) = interpolate_pressure(mesh, layout, c, q, degree);
  return out;
}

Eigen::VectorXd pressure_coefficients(const ElementOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& dofs) {
  const int nq = dim_pk(ops.order - 1);
  return solve_spd(ops.mass.topLeftCorner(nq, nq), ops.volume * dofs, cell_label(ops.cell) + " mass matrix");
}

double pressure_eval(const ElementOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& dofs, const Vec3& point) {
  const Eigen::VectorXd coeffs = pressure_coefficients(ops, dofs);
  const MonomialBasis3 basis(ops.order - 1, ops.center, ops.h);
  std::vector<double> m(basis.size());
  basis.evaluate(point, m);
  return Eigen::Map<const Eigen::VectorXd>(m.data(), basis.size()).dot(coeffs);
}

Vec3 projection_eval(const ElementOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& local_dofs,
                     const Vec3& point) {
  const Eigen::VectorXd coeffs = ops.projection * local_dofs;
  const MonomialBasis3 basis(ops.order, ops.center, ops.h);
  std::vector<double> m(basis.size());
  basis.evaluate(point, m);
  const Eigen::Map<const Eigen::VectorXd> mv(m.data(), basis.size());
  const int nk = basis.size();
  return {coeffs.segment(0, nk).dot(mv), coeffs.segment(nk, nk).dot(mv), coeffs.segment(2 * nk, nk).dot(mv)};
}

}  // namespace mvem
