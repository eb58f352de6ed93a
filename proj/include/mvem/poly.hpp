// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mvem/mesh.hpp"

#include <array>
#include <compare>
#include <optional>
#include <span>
#include <vector>

namespace mvem {

/// Exponents (a1, a2, a3) of a 3D monomial.
struct MultiIndex3 {
  std::array<int, 3> a{0, 0, 0};

  int degree() const { return a[0] + a[1] + a[2]; }
  bool valid() const { return a[0] >= 0 && a[1] >= 0 && a[2] >= 0; }
  int operator[](int i) const { return a[i]; }
  MultiIndex3 shifted(int axis, int delta) const {
    MultiIndex3 r = *this;
    r.a[axis] += delta;
    return r;
  }
  MultiIndex3 operator+(const MultiIndex3& o) const {
    return {{a[0] + o.a[0], a[1] + o.a[1], a[2] + o.a[2]}};
  }
  auto operator<=>(const MultiIndex3&) const = default;
};

/// Exponents (b1, b2) of a face monomial in the face frame.
struct MultiIndex2 {
  std::array<int, 2> b{0, 0};

  int degree() const { return b[0] + b[1]; }
  int operator[](int i) const { return b[i]; }
  auto operator<=>(const MultiIndex2&) const = default;
};

/// dim P_k in 2 or 3 variables; 0 for k < 0.
constexpr int dim_pk(int k, int ambient = 3) {
  if (k < 0) return 0;
  return ambient == 2 ? (k + 1) * (k + 2) / 2 : (k + 1) * (k + 2) * (k + 3) / 6;
}

/// Dimension of the complement of the gradients in [P_k]^3, (2k^3 + 9k^2 + 7k) / 6.
constexpr int dim_gperp(int k) { return (2 * k * k * k + 9 * k * k + 7 * k) / 6; }

// Graded-lexicographic numbering: by degree, then a1 descending, then a2
// descending. M_j is a prefix of M_k for j <= k.
int monomial_index(const MultiIndex3& alpha);
int monomial_index(const MultiIndex2& beta);
std::vector<MultiIndex3> graded_indices3(int k);
std::vector<MultiIndex2> graded_indices2(int k);

/// m_alpha(x) = ((x - center) / h)^alpha.
double eval_monomial(const MultiIndex3& alpha, const Vec3& point, const Vec3& center, double h);

/// Scaled monomial basis M_k(P) anchored at (center, h).
class MonomialBasis3 {
 public:
  MonomialBasis3(int degree, const Vec3& center, double h);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const Vec3& center() const { return center_; }
  double h() const { return h_; }
  std::span<const MultiIndex3> indices() const { return indices_; }

  Vec3 scaled(const Vec3& x) const { return (x - center_) / h_; }
  /// Values of every basis monomial at x, in basis order.
  void evaluate(const Vec3& x, std::span<double> values) const;

 private:
  int degree_;
  Vec3 center_;
  double h_;
  std::vector<MultiIndex3> indices_;
};

/// Face monomials M_k(f): ((x~ - x~_f) / h_f)^beta in the face frame.
class MonomialBasis2 {
 public:
  MonomialBasis2(int degree, const Vec3& origin, const Vec3& axis1, const Vec3& axis2, double h);
  MonomialBasis2(int degree, const FaceGeometry& face);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(indices_.size()); }
  std::span<const MultiIndex2> indices() const { return indices_; }

  /// Scaled in-plane coordinates of a 3D point.
  std::array<double, 2> local(const Vec3& x) const;
  void evaluate(const Vec3& x, std::span<double> values) const;

 private:
  int degree_;
  Vec3 origin_, axis1_, axis2_;
  double h_;
  std::vector<MultiIndex2> indices_;
};

/// coefficient * m_index.
struct ScaledTerm {
  double coeff = 0.0;
  MultiIndex3 index;
};

/// Gradient of m_alpha: component i is (alpha_i / h) m_{alpha - e_i}, empty
/// when alpha_i = 0.
std::array<std::optional<ScaledTerm>, 3> grad_monomial(const MultiIndex3& alpha, double h);

/// Vector with m_index in slot `component` (0, 1, 2) and zeros elsewhere.
struct VectorMonomial {
  int component = 0;
  MultiIndex3 index;
  auto operator<=>(const VectorMonomial&) const = default;
};

Vec3 eval_vector_monomial(const VectorMonomial& m, const Vec3& scaled_point);

/// m_I x m at a scaled point, where m_I is the scaled position vector.
Vec3 eval_cross_with_position(const VectorMonomial& m, const Vec3& scaled_point);

/// coefficient * (m_I x generator).
struct CrossTerm {
  double coeff = 0.0;
  VectorMonomial generator;
};

/// Splitting of a vector monomial into a gradient part and a part in the
/// image of m_I x (.): sum gradient[i].coeff * grad m_{gradient[i].index} +
/// sum cross[j].coeff * (m_I x cross[j].generator).
struct Decomposition {
  std::vector<ScaledTerm> gradient;
  std::vector<CrossTerm> cross;

  /// Evaluates the right-hand side at a physical point for anchor (center, h).
  Vec3 evaluate(const Vec3& point, const Vec3& center, double h) const;
};

/// Three-term splitting of a single-component vector monomial. The gradient
/// coefficient is h / (|alpha| + 1); cross coefficients are -+alpha_i / (|alpha| + 1)
/// with terms of zero coefficient omitted.
Decomposition decompose_vector_monomial(const VectorMonomial& m, double h);

/// m_I x (m_alpha, 0, 0) = -m_I x (0, m_beta, 0) - m_I x (0, 0, m_gamma) with
/// beta = alpha - e1 + e2 and gamma = alpha - e1 + e3. Requires alpha_1 >= 1.
std::array<CrossTerm, 2> rewrite_first_component(const MultiIndex3& alpha);

/// Generators whose images under m_I x (.) form a basis of the gradient
/// complement in [P_k]^3: first-component monomials with alpha_1 = 0 and
/// |alpha| <= k - 1 (the constant included), then second- and third-component
/// monomials over all of M_{k-1}. Size dim_gperp(k).
std::vector<VectorMonomial> gperp_generators(int k);

/// Polynomial in scaled coordinates, stored on the graded-lex basis of M_degree.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int degree) : degree_(degree), coeffs_(dim_pk(degree), 0.0) {}
  Polynomial(int degree, std::vector<double> coeffs);
  static Polynomial monomial(const MultiIndex3& alpha, double coeff = 1.0);

  int degree() const { return degree_; }
  std::span<const double> coeffs() const { return coeffs_; }
  double& operator[](int i) { return coeffs_[i]; }
  double operator[](int i) const { return coeffs_[i]; }

  double evaluate(const Vec3& scaled_point) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;

 private:
  int degree_ = 0;
  std::vector<double> coeffs_{0.0};
};

using VectorPolynomial = std::array<Polynomial, 3>;

/// m_I * p, the radial lift of a scalar polynomial.
VectorPolynomial radial_lift(const Polynomial& p);

/// m_I x v.
VectorPolynomial cross_with_position(const VectorPolynomial& v);

/// True when m_I x v vanishes identically, decided by evaluation at `samples`
/// random points of [-1, 1]^3 against tol times the size of v there.
bool in_cross_kernel(const VectorPolynomial& v, int samples = 50, unsigned seed = 1234, double tol = 1e-13);

}  // namespace mvem
