// SPDX-License-Identifier: Apache-2.0
#include "mvem/poly.hpp"

#include "mvem/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mvem {

int monomial_index(const MultiIndex3& alpha) {
  const int d = alpha.degree();
  const int r = d - alpha[0];
  return d * (d + 1) * (d + 2) / 6 + r * (r + 1) / 2 + (r - alpha[1]);
}

int monomial_index(const MultiIndex2& beta) {
  const int d = beta.degree();
  return d * (d + 1) / 2 + (d - beta[0]);
}

std::vector<MultiIndex3> graded_indices3(int k) {
  std::vector<MultiIndex3> out;
  out.reserve(dim_pk(k));
  for (int d = 0; d <= k; ++d)
    for (int a1 = d; a1 >= 0; --a1)
      for (int a2 = d - a1; a2 >= 0; --a2) out.push_back({{a1, a2, d - a1 - a2}});
  return out;
}

std::vector<MultiIndex2> graded_indices2(int k) {
  std::vector<MultiIndex2> out;
  out.reserve(dim_pk(k, 2));
  for (int d = 0; d <= k; ++d)
    for (int b1 = d; b1 >= 0; --b1) out.push_back({{b1, d - b1}});
  return out;
}

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double eval_scaled(const MultiIndex3& alpha, const Vec3& s) {
  return ipow(s.x(), alpha[0]) * ipow(s.y(), alpha[1]) * ipow(s.z(), alpha[2]);
}

}  // namespace

double eval_monomial(const MultiIndex3& alpha, const Vec3& point, const Vec3& center, double h) {
  return eval_scaled(alpha, (point - center) / h);
}

MonomialBasis3::MonomialBasis3(int degree, const Vec3& center, double h)
    : degree_(degree), center_(center), h_(h), indices_(graded_indices3(degree)) {
  if (degree < 0 || degree > 15) throw ConfigError("monomial basis degree out of range 0..15");
}

void MonomialBasis3::evaluate(const Vec3& x, std::span<double> values) const {
  const Vec3 s = scaled(x);
  // powers[axis][p] = s_axis^p
  std::array<std::array<double, 16>, 3> powers{};
  for (int axis = 0; axis < 3; ++axis) {
    powers[axis][0] = 1.0;
    for (int p = 1; p <= degree_; ++p) powers[axis][p] = powers[axis][p - 1] * s[axis];
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const auto& a = indices_[i];
    values[i] = powers[0][a[0]] * powers[1][a[1]] * powers[2][a[2]];
  }
}

MonomialBasis2::MonomialBasis2(int degree, const Vec3& origin, const Vec3& axis1, const Vec3& axis2, double h)
    : degree_(degree), origin_(origin), axis1_(axis1), axis2_(axis2), h_(h), indices_(graded_indices2(degree)) {
  if (degree < 0 || degree > 15) throw ConfigError("monomial basis degree out of range 0..15");
}

MonomialBasis2::MonomialBasis2(int degree, const FaceGeometry& face)
    : MonomialBasis2(degree, face.centroid, face.axis1, face.axis2, face.diameter) {}

std::array<double, 2> MonomialBasis2::local(const Vec3& x) const {
  const Vec3 d = x - origin_;
  return {d.dot(axis1_) / h_, d.dot(axis2_) / h_};
}

void MonomialBasis2::evaluate(const Vec3& x, std::span<double> values) const {
  const auto s = local(x);
  std::array<std::array<double, 16>, 2> powers{};
  for (int axis = 0; axis < 2; ++axis) {
    powers[axis][0] = 1.0;
    for (int p = 1; p <= degree_; ++p) powers[axis][p] = powers[axis][p - 1] * s[axis];
  }
  for (std::size_t i = 0; i < indices_.size(); ++i)
    values[i] = powers[0][indices_[i][0]] * powers[1][indices_[i][1]];
}

std::array<std::optional<ScaledTerm>, 3> grad_monomial(const MultiIndex3& alpha, double h) {
  std::array<std::optional<ScaledTerm>, 3> g;
  for (int i = 0; i < 3; ++i)
    if (alpha[i] > 0) g[i] = ScaledTerm{alpha[i] / h, alpha.shifted(i, -1)};
  return g;
}

Vec3 eval_vector_monomial(const VectorMonomial& m, const Vec3& scaled_point) {
  Vec3 v = Vec3::Zero();
  v[m.component] = eval_scaled(m.index, scaled_point);
  return v;
}

Vec3 eval_cross_with_position(const VectorMonomial& m, const Vec3& scaled_point) {
  return scaled_point.cross(eval_vector_monomial(m, scaled_point));
}

Vec3 Decomposition::evaluate(const Vec3& point, const Vec3& center, double h) const {
  const Vec3 s = (point - center) / h;
  Vec3 v = Vec3::Zero();
  for (const auto& term : gradient) {
    const auto grad = grad_monomial(term.index, h);
    for (int i = 0; i < 3; ++i)
      if (grad[i]) v[i] += term.coeff * grad[i]->coeff * eval_scaled(grad[i]->index, s);
  }
  for (const auto& term : cross) v += term.coeff * eval_cross_with_position(term.generator, s);
  return v;
}

Decomposition decompose_vector_monomial(const VectorMonomial& m, double h) {
  const MultiIndex3& a = m.index;
  const double denom = a.degree() + 1.0;
  Decomposition d;
  d.gradient.push_back({h / denom, a.shifted(m.component, 1)});
  auto add_cross = [&](double coeff, int component, int axis) {
    if (coeff != 0.0) d.cross.push_back({coeff / denom, {component, a.shifted(axis, -1)}});
  };
  switch (m.component) {
    case 0:  // -a3 m_I x (0, m_{a-e3}, 0) + a2 m_I x (0, 0, m_{a-e2})
      add_cross(-a[2], 1, 2);
      add_cross(a[1], 2, 1);
      break;
    case 1:  // +a3 m_I x (m_{a-e3}, 0, 0) - a1 m_I x (0, 0, m_{a-e1})
      add_cross(a[2], 0, 2);
      add_cross(-a[0], 2, 0);
      break;
    case 2:  // +a1 m_I x (0, m_{a-e1}, 0) - a2 m_I x (m_{a-e2}, 0, 0)
      add_cross(a[0], 1, 0);
      add_cross(-a[1], 0, 1);
      break;
    default:
      throw ConfigError("vector monomial component must be 0, 1 or 2");
  }
  return d;
}

std::array<CrossTerm, 2> rewrite_first_component(const MultiIndex3& alpha) {
  if (alpha[0] < 1) throw ConfigError("rewrite_first_component needs alpha_1 >= 1");
  const MultiIndex3 base = alpha.shifted(0, -1);
  return {CrossTerm{-1.0, {1, base.shifted(1, 1)}}, CrossTerm{-1.0, {2, base.shifted(2, 1)}}};
}

std::vector<VectorMonomial> gperp_generators(int k) {
  if (k < 1) throw ConfigError("gperp_generators needs k >= 1");
  const auto indices = graded_indices3(k - 1);
  std::vector<VectorMonomial> out;
  out.reserve(dim_gperp(k));
  for (const auto& a : indices)
    if (a[0] == 0) out.push_back({0, a});
  for (int component : {1, 2})
    for (const auto& a : indices) out.push_back({component, a});
  return out;
}

Polynomial::Polynomial(int degree, std::vector<double> coeffs) : degree_(degree), coeffs_(std::move(coeffs)) {
  if (static_cast<int>(coeffs_.size()) != dim_pk(degree)) throw ConfigError("polynomial coefficient count mismatch");
}

Polynomial Polynomial::monomial(const MultiIndex3& alpha, double coeff) {
  Polynomial p(alpha.degree());
  p[monomial_index(alpha)] = coeff;
  return p;
}

double Polynomial::evaluate(const Vec3& scaled_point) const {
  const auto indices = graded_indices3(degree_);
  double sum = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i)
    if (coeffs_[i] != 0.0) sum += coeffs_[i] * eval_scaled(indices[i], scaled_point);
  return sum;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r(std::max(degree_, o.degree_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) r.coeffs_[i] += coeffs_[i];
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) r.coeffs_[i] += o.coeffs_[i];
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(degree_ + o.degree_);
  const auto ia = graded_indices3(degree_);
  const auto ib = graded_indices3(o.degree_);
  for (std::size_t i = 0; i < ia.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    for (std::size_t j = 0; j < ib.size(); ++j)
      r.coeffs_[monomial_index(ia[i] + ib[j])] += coeffs_[i] * o.coeffs_[j];
  }
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r = *this;
  for (auto& c : r.coeffs_) c *= s;
  return r;
}

VectorPolynomial radial_lift(const Polynomial& p) {
  return {Polynomial::monomial({{1, 0, 0}}) * p, Polynomial::monomial({{0, 1, 0}}) * p,
          Polynomial::monomial({{0, 0, 1}}) * p};
}

VectorPolynomial cross_with_position(const VectorPolynomial& v) {
  const Polynomial x = Polynomial::monomial({{1, 0, 0}});
  const Polynomial y = Polynomial::monomial({{0, 1, 0}});
  const Polynomial z = Polynomial::monomial({{0, 0, 1}});
  return {y * v[2] + z * v[1] * -1.0, z * v[0] + x * v[2] * -1.0, x * v[1] + y * v[0] * -1.0};
}

bool in_cross_kernel(const VectorPolynomial& v, int samples, unsigned seed, double tol) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < samples; ++i) {
    const Vec3 s(u(rng), u(rng), u(rng));
    const Vec3 value(v[0].evaluate(s), v[1].evaluate(s), v[2].evaluate(s));
    const Vec3 cross = s.cross(value);
    const double scale = std::max(1.0, value.norm() * s.norm());
    if (cross.norm() > tol * scale) return false;
  }
  return true;
}

}  // namespace mvem
