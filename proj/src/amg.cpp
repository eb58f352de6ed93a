// SPDX-License-Identifier: Apache-2.0
#include "mvem/amg.hpp"

#include "mvem/error.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace mvem {

namespace {

using Matrix = SmoothedAggregationAmg::Matrix;

// Greedy aggregation on the strength graph; returns aggregate id per row.
std::vector<int> aggregate(const Matrix& a, double theta, int& num_aggregates) {
  const int n = static_cast<int>(a.rows());
  const Eigen::VectorXd d = a.diagonal();
  std::vector<std::vector<int>> strong(n);
  for (int j = 0; j < n; ++j)
    for (Matrix::InnerIterator it(a, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i != j && std::abs(it.value()) >= theta * std::sqrt(std::abs(d[i] * d[j]))) strong[j].push_back(i);
    }
  std::vector<int> agg(n, -1);
  int count = 0;
  // pass 1: seeds whose whole strong neighbourhood is still free
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    bool free = true;
    for (int j : strong[i])
      if (agg[j] >= 0) {
        free = false;
        break;
      }
    if (!free) continue;
    agg[i] = count;
    for (int j : strong[i]) agg[j] = count;
    ++count;
  }
  // pass 2: attach leftovers to a neighbouring aggregate
  std::vector<int> pending = agg;
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    for (int j : strong[i])
      if (agg[j] >= 0) {
        pending[i] = agg[j];
        break;
      }
  }
  agg = pending;
  // pass 3: whatever is left becomes singleton-ish aggregates
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    agg[i] = count;
    for (int j : strong[i])
      if (agg[j] < 0) agg[j] = count;
    ++count;
  }
  num_aggregates = count;
  return agg;
}

double spectral_radius_dinv_a(const Matrix& a, const Eigen::VectorXd& dinv) {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(a.rows(), 1.0, 2.0);
  double rho = 1.0;
  for (int it = 0; it < 20; ++it) {
    Eigen::VectorXd y = dinv.asDiagonal() * (a * x);
    rho = y.norm() / x.norm();
    x = y / y.norm();
  }
  return rho;
}

}  // namespace

struct SmoothedAggregationAmg::Impl {
  struct Level {
    Matrix a;
    Matrix p;  // to this level from the next coarser one
    Eigen::VectorXd dinv;
    double omega = 0.0;
  };
  std::vector<Level> levels;
  Eigen::SimplicialLDLT<Matrix> coarse;
  int steps = 2;

  void smooth(const Level& l, const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
    for (int s = 0; s < steps; ++s) x += l.omega * l.dinv.cwiseProduct(b - l.a * x);
  }

  void cycle(std::size_t lev, const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
    if (lev + 1 == levels.size()) {
      x = coarse.solve(b);
      return;
    }
    const Level& l = levels[lev];
    x.setZero(b.size());
    smooth(l, b, x);
    const Eigen::VectorXd rc = l.p.transpose() * (b - l.a * x);
    Eigen::VectorXd xc;
    cycle(lev + 1, rc, xc);
    x += l.p * xc;
    smooth(l, b, x);
  }
};

SmoothedAggregationAmg::SmoothedAggregationAmg(const Matrix& a, const AmgOptions& options)
    : impl_(std::make_unique<Impl>()) {
  impl_->steps = options.smoothing_steps;
  Matrix current = a;
  for (int lev = 0;; ++lev) {
    Impl::Level level;
    level.a = current;
    level.dinv = current.diagonal().cwiseInverse();
    if (!level.dinv.allFinite() || (current.diagonal().array() <= 0.0).any())
      throw IllConditionedError("multigrid: non-positive diagonal entry");
    const bool last = current.rows() <= options.coarse_size || lev + 1 >= options.max_levels;
    if (last) {
      impl_->levels.push_back(std::move(level));
      break;
    }
    const double rho = spectral_radius_dinv_a(current, level.dinv);
    level.omega = 4.0 / (3.0 * rho);
    int nagg = 0;
    const auto agg = aggregate(current, options.strength_threshold, nagg);
    if (nagg >= current.rows()) {  // no coarsening possible
      impl_->levels.push_back(std::move(level));
      break;
    }
    // tentative prolongator: normalized indicator of each aggregate
    std::vector<int> size(nagg, 0);
    for (int g : agg) ++size[g];
    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(agg.size());
    for (std::size_t i = 0; i < agg.size(); ++i)
      t.emplace_back(static_cast<int>(i), agg[i], 1.0 / std::sqrt(static_cast<double>(size[agg[i]])));
    Matrix tent(current.rows(), nagg);
    tent.setFromTriplets(t.begin(), t.end());
    Matrix smoothed = tent - Matrix(level.omega * level.dinv.asDiagonal() * current) * tent;
    smoothed.prune(0.0);
    level.p = smoothed;
    Matrix coarse = Matrix(smoothed.transpose()) * current * smoothed;
    coarse.prune(0.0);
    impl_->levels.push_back(std::move(level));
    current = coarse;
  }
  impl_->coarse.compute(impl_->levels.back().a);
  if (impl_->coarse.info() != Eigen::Success) throw IllConditionedError("multigrid: coarse factorization failed");
}

SmoothedAggregationAmg::~SmoothedAggregationAmg() = default;
SmoothedAggregationAmg::SmoothedAggregationAmg(SmoothedAggregationAmg&&) noexcept = default;
SmoothedAggregationAmg& SmoothedAggregationAmg::operator=(SmoothedAggregationAmg&&) noexcept = default;

int SmoothedAggregationAmg::num_levels() const { return static_cast<int>(impl_->levels.size()); }

std::vector<int> SmoothedAggregationAmg::level_sizes() const {
  std::vector<int> out;
  for (const auto& l : impl_->levels) out.push_back(static_cast<int>(l.a.rows()));
  return out;
}

void SmoothedAggregationAmg::apply(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const { impl_->cycle(0, rhs, x); }

}  // namespace mvem
