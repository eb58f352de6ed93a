// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Sparse>

#include <memory>
#include <vector>

namespace mvem {

struct AmgOptions {
  double strength_threshold = 0.08;
  int max_levels = 10;
  int coarse_size = 200;
  int smoothing_steps = 2;
};

/// Smoothed-aggregation multigrid for a symmetric positive definite matrix.
/// apply() performs one V-cycle with damped Jacobi smoothing (same number of
/// pre- and post-sweeps, so the cycle is a symmetric operator) and an exact
/// solve on the coarsest level.
class SmoothedAggregationAmg {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  explicit SmoothedAggregationAmg(const Matrix& a, const AmgOptions& options = {});
  ~SmoothedAggregationAmg();
  SmoothedAggregationAmg(SmoothedAggregationAmg&&) noexcept;
  SmoothedAggregationAmg& operator=(SmoothedAggregationAmg&&) noexcept;

  int num_levels() const;
  /// Rows per level, finest first.
  std::vector<int> level_sizes() const;

  void apply(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mvem
