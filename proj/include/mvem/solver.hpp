// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mvem/assembly.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvem {

/// y = Op(x); y is resized by the callee.
using LinearMap = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

/// Matrix-free product with the bordered saddle-point matrix, acting on
/// composite vectors (u, p, multiplier).
class BlockOperator {
 public:
  explicit BlockOperator(const SaddleSystem& system) : sys_(&system) {}
  int size() const { return sys_->size(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  LinearMap as_map() const;

 private:
  const SaddleSystem* sys_;
};

enum class SolverKind { direct, block_schur, block_reg };
SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

/// Inner approximate inverse of A + (1/gamma) B^T B inside Block-Reg.
enum class InnerSolver { cholesky, amg };
InnerSolver parse_inner_solver(const std::string& name);

struct GmresOptions {
  double rtol = 1e-8;
  int restart = 30;
  int maxit = 10000;
};

struct PreconditionerSpec {
  SolverKind kind = SolverKind::direct;
  std::optional<double> gamma{};  ///< Block-Reg only; empty means h^2
  InnerSolver inner = InnerSolver::cholesky;
};

struct SolveReport {
  std::string solver;
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;         ///< true residual ||b - Kx|| / ||b||
  std::vector<double> residual_history;  ///< relative GMRES residual estimate per inner iteration
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;  ///< setup included
  std::string message;
};

struct Solution {
  Eigen::VectorXd u;
  Eigen::VectorXd p;
  double multiplier = 0.0;
  SolveReport report;

  Eigen::VectorXd stacked() const;
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
  LinearMap as_map() const;
};

/// diag(A)^{-1} on velocity; exact solve with S = -C - B diag(A)^{-1} B^T
/// bordered by e on the pressure block.
std::unique_ptr<Preconditioner> build_block_schur(const SaddleSystem& system);

/// Approximate inverse of A + (1/gamma) B^T B on velocity, (1/gamma) I on the
/// pressure block.
std::unique_ptr<Preconditioner> build_block_reg(const SaddleSystem& system, double gamma,
                                                InnerSolver inner = InnerSolver::cholesky);

/// Right-preconditioned restarted GMRES. x holds the initial guess on entry.
/// iterations counts inner iterations (preconditioned products) over all
/// cycles; convergence is judged on the true residual.
SolveReport gmres(const LinearMap& op, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                  const GmresOptions& options = {});

/// Sparse LU of the bordered matrix.
Solution direct_solve(const SaddleSystem& system);

/// gamma = h^2 unless given explicitly; throws ConfigError for gamma <= 0.
double resolve_gamma(const std::optional<double>& gamma, double h);

/// Dispatch on spec.kind. h is the mesh size used for gamma = auto.
Solution solve(const SaddleSystem& system, const PreconditionerSpec& spec, double h, const GmresOptions& gmres = {});

/// S_p = T_base / T_p with the smallest thread count as the base.
std::map<int, double> compute_speedup(const std::map<int, double>& seconds_by_threads);

/// ||x - y|| / ||y|| on the velocity and on the pressure block, whichever is larger.
double relative_difference(const Solution& x, const Solution& y);

}  // namespace mvem
