// SPDX-License-Identifier: Apache-2.0
#include "mvem/solver.hpp"

#include "mvem/amg.hpp"
#include "mvem/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>

namespace mvem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

void BlockOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const auto& s = *sys_;
  const int nv = s.num_velocity();
  const int np = s.num_pressure();
  const auto u = x.head(nv);
  const auto p = x.segment(nv, np);
  const double lam = x[nv + np];
  y.resize(x.size());
  y.head(nv) = s.A * u + s.B.transpose() * p;
  y.segment(nv, np) = s.B * u - s.C * p + lam * s.e;
  y[nv + np] = s.e.dot(p);
}

LinearMap BlockOperator::as_map() const {
  return [op = *this](const Eigen::VectorXd& x, Eigen::VectorXd& y) { op.apply(x, y); };
}

LinearMap Preconditioner::as_map() const {
  return [this](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply(x, y); };
}

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "direct") return SolverKind::direct;
  if (name == "block-schur") return SolverKind::block_schur;
  if (name == "block-reg") return SolverKind::block_reg;
  throw ConfigError("unknown solver '" + name + "' (direct, block-schur, block-reg)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::direct:
      return "direct";
    case SolverKind::block_schur:
      return "block-schur";
    case SolverKind::block_reg:
      return "block-reg";
  }
  return "unknown";
}

InnerSolver parse_inner_solver(const std::string& name) {
  if (name == "cholesky") return InnerSolver::cholesky;
  if (name == "amg") return InnerSolver::amg;
  throw ConfigError("unknown inner solver '" + name + "' (cholesky, amg)");
}

Eigen::VectorXd Solution::stacked() const {
  Eigen::VectorXd x(u.size() + p.size() + 1);
  x << u, p, multiplier;
  return x;
}

namespace {

Eigen::VectorXd velocity_diagonal(const SaddleSystem& s) {
  Eigen::VectorXd d = s.A.diagonal();
  for (int i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0)) throw SolverError("diag(A) has a non-positive entry at row " + std::to_string(i));
  return d;
}

class BlockSchur final : public Preconditioner {
 public:
  explicit BlockSchur(const SaddleSystem& s) : nv_(s.num_velocity()), np_(s.num_pressure()) {
    dinv_ = velocity_diagonal(s).cwiseInverse();
    SpMat bd = s.B * dinv_.asDiagonal();
    SpMat schur = -(s.C + SpMat(bd * s.B.transpose()));
    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(schur.nonZeros() + 2 * np_);
    for (int j = 0; j < schur.outerSize(); ++j)
      for (SpMat::InnerIterator it(schur, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < np_; ++i)
      if (s.e[i] != 0.0) {
        t.emplace_back(i, np_, s.e[i]);
        t.emplace_back(np_, i, s.e[i]);
      }
    bordered_.resize(np_ + 1, np_ + 1);
    bordered_.setFromTriplets(t.begin(), t.end());
    lu_.compute(bordered_);
    if (lu_.info() != Eigen::Success) throw IllConditionedError("Schur complement factorization failed");
  }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
    y.resize(x.size());
    y.head(nv_) = dinv_.cwiseProduct(x.head(nv_));
    y.tail(np_ + 1) = lu_.solve(Eigen::VectorXd(x.tail(np_ + 1)));
  }

 private:
  int nv_, np_;
  Eigen::VectorXd dinv_;
  SpMat bordered_;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

class BlockReg final : public Preconditioner {
 public:
  BlockReg(const SaddleSystem& s, double gamma, InnerSolver inner)
      : nv_(s.num_velocity()), np_(s.num_pressure()), inv_gamma_(1.0 / gamma) {
    SpMat k = s.A + inv_gamma_ * SpMat(s.B.transpose() * s.B);
    if (inner == InnerSolver::amg) {
      amg_ = std::make_unique<SmoothedAggregationAmg>(k);
    } else {
      chol_ = std::make_unique<Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>>();
      chol_->compute(k);
      if (chol_->info() != Eigen::Success)
        throw IllConditionedError("Cholesky factorization of A + (1/gamma) B^T B failed");
    }
  }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
    y.resize(x.size());
    const Eigen::VectorXd xu = x.head(nv_);
    if (amg_) {
      Eigen::VectorXd yu;
      amg_->apply(xu, yu);
      y.head(nv_) = yu;
    } else {
      y.head(nv_) = chol_->solve(xu);
    }
    y.tail(np_ + 1) = inv_gamma_ * x.tail(np_ + 1);
  }

 private:
  int nv_, np_;
  double inv_gamma_;
  std::unique_ptr<Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>> chol_;
  std::unique_ptr<SmoothedAggregationAmg> amg_;
};

}  // namespace

std::unique_ptr<Preconditioner> build_block_schur(const SaddleSystem& system) {
  return std::make_unique<BlockSchur>(system);
}

std::unique_ptr<Preconditioner> build_block_reg(const SaddleSystem& system, double gamma, InnerSolver inner) {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  return std::make_unique<BlockReg>(system, gamma, inner);
}

SolveReport gmres(const LinearMap& op, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                  const GmresOptions& options) {
  if (options.restart < 1) throw ConfigError("GMRES restart must be >= 1");
  if (!(options.rtol > 0.0)) throw ConfigError("GMRES rtol must be positive");
  if (options.maxit < 1) throw ConfigError("GMRES maxit must be >= 1");
  SolveReport rep;
  rep.solver = "gmres";
  const auto t0 = Clock::now();
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    rep.solve_seconds = seconds_since(t0);
    return rep;
  }

  const int m = options.restart;
  Eigen::MatrixXd v(n, m + 1), z(n, m), h = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs(m), sn(m), g(m + 1), w, r;

  auto true_residual = [&] {
    op(x, w);
    r = b - w;
    return r.norm() / bnorm;
  };

  double rel = true_residual();
  while (true) {
    rep.relative_residual = rel;
    if (rel <= options.rtol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= options.maxit) {
      rep.message = "maximum iterations reached";
      break;
    }
    const double beta = r.norm();
    v.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    int j = 0;
    bool breakdown = false;
    for (; j < m && rep.iterations < options.maxit; ++j) {
      Eigen::VectorXd zj;
      precond(v.col(j), zj);
      z.col(j) = zj;
      op(zj, w);
      ++rep.iterations;
      // modified Gram-Schmidt with one reorthogonalization pass
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const double hij = v.col(i).dot(w);
          h(i, j) += hij;
          w -= hij * v.col(i);
        }
      const double wn = w.norm();
      h(j + 1, j) = wn;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      if (denom == 0.0) {
        breakdown = true;
        break;
      }
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      const double est = std::abs(g[j + 1]) / bnorm;
      rep.residual_history.push_back(est);
      if (wn <= 1e-14 * beta) {
        ++j;
        breakdown = true;
        break;
      }
      v.col(j + 1) = w / wn;
      if (est <= options.rtol) {
        ++j;
        break;
      }
    }
    if (j > 0) {
      const Eigen::VectorXd y =
          h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
      x += z.leftCols(j) * y;
    }
    h.setZero();
    const double previous = rel;
    rel = true_residual();
    if (breakdown && rel > options.rtol) {
      rep.relative_residual = rel;
      rep.message = "GMRES breakdown";
      break;
    }
    if (j == 0 && rel >= previous) {
      rep.relative_residual = rel;
      rep.message = "GMRES stagnation";
      break;
    }
  }
  rep.solve_seconds = seconds_since(t0);
  return rep;
}

namespace {

Solution split(const SaddleSystem& s, const Eigen::VectorXd& x, SolveReport report) {
  Solution sol;
  sol.u = x.head(s.num_velocity());
  sol.p = x.segment(s.num_velocity(), s.num_pressure());
  sol.multiplier = x[s.size() - 1];
  sol.report = std::move(report);
  return sol;
}

}  // namespace

Solution direct_solve(const SaddleSystem& system) {
  const auto t0 = Clock::now();
  const SpMat k = system.monolithic();
  const Eigen::VectorXd b = system.rhs();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(k);
  if (lu.info() != Eigen::Success) throw IllConditionedError("sparse LU of the saddle-point matrix failed");
  SolveReport rep;
  rep.solver = "direct";
  rep.setup_seconds = seconds_since(t0);
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw IllConditionedError("sparse LU solve failed");
  const double bnorm = std::max(b.norm(), 1e-300);
  rep.relative_residual = (b - k * x).norm() / bnorm;
  if (rep.relative_residual > 1e-12) {  // one step of iterative refinement
    x += lu.solve(Eigen::VectorXd(b - k * x));
    rep.relative_residual = (b - k * x).norm() / bnorm;
  }
  rep.converged = rep.relative_residual <= 1e-10;
  if (!rep.converged) rep.message = "residual above 1e-10 after refinement";
  rep.solve_seconds = seconds_since(t0);
  return split(system, x, rep);
}

double resolve_gamma(const std::optional<double>& gamma, double h) {
  const double g = gamma ? *gamma : h * h;
  if (!(g > 0.0)) throw ConfigError("gamma must be positive");
  return g;
}

Solution solve(const SaddleSystem& system, const PreconditionerSpec& spec, double h, const GmresOptions& options) {
  if (spec.kind == SolverKind::direct) return direct_solve(system);
  const auto t0 = Clock::now();
  std::unique_ptr<Preconditioner> prec = spec.kind == SolverKind::block_schur
                                             ? build_block_schur(system)
                                             : build_block_reg(system, resolve_gamma(spec.gamma, h), spec.inner);
  const double setup = seconds_since(t0);
  const BlockOperator op(system);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(system.size());
  SolveReport rep = gmres(op.as_map(), prec->as_map(), system.rhs(), x, options);
  rep.solver = to_string(spec.kind);
  rep.setup_seconds = setup;
  rep.solve_seconds = seconds_since(t0);
  return split(system, x, rep);
}

std::map<int, double> compute_speedup(const std::map<int, double>& seconds_by_threads) {
  if (seconds_by_threads.empty()) throw ConfigError("speedup needs a baseline timing");
  const double base = seconds_by_threads.begin()->second;
  std::map<int, double> out;
  for (const auto& [p, t] : seconds_by_threads) {
    if (!(t > 0.0)) throw ConfigError("timings must be positive");
    out[p] = base / t;
  }
  return out;
}

double relative_difference(const Solution& x, const Solution& y) {
  auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double nb = b.norm();
    return nb > 0.0 ? (a - b).norm() / nb : (a - b).norm();
  };
  return std::max(rel(x.u, y.u), rel(x.p, y.p));
}

}  // namespace mvem
