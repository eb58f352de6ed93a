// SPDX-License-Identifier: Apache-2.0
#include "mvem/amg.hpp"
#include "mvem/assembly.hpp"
#include "mvem/error.hpp"
#include "mvem/harness.hpp"
#include "mvem/solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/IterativeLinearSolvers>

#include <random>

using namespace mvem;

namespace {

SpMat sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

// bordered saddle system from explicit blocks
SaddleSystem toy(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& e,
                 const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  SaddleSystem s;
  s.A = sparse(a);
  s.B = sparse(b);
  s.C.resize(b.rows(), b.rows());
  s.e = e;
  s.rhs_u = f;
  s.rhs_p = g;
  return s;
}

SaddleSystem cube_system(int n, int k, int threads = 1) {
  const PreparedMesh mesh = test_util::cube(n);
  return assemble(mesh, k, builtin_case().fields(), {.threads = threads});
}

Eigen::VectorXd random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

LinearMap identity_map() {
  return [](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x; };
}

}  // namespace

TEST(DirectSolve, SmallBlockSystemWithKnownInverse) {
  // e forces p = 0, so u = A^{-1} f and the multiplier is g - B u
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  Eigen::MatrixXd b(1, 2);
  b << 1, 1;
  const SaddleSystem s = toy(a, b, Eigen::VectorXd::Ones(1), Eigen::Vector2d(1, 0), Eigen::VectorXd::Constant(1, 0.5));
  const Solution sol = direct_solve(s);
  EXPECT_NEAR(sol.u[0], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(sol.u[1], -1.0 / 3.0, 1e-14);
  EXPECT_NEAR(sol.p[0], 0.0, 1e-14);
  EXPECT_NEAR(sol.multiplier, 0.5 - 1.0 / 3.0, 1e-14);
  EXPECT_TRUE(sol.report.converged);
}

TEST(DirectSolve, SingularSystemIsReported) {
  const SaddleSystem s = toy(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Ones(1),
                             Eigen::Vector2d(1, 0), Eigen::VectorXd::Zero(1));
  EXPECT_THROW(direct_solve(s), IllConditionedError);
}

TEST(DirectSolve, ResidualBelowTolerance) {
  const SaddleSystem s = cube_system(3, 2);
  const Solution sol = direct_solve(s);
  const double res = (s.rhs() - s.monolithic() * sol.stacked()).norm() / s.rhs().norm();
  EXPECT_LE(res, 1e-10);
  EXPECT_NEAR(res, sol.report.relative_residual, 1e-12);
}

TEST(Gmres, IdentityOperatorTakesOneIteration) {
  std::mt19937 rng(1);
  const Eigen::VectorXd b = random_vector(40, rng);
  Eigen::VectorXd x;
  const SolveReport rep = gmres(identity_map(), identity_map(), b, x);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_LT((x - b).norm(), 1e-14 * b.norm());
}

TEST(Gmres, DiagonalOperatorWithExactPreconditioner) {
  std::mt19937 rng(2);
  const Eigen::VectorXd d = random_vector(50, rng).cwiseAbs().array() + 0.1;
  const Eigen::VectorXd b = random_vector(50, rng);
  LinearMap op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = d.cwiseProduct(x); };
  LinearMap pre = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x.cwiseQuotient(d); };
  Eigen::VectorXd x;
  const SolveReport rep = gmres(op, pre, b, x);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_LT((d.cwiseProduct(x) - b).norm(), 1e-12 * b.norm());
}

TEST(Gmres, ZeroRightHandSide) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(5);
  const SolveReport rep = gmres(identity_map(), identity_map(), Eigen::VectorXd::Zero(5), x);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_EQ(x.norm(), 0.0);
}

TEST(Gmres, MaxitReturnsFailureFlag) {
  // unpreconditioned 1D Laplacian needs far more than 3 iterations
  const int n = 60;
  LinearMap op = [](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y = 2.0 * x;
    y.head(x.size() - 1) -= x.tail(x.size() - 1);
    y.tail(x.size() - 1) -= x.head(x.size() - 1);
  };
  Eigen::VectorXd x;
  const SolveReport rep = gmres(op, identity_map(), Eigen::VectorXd::Ones(n), x, {.rtol = 1e-10, .restart = 5, .maxit = 3});
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 3);
  EXPECT_FALSE(rep.message.empty());
  EXPECT_TRUE(x.allFinite());
}

TEST(Gmres, RejectsBadOptions) {
  Eigen::VectorXd x;
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(gmres(identity_map(), identity_map(), b, x, {.restart = 0}), ConfigError);
  EXPECT_THROW(gmres(identity_map(), identity_map(), b, x, {.rtol = 0.0}), ConfigError);
}

TEST(Gmres, ResidualNonIncreasingWithinRestartCycles) {
  const SaddleSystem s = cube_system(4, 1);
  const auto prec = build_block_schur(s);
  Eigen::VectorXd x;
  const int restart = 10;
  const SolveReport rep = gmres(BlockOperator(s).as_map(), prec->as_map(), s.rhs(), x, {.restart = restart});
  ASSERT_TRUE(rep.converged);
  const auto& h = rep.residual_history;
  for (std::size_t i = 1; i < h.size(); ++i)
    if (i % restart != 0) {
      EXPECT_LE(h[i], h[i - 1] * (1.0 + 1e-12)) << i;
    }
  // the true residual recomputed from the monolithic matrix
  const double res = (s.rhs() - s.monolithic() * x).norm() / s.rhs().norm();
  EXPECT_LE(res, 10 * 1e-8);
}

TEST(BlockOperatorTest, MatchesMonolithicMatrix) {
  std::mt19937 rng(3);
  const SaddleSystem s = cube_system(2, 2);
  const SpMat k = s.monolithic();
  const BlockOperator op(s);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = random_vector(s.size(), rng);
    Eigen::VectorXd y;
    op.apply(x, y);
    const Eigen::VectorXd want = k * x;
    EXPECT_LT((y - want).norm(), 1e-13 * want.norm());
  }
}

TEST(BlockSchur, IdentityBlocksWithoutBordering) {
  // A = I, B = I, S = -I: the preconditioned matrix M = [[I, I], [-I, 0]]
  // satisfies M^2 - M + I = 0
  const int n = 6;
  std::mt19937 rng(4);
  LinearMap op = [n](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(2 * n);
    y.head(n) = x.head(n) + x.tail(n);
    y.tail(n) = x.head(n);
  };
  LinearMap pre = [n](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(2 * n);
    y.head(n) = x.head(n);
    y.tail(n) = -x.tail(n);
  };
  Eigen::VectorXd x;
  const SolveReport rep = gmres(op, pre, random_vector(2 * n, rng), x, {.rtol = 1e-12});
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.iterations, 2);
}

TEST(BlockSchur, IdentityBlocksBorderedByMultiplier) {
  // the bordered pressure block [[0, e], [e^T, 0]] is not zero, so the
  // quadratic minimal polynomial is lost; the count stays small
  const int n = 6;
  std::mt19937 rng(4);
  const SaddleSystem s = toy(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
                             Eigen::VectorXd::Ones(n), random_vector(n, rng), random_vector(n, rng));
  const auto prec = build_block_schur(s);
  Eigen::VectorXd x;
  const SolveReport rep = gmres(BlockOperator(s).as_map(), prec->as_map(), s.rhs(), x, {.rtol = 1e-12});
  EXPECT_TRUE(rep.converged);
  RecordProperty("iterations", rep.iterations);
  EXPECT_LE(rep.iterations, 4);
  EXPECT_LT((s.monolithic() * x - s.rhs()).norm(), 1e-11 * s.rhs().norm());
}

TEST(BlockSchur, ApplicationIsLinear) {
  std::mt19937 rng(5);
  const SaddleSystem s = cube_system(2, 2);
  const auto prec = build_block_schur(s);
  const Eigen::VectorXd x = random_vector(s.size(), rng), y = random_vector(s.size(), rng);
  const double a = 1.7, b = -0.3;
  Eigen::VectorXd px, py, pxy;
  prec->apply(x, px);
  prec->apply(y, py);
  prec->apply(a * x + b * y, pxy);
  EXPECT_LT((pxy - a * px - b * py).norm(), 1e-13 * pxy.norm());
}

TEST(BlockSchur, RejectsNonPositiveDiagonal) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  a(1, 1) = 0.0;
  const SaddleSystem s = toy(a, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2),
                             Eigen::VectorXd::Zero(2));
  EXPECT_THROW(build_block_schur(s), SolverError);
}

TEST(BlockSchur, IterationsBoundedUnderRefinement) {
  int its[2];
  int i = 0;
  for (int n : {4, 8}) {
    const SaddleSystem s = cube_system(n, 1);
    const Solution sol = solve(s, {.kind = SolverKind::block_schur}, 1.0);
    ASSERT_TRUE(sol.report.converged);
    its[i++] = sol.report.iterations;
  }
  RecordProperty("it4", its[0]);
  RecordProperty("it8", its[1]);
  EXPECT_LE(its[0], 150);
  EXPECT_LE(its[1], 150);
}

TEST(BlockSchur, IterationCountIndependentOfAssemblyThreads) {
  int its[2];
  int i = 0;
  for (int threads : {1, 4}) {
    const SaddleSystem s = cube_system(4, 1, threads);
    its[i++] = solve(s, {.kind = SolverKind::block_schur}, 1.0).report.iterations;
  }
  EXPECT_EQ(its[0], its[1]);
}

TEST(BlockReg, SymmetricApplication) {
  std::mt19937 rng(6);
  const SaddleSystem s = cube_system(2, 2);
  for (InnerSolver inner : {InnerSolver::cholesky, InnerSolver::amg}) {
    const auto prec = build_block_reg(s, 0.1, inner);
    for (int t = 0; t < 5; ++t) {
      const Eigen::VectorXd x = random_vector(s.size(), rng), y = random_vector(s.size(), rng);
      Eigen::VectorXd px, py;
      prec->apply(x, px);
      prec->apply(y, py);
      EXPECT_NEAR(px.dot(y), x.dot(py), 1e-12 * px.norm() * y.norm());
    }
  }
}

TEST(BlockReg, LargeGammaApproachesVelocityInverse) {
  std::mt19937 rng(7);
  const SaddleSystem s = cube_system(2, 1);
  const auto prec = build_block_reg(s, 1e12);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(s.size());
  x.head(s.num_velocity()) = random_vector(s.num_velocity(), rng);
  Eigen::VectorXd y;
  prec->apply(x, y);
  const Eigen::VectorXd au = s.A * y.head(s.num_velocity());
  EXPECT_LT((au - x.head(s.num_velocity())).norm(), 1e-6 * x.norm());
  EXPECT_LT(y.tail(s.num_pressure() + 1).norm(), 1e-20);
}

TEST(BlockReg, RejectsNonPositiveGamma) {
  const SaddleSystem s = cube_system(2, 1);
  EXPECT_THROW(build_block_reg(s, 0.0), ConfigError);
  EXPECT_THROW(build_block_reg(s, -1.0), ConfigError);
}

TEST(BlockReg, IterationGrowthUnderRefinement) {
  int its[2];
  int i = 0;
  for (int n : {4, 8}) {
    const PreparedMesh mesh = test_util::cube(n);
    const SaddleSystem s = assemble(mesh, 2, builtin_case().fields());
    const Solution sol = solve(s, {.kind = SolverKind::block_reg}, mesh.h);
    ASSERT_TRUE(sol.report.converged);
    its[i++] = sol.report.iterations;
  }
  RecordProperty("it4", its[0]);
  RecordProperty("it8", its[1]);
  EXPECT_LE(its[1], 2 * its[0]);
}

TEST(BlockReg, AmgInnerSolverConverges) {
  const PreparedMesh mesh = test_util::cube(4);
  const SaddleSystem s = assemble(mesh, 1, builtin_case().fields());
  const Solution sol = solve(s, {.kind = SolverKind::block_reg, .inner = InnerSolver::amg}, mesh.h);
  EXPECT_TRUE(sol.report.converged);
  EXPECT_LT(relative_difference(sol, direct_solve(s)), 1e-6);
}

TEST(Amg, PreconditionedConjugateGradientOnLaplacian) {
  // 7-point Laplacian on a 12^3 grid
  const int n = 12, size = n * n * n;
  auto id = [n](int i, int j, int k) { return i + n * (j + n * k); };
  std::vector<Eigen::Triplet<double, int>> t;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        t.emplace_back(id(i, j, k), id(i, j, k), 6.0);
        if (i > 0) t.emplace_back(id(i, j, k), id(i - 1, j, k), -1.0);
        if (i + 1 < n) t.emplace_back(id(i, j, k), id(i + 1, j, k), -1.0);
        if (j > 0) t.emplace_back(id(i, j, k), id(i, j - 1, k), -1.0);
        if (j + 1 < n) t.emplace_back(id(i, j, k), id(i, j + 1, k), -1.0);
        if (k > 0) t.emplace_back(id(i, j, k), id(i, j, k - 1), -1.0);
        if (k + 1 < n) t.emplace_back(id(i, j, k), id(i, j, k + 1), -1.0);
      }
  SmoothedAggregationAmg::Matrix a(size, size);
  a.setFromTriplets(t.begin(), t.end());
  const SmoothedAggregationAmg amg(a);
  const auto sizes = amg.level_sizes();
  ASSERT_GE(amg.num_levels(), 2);
  EXPECT_EQ(sizes.front(), size);
  for (std::size_t l = 1; l < sizes.size(); ++l) EXPECT_LT(sizes[l], sizes[l - 1]);

  // preconditioned CG, written out so the cycle is the only preconditioner
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(size);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(size), r = b, z, p, ap;
  amg.apply(r, z);
  p = z;
  double rz = r.dot(z);
  int it = 0;
  while (r.norm() > 1e-10 * b.norm() && it < 100) {
    ap = a * p;
    const double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    amg.apply(r, z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++it;
  }
  RecordProperty("iterations", it);
  EXPECT_LT(it, 30);
  EXPECT_LT((b - a * x).norm(), 1e-10 * b.norm());
}

TEST(CrossSolver, DirectAndIterativeAgree) {
  const PreparedMesh mesh = test_util::cube(4);
  const SaddleSystem s = assemble(mesh, 1, builtin_case().fields());
  const Solution d = direct_solve(s);
  const Solution schur = solve(s, {.kind = SolverKind::block_schur}, mesh.h, {.rtol = 1e-10});
  const Solution reg = solve(s, {.kind = SolverKind::block_reg}, mesh.h, {.rtol = 1e-10});
  EXPECT_LT(relative_difference(schur, d), 1e-7);
  EXPECT_LT(relative_difference(reg, d), 1e-7);
  const ManufacturedCase c = builtin_case();
  const ErrorPair ed = compute_errors(mesh, s, d.u, d.p, c);
  const ErrorPair es = compute_errors(mesh, s, schur.u, schur.p, c);
  const ErrorPair er = compute_errors(mesh, s, reg.u, reg.p, c);
  EXPECT_NEAR(es.e_v, ed.e_v, 1e-6 * ed.e_v);
  EXPECT_NEAR(er.e_v, ed.e_v, 1e-6 * ed.e_v);
  EXPECT_NEAR(es.e_q, ed.e_q, 1e-6 * ed.e_q);
  EXPECT_NEAR(er.e_q, ed.e_q, 1e-6 * ed.e_q);
}

TEST(Speedup, Examples) {
  EXPECT_DOUBLE_EQ(compute_speedup({{1, 10.0}, {4, 2.5}}).at(4), 4.0);
  EXPECT_NEAR(compute_speedup({{1, 68.0}, {32, 3.0}}).at(32), 22.7, 0.05);
  const auto single = compute_speedup({{2, 5.0}});
  EXPECT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single.at(2), 1.0);
  EXPECT_THROW(compute_speedup({}), ConfigError);
  EXPECT_THROW(compute_speedup({{1, 0.0}}), ConfigError);
}

TEST(Gamma, AutoIsMeshSizeSquared) {
  EXPECT_DOUBLE_EQ(resolve_gamma(std::nullopt, 0.25), 0.0625);
  EXPECT_DOUBLE_EQ(resolve_gamma(3.0, 0.25), 3.0);
  EXPECT_THROW(resolve_gamma(0.0, 0.25), ConfigError);
  EXPECT_THROW(resolve_gamma(std::nullopt, 0.0), ConfigError);
}

TEST(SolverNames, RoundTrip) {
  for (SolverKind k : {SolverKind::direct, SolverKind::block_schur, SolverKind::block_reg})
    EXPECT_EQ(parse_solver_kind(to_string(k)), k);
  EXPECT_THROW(parse_solver_kind("cg"), ConfigError);
  EXPECT_EQ(parse_inner_solver("amg"), InnerSolver::amg);
  EXPECT_THROW(parse_inner_solver("ilu"), ConfigError);
}
