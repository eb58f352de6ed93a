// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and not configurable.

#include "mvem/error.hpp"
#include "mvem/harness.hpp"
#include "mvem/poly.hpp"
#include "mvem/quadrature.hpp"

#include <CLI11.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace mvem;
namespace fs = std::filesystem;

// criterion 1
constexpr long long kDofs32k1 = 435201;
constexpr long long kDofs24k2 = 508033;
constexpr long long kDofs20k3 = 612001;
// criterion 2
constexpr double kRateBelow = 0.25;
constexpr double kRateAbove = 0.4;
constexpr double kConvergenceRtol = 1e-12;
// criterion 3
constexpr double kPatchTol = 1e-8;
// criterion 4
constexpr double kIdentityTol = 1e-12;
constexpr int kIdentityPoints = 50;
constexpr int kMaxIdentityDegree = 4;
constexpr int kMaxDimensionOrder = 5;
// criterion 5
constexpr double kOracleTol = 1e-9;
// criterion 6
constexpr double kSchurSlack = 1.2;
constexpr double kRegGrowth = 3.0;
// criterion 7
constexpr double kAgreementTol = 1e-6;
// criterion 8
constexpr double kMinSpeedup = 2.0;
constexpr double kMatrixTol = 1e-14;
constexpr int kTimingRepeats = 3;

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

struct Context {
  fs::path fixtures;
};

fs::path voronoi_file(const Context& ctx, int n) { return ctx.fixtures / ("voronoi_n" + std::to_string(n) + ".json"); }

PreparedMesh voronoi(const Context& ctx, int n, FaceFrame frame = FaceFrame::principal) {
  return prepare_mesh(load_mesh(voronoi_file(ctx, n)), {.face_frame = frame});
}

double monomial(const MultiIndex3& a, const Vec3& s) {
  return std::pow(s[0], a[0]) * std::pow(s[1], a[1]) * std::pow(s[2], a[2]);
}

Vec3 gradient(const MultiIndex3& b, const Vec3& s, double h) {
  Vec3 g = Vec3::Zero();
  for (int i = 0; i < 3; ++i)
    if (b[i] > 0) g[i] = b[i] / h * monomial(b.shifted(i, -1), s);
  return g;
}

Vec3 cross_position(const VectorMonomial& m, const Vec3& s) {
  Vec3 v = Vec3::Zero();
  v[m.component] = monomial(m.index, s);
  return s.cross(v);
}

std::vector<Vec3> cube_points(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
  return out;
}

// random points inside a cell, drawn from its sub-tetrahedra
std::vector<Vec3> cell_points(const PreparedMesh& mesh, int cell, int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  const auto& tets = mesh.tessellation.cell_tets[cell];
  std::uniform_int_distribution<std::size_t> pick(0, tets.size() - 1);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    const auto& t = tets[pick(rng)];
    double w[4], sum = 0.0;
    for (double& x : w) sum += (x = -std::log(u(rng)));
    Vec3 p = Vec3::Zero();
    for (int j = 0; j < 4; ++j) p += w[j] / sum * mesh.tessellation.points[t[j]];
    out.push_back(p);
  }
  return out;
}

// random element of [P_k]^3 with exact divergence
struct Field {
  std::vector<MultiIndex3> idx;
  std::vector<double> c[3];
  Vec3 x0;

  Field(int k, const Vec3& origin, std::mt19937& rng) : idx(graded_indices3(k)), x0(origin) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& comp : c) {
      comp.resize(idx.size());
      for (double& v : comp) v = u(rng);
    }
  }
  Vec3 operator()(const Vec3& x) const {
    Vec3 v = Vec3::Zero();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int a = 0; a < 3; ++a) v[a] += c[a][i] * monomial(idx[i], x - x0);
    return v;
  }
  double divergence(const Vec3& x) const {
    double d = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int a = 0; a < 3; ++a)
        if (idx[i][a] > 0) d += c[a][i] * idx[i][a] * monomial(idx[i].shifted(a, -1), x - x0);
    return d;
  }
};

int sampled_rank(const std::vector<VectorMonomial>& gens, std::mt19937& rng) {
  const auto pts = cube_points(60, rng);
  Eigen::MatrixXd a(3 * pts.size(), gens.size());
  for (std::size_t q = 0; q < pts.size(); ++q)
    for (std::size_t j = 0; j < gens.size(); ++j) a.block<3, 1>(3 * q, j) = cross_position(gens[j], pts[q]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  svd.setThreshold(1e-10);
  return static_cast<int>(svd.rank());
}

PreconditionerSpec spec(SolverKind kind) {
  PreconditionerSpec p;
  p.kind = kind;
  return p;
}

// ---------------------------------------------------------------------------

Outcome dof_counts_criterion(const Context&) {
  struct Row {
    int n, k;
    long long want;
  };
  bool ok = true;
  for (const Row& r : {Row{32, 1, kDofs32k1}, Row{24, 2, kDofs24k2}, Row{20, 3, kDofs20k3}}) {
    const PolyMesh m = gen_cube_mesh(r.n);
    const long long got = dof_counts(r.k, m).total;
    note(fmt("cube %d^3 k=%d: dofs %lld (expected %lld)", r.n, r.k, got, r.want));
    ok = ok && got == r.want;
  }
  return {ok, "exact dof totals on three cube meshes"};
}

struct RateCheck {
  bool ok = true;
  bool swapped_ok = true;
};

void check_rates(const ErrorReport& r, int k, RateCheck& out) {
  for (const auto& l : r.levels) {
    std::string rates = l.rate_v ? fmt("rate_v %.3f rate_q %.3f", *l.rate_v, *l.rate_q) : std::string("");
    note(fmt("k=%d %-12s h %.4f dofs %8lld e_v %.3e e_q %.3e it %4d %s%s", k, l.mesh.c_str(), l.h, l.dofs, l.e_v,
             l.e_q, l.solve.iterations, rates.c_str(), l.error.empty() ? "" : (" ERROR " + l.error).c_str()));
  }
  const auto& last = r.levels.back();
  if (!last.rate_v || !last.error.empty()) {
    out.ok = out.swapped_ok = false;
    return;
  }
  auto in = [](double rate, double center) { return rate >= center - kRateBelow && rate <= center + kRateAbove; };
  out.ok = out.ok && in(*last.rate_v, k) && in(*last.rate_q, k + 1);
  out.swapped_ok = out.swapped_ok && in(*last.rate_v, k + 1) && in(*last.rate_q, k);
}

Outcome convergence_criterion(const Context& ctx) {
  RateCheck check;
  auto run = [&](MeshSequence seq, int k) {
    ConvergenceConfig cfg;
    cfg.order = k;
    cfg.meshes = std::move(seq);
    cfg.solver.kind = SolverKind::block_reg;
    cfg.gmres.rtol = kConvergenceRtol;
    ErrorReport r = run_convergence(cfg);
    check_rates(r, k, check);
  };
  for (int k = 1; k <= 3; ++k) {
    MeshSequence seq;
    seq.cube_sizes = {2, 4, 8, 12};
    run(seq, k);
  }
  for (int k = 1; k <= 2; ++k) {
    MeshSequence seq;
    seq.files = {voronoi_file(ctx, 2), voronoi_file(ctx, 4), voronoi_file(ctx, 8)};
    run(seq, k);
  }
  note(fmt("brackets: e_v in [k-%.2f, k+%.2f], e_q in [k+1-%.2f, k+1+%.2f]", kRateBelow, kRateAbove, kRateBelow,
           kRateAbove));
  note(std::string("measured rates fit the exchanged brackets (e_v ~ k+1, e_q ~ k): ") +
       (check.swapped_ok ? "yes" : "no"));
  return {check.ok, "observed rates between the last two levels"};
}

Outcome patch_criterion(const Context& ctx) {
  bool ok = true;
  const PreparedMesh cube = prepare_mesh(gen_cube_mesh(2));
  const PreparedMesh vor = voronoi(ctx, 2);
  for (int k = 1; k <= 4; ++k)
    for (const auto& [name, mesh] : {std::pair{"cube-2", &cube}, std::pair{"voronoi_n2", &vor}})
      for (const ManufacturedCase& c : {linear_pressure_case(), polynomial_case(k + 1)}) {
        const SaddleSystem s = assemble(*mesh, k, c.fields());
        const Solution sol = direct_solve(s);
        const ErrorPair e = compute_errors(*mesh, s, sol.u, sol.p, c);
        const double gap = pressure_interpolant_error(*mesh, s, sol.p, c);
        const bool row = e.e_v <= kPatchTol && e.e_q <= kPatchTol;
        note(fmt("k=%d %-10s %-14s e_v %.2e e_q %.2e |q_h - I q| %.2e %s", k, name, c.name.c_str(), e.e_v, e.e_q,
                 gap, row ? "ok" : "over"));
        ok = ok && row;
      }
  return {ok, fmt("e_v, e_q <= %.0e for linear and admissible polynomial cases", kPatchTol)};
}

Outcome decomposition_criterion(const Context&) {
  std::mt19937 rng(2024);
  double worst_decomp = 0.0, worst_rewrite = 0.0, worst_kernel = 0.0;
  bool dims = true, kernel_flag = true;
  const Vec3 xp(0.2, -0.4, 0.7);
  const double h = 0.43;
  for (int c = 0; c < 3; ++c)
    for (const auto& alpha : graded_indices3(kMaxIdentityDegree)) {
      const auto d = decompose_vector_monomial({c, alpha}, h);
      for (const auto& s : cube_points(kIdentityPoints, rng)) {
        Vec3 rhs = Vec3::Zero();
        for (const auto& t : d.gradient) rhs += t.coeff * gradient(t.index, s, h);
        for (const auto& t : d.cross) rhs += t.coeff * cross_position(t.generator, s);
        Vec3 want = Vec3::Zero();
        want[c] = monomial(alpha, s);
        const double scale = std::max(1.0, want.norm());
        worst_decomp = std::max(worst_decomp, (rhs - want).norm() / scale);
        worst_decomp = std::max(worst_decomp, (d.evaluate(xp + h * s, xp, h) - want).norm() / scale);
      }
      if (c == 0 && alpha[0] >= 1) {
        const auto terms = rewrite_first_component(alpha);
        for (const auto& s : cube_points(kIdentityPoints, rng)) {
          const Vec3 lhs = cross_position({0, alpha}, s);
          Vec3 rhs = Vec3::Zero();
          for (const auto& t : terms) rhs += t.coeff * cross_position(t.generator, s);
          worst_rewrite = std::max(worst_rewrite, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
        }
      }
    }
  // m_I x (m_I p) = 0 for p of degree up to |alpha| - 2
  for (const auto& alpha : graded_indices3(kMaxIdentityDegree - 2)) {
    const Polynomial p = Polynomial::monomial(alpha);
    kernel_flag = kernel_flag && in_cross_kernel(radial_lift(p), kIdentityPoints, 7, kIdentityTol);
    for (const auto& s : cube_points(kIdentityPoints, rng)) {
      const Vec3 v = s * p.evaluate(s);
      worst_kernel = std::max(worst_kernel, s.cross(v).norm() / std::max(1.0, v.norm()));
    }
  }
  for (int k = 1; k <= kMaxDimensionOrder; ++k) {
    // dim G_k^perp = 3 dim P_{k-1} - dim P_{k-2}, from the cross image rank
    std::vector<VectorMonomial> all;
    for (int comp = 0; comp < 3; ++comp)
      for (const auto& a : graded_indices3(k - 1)) all.push_back({comp, a});
    const int rank_all = sampled_rank(all, rng);
    const auto gens = gperp_generators(k);
    const int rank_gens = sampled_rank(gens, rng);
    const int kernel_dim = static_cast<int>(all.size()) - rank_all;
    const bool row = dim_gperp(k) == 3 * dim_pk(k - 1) - dim_pk(k - 2) && rank_all == dim_gperp(k) &&
                     static_cast<int>(gens.size()) == dim_gperp(k) && rank_gens == dim_gperp(k) &&
                     kernel_dim == dim_pk(k - 2);
    note(fmt("k=%d dim_gperp %d, cross-image rank %d, generators %zu (rank %d), kernel dim %d (dim P_k-2 %d)", k,
             dim_gperp(k), rank_all, gens.size(), rank_gens, kernel_dim, dim_pk(k - 2)));
    dims = dims && row;
  }
  note(fmt("max rel. residual: decomposition %.2e, rewrite %.2e, kernel %.2e", worst_decomp, worst_rewrite,
           worst_kernel));
  const bool ok = worst_decomp <= kIdentityTol && worst_rewrite <= kIdentityTol && worst_kernel <= kIdentityTol &&
                  kernel_flag && dims;
  return {ok, fmt("pointwise identities at rel. %.0e, dimension identities for k <= %d", kIdentityTol,
                  kMaxDimensionOrder)};
}

struct OracleErrors {
  double projection = 0.0;
  double divergence = 0.0;
};

OracleErrors projection_oracles(const PreparedMesh& mesh, int k, std::mt19937& rng) {
  const DofLayout layout(k, mesh.num_faces(), mesh.num_cells());
  OracleErrors out;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    const ElementOperators ops = build_element(mesh, layout, cell);
    const Field p(k, mesh.geometry.cells[cell].centroid, rng);
    const auto dofs = interpolate_velocity(mesh, layout, cell, [&](const Vec3& x) { return p(x); }, 2 * k + 2);
    const Eigen::VectorXd div = ops.divergence * dofs;
    const MonomialBasis3 basis(k - 1, ops.center, ops.h);
    std::vector<double> m(basis.size());
    const auto pts = cell_points(mesh, cell, 10, rng);
    double vscale = 0.0, dscale = 1.0;
    for (const auto& x : pts) {
      vscale = std::max(vscale, p(x).norm());
      dscale = std::max(dscale, std::abs(p.divergence(x)));
    }
    for (const auto& x : pts) {
      out.projection = std::max(out.projection, (projection_eval(ops, dofs, x) - p(x)).norm() / vscale);
      basis.evaluate(x, m);
      double value = 0.0;
      for (int i = 0; i < basis.size(); ++i) value += div[i] * m[i];
      out.divergence = std::max(out.divergence, std::abs(value - p.divergence(x)) / dscale);
    }
  }
  return out;
}

Outcome projection_criterion(const Context& ctx) {
  std::mt19937 rng(99);
  bool ok = true;
  const PreparedMesh cube = prepare_mesh(gen_cube_mesh(2));
  const PreparedMesh vor2 = voronoi(ctx, 2);
  const PreparedMesh vor3 = voronoi(ctx, 3);
  for (int k = 1; k <= 4; ++k)
    for (const auto& [name, mesh] :
         {std::pair{"cube-2", &cube}, std::pair{"voronoi_n2", &vor2}, std::pair{"voronoi_n3", &vor3}}) {
      const OracleErrors e = projection_oracles(*mesh, k, rng);
      note(fmt("k=%d %-10s projection %.2e divergence %.2e", k, name, e.projection, e.divergence));
      ok = ok && e.projection <= kOracleTol && e.divergence <= kOracleTol;
    }
  const OracleErrors edge = projection_oracles(voronoi(ctx, 2, FaceFrame::first_edge), 4, rng);
  note(fmt("first-edge face frame, k=4 voronoi_n2: projection %.2e divergence %.2e (not part of the verdict)",
           edge.projection, edge.divergence));
  return {ok, fmt("reproduction and divergence at rel. %.0e, k <= 4", kOracleTol)};
}

Outcome optimality_criterion(const Context&) {
  std::vector<int> schur, reg;
  for (int n : {4, 8, 12, 16}) {
    const PreparedMesh mesh = prepare_mesh(gen_cube_mesh(n));
    const SaddleSystem s = assemble(mesh, 2, builtin_case().fields());
    const Solution a = solve(s, spec(SolverKind::block_schur), mesh.h);
    const Solution b = solve(s, spec(SolverKind::block_reg), mesh.h);
    note(fmt("n=%2d dofs %7d block-schur it %4d (%s, %.1fs) block-reg it %4d (%s, %.1fs)", n, s.size(),
             a.report.iterations, a.report.converged ? "conv" : "FAILED", a.report.solve_seconds, b.report.iterations,
             b.report.converged ? "conv" : "FAILED", b.report.solve_seconds));
    if (!a.report.converged || !b.report.converged) return {false, "a solve did not converge"};
    schur.push_back(a.report.iterations);
    reg.push_back(b.report.iterations);
  }
  const bool monotone = std::is_sorted(schur.rbegin(), schur.rend());
  const bool bounded = *std::max_element(schur.begin(), schur.end()) <= kSchurSlack * schur.front();
  const double growth = static_cast<double>(reg.back()) / reg.front();
  note(fmt("block-schur non-increasing: %s, within %.1fx first level: %s; block-reg it(16)/it(4) = %.2f",
           monotone ? "yes" : "no", kSchurSlack, bounded ? "yes" : "no", growth));
  return {(monotone || bounded) && growth <= kRegGrowth, "GMRES iteration trend on the k=2 cube sweep"};
}

Outcome cross_solver_criterion(const Context&) {
  bool ok = true;
  const ManufacturedCase c = builtin_case();
  for (int n : {2, 4, 8, 12}) {
    const PreparedMesh mesh = prepare_mesh(gen_cube_mesh(n));
    const SaddleSystem s = assemble(mesh, 1, c.fields());
    const GmresOptions opt{.rtol = kConvergenceRtol};
    const Solution sols[3] = {direct_solve(s), solve(s, spec(SolverKind::block_schur), mesh.h, opt),
                              solve(s, spec(SolverKind::block_reg), mesh.h, opt)};
    ErrorPair e[3];
    for (int i = 0; i < 3; ++i) e[i] = compute_errors(mesh, s, sols[i].u, sols[i].p, c);
    double sol_diff = 0.0, err_diff = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        sol_diff = std::max(sol_diff, relative_difference(sols[i], sols[j]));
        err_diff = std::max({err_diff, std::abs(e[i].e_v - e[j].e_v) / e[j].e_v,
                             std::abs(e[i].e_q - e[j].e_q) / e[j].e_q});
      }
    // the same comparison at the default GMRES tolerance
    const Solution loose = solve(s, spec(SolverKind::block_schur), mesh.h);
    note(fmt("cube-%-2d max pairwise solution diff %.2e, error diff %.2e (block-schur at rtol 1e-8: %.2e)", n,
             sol_diff, err_diff, relative_difference(loose, sols[0])));
    ok = ok && sol_diff <= kAgreementTol && err_diff <= kAgreementTol;
  }
  return {ok, fmt("direct, block-schur and block-reg agree to %.0e at k=1", kAgreementTol)};
}

Outcome speedup_criterion(const Context&) {
  const PreparedMesh mesh = prepare_mesh(gen_cube_mesh(8));
  const CoefficientField fields = builtin_case().fields();
  std::map<int, double> best;
  std::map<int, SaddleSystem> systems;
  for (int threads : {1, 4}) {
    double t = std::numeric_limits<double>::infinity();
    for (int r = 0; r < kTimingRepeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      SaddleSystem s = assemble(mesh, 2, fields, {.threads = threads});
      t = std::min(t, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      systems[threads] = std::move(s);
    }
    best[threads] = t;
  }
  const double s4 = compute_speedup(best).at(4);
  const SaddleSystem& a = systems.at(1);
  const SaddleSystem& b = systems.at(4);
  const double diff = std::max({max_relative_entry_difference(a.A, b.A), max_relative_entry_difference(a.B, b.B),
                                (a.rhs() - b.rhs()).cwiseAbs().maxCoeff() / a.rhs().cwiseAbs().maxCoeff()});
  note(fmt("hardware threads %u; T_ass(1) %.3fs, T_ass(4) %.3fs, S_4 %.2f; matrix difference %.1e",
           std::thread::hardware_concurrency(), best[1], best[4], s4, diff));
  return {s4 >= kMinSpeedup && diff <= kMatrixTol,
          fmt("8^3 k=2 assembly: S_4 >= %.1f and parallel matches serial to %.0e", kMinSpeedup, kMatrixTol)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Context&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "dof-counts", dof_counts_criterion},         {2, "convergence-rates", convergence_criterion},
      {3, "patch-tests", patch_criterion},             {4, "decomposition", decomposition_criterion},
      {5, "projection-divergence", projection_criterion}, {6, "preconditioner-optimality", optimality_criterion},
      {7, "cross-solver", cross_solver_criterion},     {8, "parallel-assembly", speedup_criterion},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvem acceptance suite"};
  std::string which = "all";
  Context ctx;
  std::string fixtures = MVEM_FIXTURE_DIR;
  app.add_option("criterion", which, "criterion number 1-8 or 'all'");
  app.add_option("--fixtures", fixtures, "directory with the Voronoi mesh fixtures");
  CLI11_PARSE(app, argc, argv);
  ctx.fixtures = fixtures;

  std::vector<int> selected;
  if (which == "all") {
    for (const auto& c : criteria()) selected.push_back(c.id);
  } else {
    try {
      selected.push_back(std::stoi(which));
    } catch (const std::exception&) {
      std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
      return 2;
    }
    if (selected[0] < 1 || selected[0] > static_cast<int>(criteria().size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
      return 2;
    }
  }

  int failed = 0;
  for (int id : selected) {
    const Criterion& c = criteria()[id - 1];
    std::printf("criterion %d %s\n", c.id, c.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.summary.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
