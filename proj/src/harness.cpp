// SPDX-License-Identifier: Apache-2.0
#include "mvem/harness.hpp"

#include "mvem/error.hpp"
#include "mvem/quadrature.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace mvem {

CoefficientField ManufacturedCase::fields() const {
  CoefficientField f;
  const double n = nu;
  f.nu = [n](const Vec3&) { return n; };
  f.source = source;
  f.boundary_flux = flux_of(velocity);
  return f;
}

ManufacturedCase builtin_case() {
  ManufacturedCase c;
  c.name = "builtin";
  c.velocity = [](const Vec3& p) {
    const double x = p.x(), y = p.y(), z = p.z();
    return Vec3(-5 * std::pow(x, 4) - y * y * z * z * z, -24 * y * y * y - 2 * x * y * z * z * z,
                -27 * z * z - 3 * x * y * y * z * z);
  };
  c.pressure = [](const Vec3& p) {
    const double x = p.x(), y = p.y(), z = p.z();
    return std::pow(x, 5) + 6 * std::pow(y, 4) + 9 * z * z * z + x * y * y * z * z * z;
  };
  c.source = [](const Vec3& p) {
    const double x = p.x(), y = p.y(), z = p.z();
    return -20 * x * x * x - 72 * y * y - 2 * x * z * z * z - 54 * z - 6 * x * y * y * z;
  };
  return c;
}

ManufacturedCase linear_pressure_case() {
  ManufacturedCase c;
  c.name = "linear-pressure";
  c.velocity = [](const Vec3&) { return Vec3(-1.0, 0.0, 0.0); };
  c.pressure = [](const Vec3& p) { return p.x() - 0.5; };
  c.source = [](const Vec3&) { return 0.0; };
  return c;
}

ManufacturedCase polynomial_case(int degree, double nu) {
  if (degree < 0) throw ConfigError("polynomial degree must be >= 0");
  std::mt19937 rng(4242u + static_cast<unsigned>(degree));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto indices = graded_indices3(degree);
  std::vector<double> coeffs(indices.size());
  for (auto& c : coeffs) c = dist(rng);
  const Vec3 origin = Vec3::Zero();

  ManufacturedCase c;
  c.name = "polynomial-" + std::to_string(degree);
  c.nu = nu;
  c.pressure = [=](const Vec3& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) s += coeffs[i] * eval_monomial(indices[i], x, origin, 1.0);
    return s;
  };
  c.velocity = [=](const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (int d = 0; d < 3; ++d)
        if (indices[i][d] > 0)
          g[d] += coeffs[i] * indices[i][d] * eval_monomial(indices[i].shifted(d, -1), x, origin, 1.0);
    return Vec3(-g / nu);
  };
  c.source = [=](const Vec3& x) {
    double lap = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (int d = 0; d < 3; ++d)
        if (indices[i][d] > 1)
          lap += coeffs[i] * indices[i][d] * (indices[i][d] - 1) *
                 eval_monomial(indices[i].shifted(d, -2), x, origin, 1.0);
    return -lap / nu;
  };
  return c;
}

ExactNorms exact_norms(const PreparedMesh& mesh, const ManufacturedCase& exact, int degree) {
  double vv = 0.0, qsum = 0.0, vol = 0.0;
  std::vector<QuadratureRule> rules;
  rules.reserve(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    rules.push_back(cell_rule(mesh, c, degree));
    const auto& r = rules.back();
    for (std::size_t q = 0; q < r.size(); ++q) {
      vv += r.weights[q] * exact.velocity(r.points[q]).squaredNorm();
      qsum += r.weights[q] * exact.pressure(r.points[q]);
      vol += r.weights[q];
    }
  }
  ExactNorms n;
  n.velocity = std::sqrt(vv);
  n.pressure_mean = qsum / vol;
  double qq = 0.0;
  for (const auto& r : rules)
    for (std::size_t q = 0; q < r.size(); ++q) {
      const double d = exact.pressure(r.points[q]) - n.pressure_mean;
      qq += r.weights[q] * d * d;
    }
  n.pressure = std::sqrt(qq);
  return n;
}

ErrorPair compute_errors(const PreparedMesh& mesh, const SaddleSystem& system, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& p, const ManufacturedCase& exact, const ExactNorms& norms,
                         int degree) {
  const auto& layout = system.layout;
  const int k = layout.order;
  double ev = 0.0, eq = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& ops = system.elements[c];
    Eigen::VectorXd local(ops.num_local());
    for (int i = 0; i < ops.num_local(); ++i) local[i] = u[ops.global_dofs[i]];
    const Eigen::VectorXd vc = ops.projection * local;
    const Eigen::VectorXd qc = pressure_coefficients(ops, p.segment(layout.pressure_dof(c, 0), layout.n_q));
    const MonomialBasis3 basis(k, ops.center, ops.h);
    const int nk = basis.size();
    const auto rule = cell_rule(mesh, c, degree);
    std::vector<double> m(nk);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec3& x = rule.points[q];
      basis.evaluate(x, m);
      const Eigen::Map<const Eigen::VectorXd> mv(m.data(), nk);
      const Vec3 pv(vc.segment(0, nk).dot(mv), vc.segment(nk, nk).dot(mv), vc.segment(2 * nk, nk).dot(mv));
      const double ph = qc.dot(mv.head(layout.n_q));
      ev += rule.weights[q] * (exact.velocity(x) - pv).squaredNorm();
      const double dq = exact.pressure(x) - norms.pressure_mean - ph;
      eq += rule.weights[q] * dq * dq;
    }
  }
  ErrorPair e;
  e.e_v = norms.velocity > 0.0 ? std::sqrt(std::max(ev, 0.0)) / norms.velocity : std::sqrt(std::max(ev, 0.0));
  e.e_q = norms.pressure > 0.0 ? std::sqrt(std::max(eq, 0.0)) / norms.pressure : std::sqrt(std::max(eq, 0.0));
  return e;
}

ErrorPair compute_errors(const PreparedMesh& mesh, const SaddleSystem& system, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& p, const ManufacturedCase& exact) {
  const int degree = interpolation_degree(system.layout.order);
  return compute_errors(mesh, system, u, p, exact, exact_norms(mesh, exact, degree), degree);
}

double pressure_interpolant_error(const PreparedMesh& mesh, const SaddleSystem& system, const Eigen::VectorXd& p,
                                  const ManufacturedCase& exact) {
  const auto& layout = system.layout;
  const int degree = interpolation_degree(layout.order);
  const double mean = exact_norms(mesh, exact, degree).pressure_mean;
  const ScalarField shifted = [&](const Vec3& x) { return exact.pressure(x) - mean; };
  double diff = 0.0, ref = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& ops = system.elements[c];
    const Eigen::VectorXd qi = interpolate_pressure(mesh, layout, c, shifted, degree);
    const Eigen::VectorXd ci = pressure_coefficients(ops, qi);
    const Eigen::VectorXd cd = pressure_coefficients(ops, p.segment(layout.pressure_dof(c, 0), layout.n_q) - qi);
    const auto m = ops.mass.topLeftCorner(layout.n_q, layout.n_q);
    diff += cd.dot(m * cd);
    ref += ci.dot(m * ci);
  }
  diff = std::sqrt(std::max(diff, 0.0));
  ref = std::sqrt(std::max(ref, 0.0));
  return ref > 0.0 ? diff / ref : diff;
}

double observed_rate(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

std::string MeshSequence::label(int i) const {
  if (!cube_sizes.empty()) return "cube-" + std::to_string(cube_sizes.at(i));
  return files.at(i).stem().string();
}

PreparedMesh MeshSequence::load(int i, int threads) const {
  GeometryOptions opt;
  opt.ingestion = ingestion;
  opt.threads = threads;
  opt.face_frame = face_frame;
  if (!cube_sizes.empty()) return prepare_mesh(gen_cube_mesh(cube_sizes.at(i)), opt);
  return prepare_mesh(load_mesh(files.at(i), ingestion), opt);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

void compute_rates(ErrorReport& report) {
  const LevelResult* prev = nullptr;
  for (auto& level : report.levels) {
    level.rate_v.reset();
    level.rate_q.reset();
    if (!level.error.empty()) continue;
    if (prev && level.h < prev->h) {
      level.rate_v = observed_rate(prev->e_v, level.e_v, prev->h, level.h);
      level.rate_q = observed_rate(prev->e_q, level.e_q, prev->h, level.h);
    }
    prev = &level;
  }
}

ErrorReport run_convergence(const ConvergenceConfig& config, const ManufacturedCase& exact) {
  check_order(config.order);
  const int n = config.meshes.size();
  if (n == 0) throw ConfigError("no meshes given");
  ErrorReport report;
  report.order = config.order;
  report.solver = to_string(config.solver.kind);
  const int degree = interpolation_degree(config.order);

  std::optional<ExactNorms> norms;
  try {
    norms = exact_norms(config.meshes.load(n - 1, config.threads), exact, degree);
  } catch (const Error&) {
    // reported per level below
  }

  for (int i = 0; i < n; ++i) {
    LevelResult level;
    level.mesh = config.meshes.label(i);
    try {
      const PreparedMesh mesh = config.meshes.load(i, config.threads);
      level.h = mesh.h;
      level.cells = mesh.num_cells();
      level.dofs = dof_counts(config.order, mesh.topology).total;
      const auto t0 = Clock::now();
      const SaddleSystem sys = assemble(mesh, config.order, exact.fields(), {config.threads});
      level.assembly_seconds = seconds_since(t0);
      const Solution sol = solve(sys, config.solver, mesh.h, config.gmres);
      level.solve = sol.report;
      if (!sol.report.converged) level.error = "solver did not converge: " + sol.report.message;
      const ExactNorms nrm = norms ? *norms : exact_norms(mesh, exact, degree);
      const ErrorPair e = compute_errors(mesh, sys, sol.u, sol.p, exact, nrm, degree);
      level.e_v = e.e_v;
      level.e_q = e.e_q;
    } catch (const Error& err) {
      level.error = err.what();
    }
    report.levels.push_back(std::move(level));
  }
  compute_rates(report);
  return report;
}

double max_relative_entry_difference(const SpMat& a, const SpMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  const SpMat d = a - b;
  double scale = 0.0, diff = 0.0;
  for (int j = 0; j < a.outerSize(); ++j)
    for (SpMat::InnerIterator it(a, j); it; ++it) scale = std::max(scale, std::abs(it.value()));
  for (int j = 0; j < d.outerSize(); ++j)
    for (SpMat::InnerIterator it(d, j); it; ++it) diff = std::max(diff, std::abs(it.value()));
  return scale > 0.0 ? diff / scale : diff;
}

std::vector<BenchRow> run_bench(const BenchConfig& config, const ManufacturedCase& exact) {
  check_order(config.order);
  if (config.threads.empty()) throw ConfigError("no thread counts given");
  for (int t : config.threads)
    if (t < 1) throw ConfigError("thread counts must be >= 1");
  std::vector<BenchRow> rows;
  const auto fields = exact.fields();
  for (int i = 0; i < config.meshes.size(); ++i) {
    BenchRow row;
    row.mesh = config.meshes.label(i);
    const PreparedMesh mesh = config.meshes.load(i);
    row.cells = mesh.num_cells();
    row.dofs = dof_counts(config.order, mesh.topology).total;
    row.h = mesh.h;
    std::optional<SaddleSystem> reference;
    SpMat reference_matrix;
    for (int t : config.threads) {
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < std::max(config.repeats, 1); ++r) {
        const auto t0 = Clock::now();
        SaddleSystem sys = assemble(mesh, config.order, fields, {t});
        best = std::min(best, seconds_since(t0));
        if (!reference) {
          reference_matrix = sys.monolithic();
          reference = std::move(sys);
        } else if (r == 0) {
          row.matrix_difference =
              std::max(row.matrix_difference, max_relative_entry_difference(reference_matrix, sys.monolithic()));
        }
      }
      row.assembly_seconds[t] = best;
    }
    row.speedup = compute_speedup(row.assembly_seconds);

    std::optional<Solution> first;
    for (SolverKind kind : config.solvers) {
      BenchSolverResult res;
      res.kind = kind;
      try {
        PreconditionerSpec spec;
        spec.kind = kind;
        spec.gamma = config.gamma;
        spec.inner = config.inner;
        Solution sol = solve(*reference, spec, mesh.h, config.gmres);
        res.iterations = sol.report.iterations;
        res.seconds = sol.report.solve_seconds;
        res.residual = sol.report.relative_residual;
        res.converged = sol.report.converged;
        if (!res.converged) res.error = "not converged: " + sol.report.message;
        if (first)
          res.difference = relative_difference(sol, *first);
        else
          first = std::move(sol);
      } catch (const Error& err) {
        res.error = err.what();
      }
      row.solvers.push_back(res);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

// CSV field quoting for free-text columns
std::string text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

using Json = nlohmann::ordered_json;

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string convergence_csv(const ErrorReport& report) {
  std::ostringstream out;
  out << "# mvem convergence v1\n";
  out << "order,solver,level,mesh,h,cells,dofs,e_v,e_q,rate_v,rate_q,iterations,residual,status\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const auto& l = report.levels[i];
    out << report.order << ',' << report.solver << ',' << i << ',' << text(l.mesh) << ',' << num(l.h) << ','
        << l.cells << ',' << l.dofs << ',' << num(l.e_v) << ',' << num(l.e_q) << ',' << opt_num(l.rate_v) << ','
        << opt_num(l.rate_q) << ',' << l.solve.iterations << ',' << num(l.solve.relative_residual) << ','
        << (l.error.empty() ? "ok" : text(l.error)) << '\n';
  }
  return out.str();
}

std::string convergence_json(const ErrorReport& report) {
  Json j;
  j["schema"] = "mvem-convergence-v1";
  j["order"] = report.order;
  j["solver"] = report.solver;
  Json levels = Json::array();
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const auto& l = report.levels[i];
    levels.push_back({{"level", i},
                      {"mesh", l.mesh},
                      {"h", l.h},
                      {"cells", l.cells},
                      {"dofs", l.dofs},
                      {"e_v", l.e_v},
                      {"e_q", l.e_q},
                      {"rate_v", opt_json(l.rate_v)},
                      {"rate_q", opt_json(l.rate_q)},
                      {"iterations", l.solve.iterations},
                      {"residual", l.solve.relative_residual},
                      {"status", l.error.empty() ? "ok" : l.error}});
  }
  j["levels"] = levels;
  return j.dump(2) + "\n";
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "# mvem bench v1\n";
  out << "mesh,cells,dofs,h,threads,t_ass,speedup,matrix_diff,solver,iterations,t_sol,residual,difference,status\n";
  for (const auto& r : rows)
    for (const auto& [t, secs] : r.assembly_seconds)
      for (const auto& s : r.solvers)
        out << text(r.mesh) << ',' << r.cells << ',' << r.dofs << ',' << num(r.h) << ',' << t << ',' << num(secs)
            << ',' << num(r.speedup.at(t)) << ',' << num(r.matrix_difference) << ',' << to_string(s.kind) << ','
            << s.iterations << ',' << num(s.seconds) << ',' << num(s.residual) << ',' << num(s.difference) << ','
            << (s.error.empty() ? "ok" : text(s.error)) << '\n';
  return out.str();
}

std::string bench_json(const std::vector<BenchRow>& rows) {
  Json j;
  j["schema"] = "mvem-bench-v1";
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json assembly = Json::array();
    for (const auto& [t, secs] : r.assembly_seconds)
      assembly.push_back({{"threads", t}, {"t_ass", secs}, {"speedup", r.speedup.at(t)}});
    Json solvers = Json::array();
    for (const auto& s : r.solvers)
      solvers.push_back({{"solver", to_string(s.kind)},
                         {"iterations", s.iterations},
                         {"t_sol", s.seconds},
                         {"residual", s.residual},
                         {"difference", s.difference},
                         {"status", s.error.empty() ? "ok" : s.error}});
    arr.push_back({{"mesh", r.mesh},
                   {"cells", r.cells},
                   {"dofs", r.dofs},
                   {"h", r.h},
                   {"matrix_diff", r.matrix_difference},
                   {"assembly", assembly},
                   {"solvers", solvers}});
  }
  j["rows"] = arr;
  return j.dump(2) + "\n";
}

std::vector<int> parse_int_list(const std::string& text_in) {
  std::vector<int> out;
  std::stringstream ss(text_in);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: '" + text_in + "'");
    }
    if (used != item.size()) throw ConfigError("not an integer list: '" + text_in + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

}  // namespace mvem
