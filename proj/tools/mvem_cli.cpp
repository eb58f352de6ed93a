// SPDX-License-Identifier: Apache-2.0
// mvem: convergence studies, solver benchmarks, single solves and mesh
// summaries from the command line.

#include "mvem/error.hpp"
#include "mvem/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <limits>

namespace {

using namespace mvem;
using Json = nlohmann::ordered_json;

struct Common {
  std::vector<std::string> mesh;
  std::string gen_cube;
  int order = 1;
  std::string solver = "direct";
  std::string gamma = "auto";
  std::string inner = "cholesky";
  double rtol = 1e-8;
  int restart = 30;
  int maxit = 10000;
  std::string threads = "1";
  std::string out;
  std::string format = "csv";
  std::string ingestion = "lenient";
  std::string face_frame = "principal";
};

void add_common(CLI::App* app, Common& c, bool solver_list) {
  app->add_option("--mesh", c.mesh, "mesh file(s) in refinement order");
  app->add_option("--gen-cube", c.gen_cube, "structured cube sizes, e.g. 2,4,8");
  app->add_option("--order", c.order, "polynomial order k (1..4)")->check(CLI::Range(1, 4));
  app->add_option("--solver", c.solver,
                  solver_list ? "comma list of direct, block-schur, block-reg" : "direct, block-schur or block-reg");
  app->add_option("--gamma", c.gamma, "Block-Reg parameter: auto (h^2) or a positive value");
  app->add_option("--inner", c.inner, "Block-Reg inner solve: cholesky or amg")
      ->check(CLI::IsMember({"cholesky", "amg"}));
  app->add_option("--rtol", c.rtol, "GMRES relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--restart", c.restart, "GMRES restart length")->check(CLI::PositiveNumber);
  app->add_option("--maxit", c.maxit, "GMRES iteration cap")->check(CLI::PositiveNumber);
  app->add_option("--threads", c.threads, "worker count(s), e.g. 1,2,4");
  app->add_option("--out", c.out, "output directory (default: stdout)");
  app->add_option("--format", c.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--ingestion", c.ingestion, "mesh ingestion mode")->check(CLI::IsMember({"strict", "lenient"}));
  app->add_option("--face-frame", c.face_frame, "in-plane face axes")
      ->check(CLI::IsMember({"principal", "first-edge"}));
}

MeshSequence meshes_of(const Common& c) {
  if (c.mesh.empty() == c.gen_cube.empty()) throw ConfigError("give exactly one of --mesh or --gen-cube");
  MeshSequence seq;
  seq.ingestion = c.ingestion == "strict" ? Ingestion::strict : Ingestion::lenient;
  seq.face_frame = c.face_frame == "first-edge" ? FaceFrame::first_edge : FaceFrame::principal;
  if (!c.gen_cube.empty()) {
    seq.cube_sizes = parse_int_list(c.gen_cube);
    for (int n : seq.cube_sizes)
      if (n < 1) throw ConfigError("--gen-cube sizes must be >= 1");
  } else {
    for (const auto& m : c.mesh) seq.files.emplace_back(m);
  }
  return seq;
}

std::optional<double> gamma_of(const Common& c) {
  if (c.gamma == "auto") return std::nullopt;
  double g = 0.0;
  try {
    g = std::stod(c.gamma);
  } catch (const std::exception&) {
    throw ConfigError("--gamma must be 'auto' or a positive number");
  }
  if (!(g > 0.0)) throw ConfigError("--gamma must be positive");
  return g;
}

std::vector<int> threads_of(const Common& c) {
  auto t = parse_int_list(c.threads);
  for (int v : t)
    if (v < 1) throw ConfigError("--threads values must be >= 1");
  return t;
}

GmresOptions gmres_of(const Common& c) { return {c.rtol, c.restart, c.maxit}; }

void emit(const Common& c, const std::string& name, const std::string& body) {
  if (c.out.empty()) {
    std::cout << body;
    return;
  }
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / (name + "." + c.format);
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << body;
  std::cerr << "wrote " << path.string() << "\n";
}

int run_convergence_cmd(const Common& c) {
  ConvergenceConfig cfg;
  cfg.order = c.order;
  cfg.meshes = meshes_of(c);
  cfg.solver.kind = parse_solver_kind(c.solver);
  cfg.solver.gamma = gamma_of(c);
  cfg.solver.inner = parse_inner_solver(c.inner);
  cfg.gmres = gmres_of(c);
  cfg.threads = threads_of(c).front();
  const auto report = run_convergence(cfg);
  emit(c, "convergence", c.format == "json" ? convergence_json(report) : convergence_csv(report));
  return 0;
}

int run_bench_cmd(const Common& c, int repeats) {
  BenchConfig cfg;
  cfg.order = c.order;
  cfg.meshes = meshes_of(c);
  cfg.solvers.clear();
  std::stringstream ss(c.solver);
  std::string item;
  while (std::getline(ss, item, ',')) cfg.solvers.push_back(parse_solver_kind(item));
  cfg.gamma = gamma_of(c);
  cfg.inner = parse_inner_solver(c.inner);
  cfg.gmres = gmres_of(c);
  cfg.threads = threads_of(c);
  cfg.repeats = repeats;
  const auto rows = run_bench(cfg);
  emit(c, "bench", c.format == "json" ? bench_json(rows) : bench_csv(rows));
  return 0;
}

int run_solve_cmd(const Common& c, const std::string& export_path) {
  const MeshSequence seq = meshes_of(c);
  if (seq.size() != 1) throw ConfigError("solve takes a single mesh");
  const int threads = threads_of(c).front();
  const PreparedMesh mesh = seq.load(0, threads);
  const ManufacturedCase exact = builtin_case();
  const auto t0 = std::chrono::steady_clock::now();
  const SaddleSystem sys = assemble(mesh, c.order, exact.fields(), {threads});
  const double t_ass = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!export_path.empty()) export_triplets(export_path, sys.monolithic());
  PreconditionerSpec spec;
  spec.kind = parse_solver_kind(c.solver);
  spec.gamma = gamma_of(c);
  spec.inner = parse_inner_solver(c.inner);
  const Solution sol = solve(sys, spec, mesh.h, gmres_of(c));
  const ErrorPair e = compute_errors(mesh, sys, sol.u, sol.p, exact);
  Json j;
  j["mesh"] = seq.label(0);
  j["order"] = c.order;
  j["cells"] = mesh.num_cells();
  j["dofs"] = sys.size();
  j["h"] = mesh.h;
  j["solver"] = sol.report.solver;
  j["converged"] = sol.report.converged;
  j["iterations"] = sol.report.iterations;
  j["residual"] = sol.report.relative_residual;
  j["t_ass"] = t_ass;
  j["t_sol"] = sol.report.solve_seconds;
  j["e_v"] = e.e_v;
  j["e_q"] = e.e_q;
  if (c.format == "json") {
    emit(c, "solve", j.dump(2) + "\n");
  } else {
    std::string header, row;
    for (auto it = j.begin(); it != j.end(); ++it) {
      header += (header.empty() ? "" : ",") + it.key();
      row += (row.empty() ? "" : ",") + (it->is_string() ? it->get<std::string>() : it->dump());
    }
    emit(c, "solve", header + "\n" + row + "\n");
  }
  return sol.report.converged ? 0 : 4;
}

int run_mesh_info_cmd(const Common& c) {
  const MeshSequence seq = meshes_of(c);
  Json rows = Json::array();
  for (int i = 0; i < seq.size(); ++i) {
    const PreparedMesh mesh = seq.load(i, threads_of(c).front());
    double min_area = std::numeric_limits<double>::infinity(), min_vol = min_area, vol = 0.0;
    for (const auto& f : mesh.geometry.faces) min_area = std::min(min_area, f.area);
    for (const auto& cg : mesh.geometry.cells) {
      min_vol = std::min(min_vol, cg.volume);
      vol += cg.volume;
    }
    rows.push_back({{"mesh", seq.label(i)},
                    {"cells", mesh.num_cells()},
                    {"faces", mesh.num_faces()},
                    {"vertices", mesh.topology.num_vertices()},
                    {"boundary_faces", mesh.topology.boundary_faces().size()},
                    {"h", mesh.h},
                    {"min_face_area", min_area},
                    {"min_cell_volume", min_vol},
                    {"volume", vol},
                    {"dofs", dof_counts(c.order, mesh.topology).total}});
  }
  if (c.format == "json") {
    emit(c, "mesh-info", rows.dump(2) + "\n");
  } else {
    std::string out = "mesh,cells,faces,vertices,boundary_faces,h,min_face_area,min_cell_volume,volume,dofs\n";
    for (const auto& r : rows) {
      std::string line;
      for (auto it = r.begin(); it != r.end(); ++it)
        line += (line.empty() ? "" : ",") + (it->is_string() ? it->get<std::string>() : it->dump());
      out += line + "\n";
    }
    emit(c, "mesh-info", out);
  }
  return 0;
}

int report_error(const char* kind, const std::exception& e, int code) {
  Json j{{"error", kind}, {"message", e.what()}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed virtual element solver for 3D elliptic problems on polyhedral meshes"};
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);

  Common conv, bench, single, info;
  int repeats = 1;
  std::string export_path;

  auto* c1 = app.add_subcommand("convergence", "manufactured-solution convergence study");
  add_common(c1, conv, false);
  auto* c2 = app.add_subcommand("bench", "assembly timing and solver comparison");
  add_common(c2, bench, true);
  bench.solver = "direct,block-schur,block-reg";
  c2->add_option("--repeats", repeats, "assembly timing repetitions (fastest kept)")->check(CLI::PositiveNumber);
  auto* c3 = app.add_subcommand("solve", "assemble and solve the built-in case on one mesh");
  add_common(c3, single, false);
  c3->add_option("--export-matrix", export_path, "write the saddle-point matrix (Matrix Market)");
  auto* c4 = app.add_subcommand("mesh-info", "mesh statistics");
  add_common(c4, info, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c1->parsed()) return run_convergence_cmd(conv);
    if (c2->parsed()) return run_bench_cmd(bench, repeats);
    if (c3->parsed()) return run_solve_cmd(single, export_path);
    return run_mesh_info_cmd(info);
  } catch (const ConfigError& e) {
    return report_error("config", e, 2);
  } catch (const MeshError& e) {
    return report_error("mesh", e, 3);
  } catch (const DataError& e) {
    return report_error("data", e, 3);
  } catch (const IllConditionedError& e) {
    return report_error("ill-conditioned", e, 4);
  } catch (const SolverError& e) {
    return report_error("solver", e, 4);
  } catch (const Error& e) {
    return report_error("error", e, 5);
  } catch (const std::exception& e) {
    return report_error("internal", e, 6);
  }
}
