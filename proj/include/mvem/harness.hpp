// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mvem/solver.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvem {

/// Exact pair (v, q) with nu v + grad q = 0, source f = div v and boundary
/// flux u_N = v . n.
struct ManufacturedCase {
  std::string name;
  VectorField velocity;
  ScalarField pressure;
  ScalarField source;
  double nu = 1.0;

  CoefficientField fields() const;
};

/// v = (-5x^4 - y^2 z^3, -24y^3 - 2xyz^3, -27z^2 - 3xy^2z^2),
/// q = x^5 + 6y^4 + 9z^3 + xy^2z^3, nu = 1.
ManufacturedCase builtin_case();
/// q = x - 1/2, v = (-1, 0, 0).
ManufacturedCase linear_pressure_case();
/// q a fixed full polynomial of the given degree (deterministic coefficients),
/// v = -grad q / nu.
ManufacturedCase polynomial_case(int degree, double nu = 1.0);

struct ExactNorms {
  double velocity = 0.0;       ///< ||v||_0
  double pressure = 0.0;       ///< ||q - mean q||_0
  double pressure_mean = 0.0;  ///< mean of q over the domain
};

ExactNorms exact_norms(const PreparedMesh& mesh, const ManufacturedCase& exact, int degree);

struct ErrorPair {
  double e_v = 0.0;
  double e_q = 0.0;
};

/// e_v from Pi u_h against v, e_q from q_h against q - mean q, both relative
/// to `norms` and integrated at `degree`.
ErrorPair compute_errors(const PreparedMesh& mesh, const SaddleSystem& system, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& p, const ManufacturedCase& exact, const ExactNorms& norms,
                         int degree);
/// Same, with norms and degree 2k + 4 taken on `mesh`.
ErrorPair compute_errors(const PreparedMesh& mesh, const SaddleSystem& system, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& p, const ManufacturedCase& exact);

/// Distance of q_h from the moments interpolant of q - mean q, relative to
/// the interpolant's norm.
double pressure_interpolant_error(const PreparedMesh& mesh, const SaddleSystem& system, const Eigen::VectorXd& p,
                                  const ManufacturedCase& exact);

/// ln(e_coarse / e_fine) / ln(h_coarse / h_fine).
double observed_rate(double e_coarse, double e_fine, double h_coarse, double h_fine);

/// Generated cubes or mesh files, in refinement order.
struct MeshSequence {
  std::vector<int> cube_sizes;
  std::vector<std::filesystem::path> files;
  Ingestion ingestion = Ingestion::lenient;
  FaceFrame face_frame = FaceFrame::principal;

  int size() const { return static_cast<int>(cube_sizes.empty() ? files.size() : cube_sizes.size()); }
  std::string label(int i) const;
  PreparedMesh load(int i, int threads = 1) const;
};

struct ConvergenceConfig {
  int order = 1;
  MeshSequence meshes;
  PreconditionerSpec solver;
  GmresOptions gmres;
  int threads = 1;
};

struct LevelResult {
  std::string mesh;
  double h = 0.0;
  int cells = 0;
  long long dofs = 0;
  double e_v = 0.0;
  double e_q = 0.0;
  std::optional<double> rate_v;
  std::optional<double> rate_q;
  SolveReport solve;
  double assembly_seconds = 0.0;
  std::string error;  ///< non-empty when the level failed
};

struct ErrorReport {
  int order = 1;
  std::string solver;
  std::vector<LevelResult> levels;
};

/// Solves the built-in case on every level. Failures are recorded per level
/// and the run continues. Norms come from the finest level.
ErrorReport run_convergence(const ConvergenceConfig& config, const ManufacturedCase& exact = builtin_case());

/// Fills rate_v / rate_q between consecutive successful levels with
/// strictly decreasing h.
void compute_rates(ErrorReport& report);

struct BenchConfig {
  int order = 2;
  MeshSequence meshes;
  std::vector<SolverKind> solvers{SolverKind::direct, SolverKind::block_schur, SolverKind::block_reg};
  std::optional<double> gamma;
  InnerSolver inner = InnerSolver::cholesky;
  GmresOptions gmres;
  std::vector<int> threads{1};
  int repeats = 1;  ///< assembly timings keep the fastest of this many runs
};

struct BenchSolverResult {
  SolverKind kind = SolverKind::direct;
  int iterations = 0;
  double seconds = 0.0;
  double residual = 0.0;
  bool converged = false;
  double difference = 0.0;  ///< relative difference from the first solver's solution
  std::string error;
};

struct BenchRow {
  std::string mesh;
  int cells = 0;
  long long dofs = 0;
  double h = 0.0;
  std::map<int, double> assembly_seconds;
  std::map<int, double> speedup;
  double matrix_difference = 0.0;  ///< max relative entry difference vs the first thread count
  std::vector<BenchSolverResult> solvers;
};

std::vector<BenchRow> run_bench(const BenchConfig& config, const ManufacturedCase& exact = builtin_case());

/// max |a_ij - b_ij| / max |a_ij|; infinity on a shape mismatch.
double max_relative_entry_difference(const SpMat& a, const SpMat& b);

std::string convergence_csv(const ErrorReport& report);
std::string convergence_json(const ErrorReport& report);
std::string bench_csv(const std::vector<BenchRow>& rows);
std::string bench_json(const std::vector<BenchRow>& rows);

/// Parses "2,4,8" into integers; throws ConfigError on bad input.
std::vector<int> parse_int_list(const std::string& text);

}  // namespace mvem
