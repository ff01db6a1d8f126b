#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ietidp/assembly.hpp"
#include "ietidp/geometry.hpp"
#include "ietidp/ieti.hpp"
#include "ietidp/krylov.hpp"
#include "ietidp/topology.hpp"

namespace ietidp {

struct ExperimentConfig {
  /// "square", "cube", "fichera", or "file" (with geometry_file).
  std::string geometry = "cube";
  std::string geometry_file;
  /// Patch counts per direction for square/cube; empty selects 2 per direction.
  std::vector<int> splits;
  /// Fichera twist in radians. Our own construction, not a published map.
  double twist = 0.3;
  /// Uniform patch subdivision m (each patch becomes m^d patches).
  int subdivide = 1;
  int degree = 2;
  /// Refinement level r: 2^r knot spans per patch and direction.
  int refine = 1;
  PrimalChoice primal{true, true, false};
  bool edge_average_includes_endpoints = false;
  double tol = 1e-6;
  int max_iter = 2000;
  std::uint64_t seed = 42;
  int threads = 1;
  /// Rows whose dof count exceeds this are reported as "OoM" without solving; 0 disables.
  long max_dofs = 0;

  int dim() const;
  void validate() const;
};

/// Geometry, topology, bases and assembled patch systems shared by all
/// primal choices at a given (geometry, degree, refinement).
struct Discretization {
  MultiPatch multipatch;
  Topology topology;
  std::vector<TensorBasis> bases;
  DofClassification dofs;
  std::vector<PatchSystem> systems;
  bool has_exact_solution = false;
  double seconds = 0;
};

struct RunRecord {
  ExperimentConfig config;
  int patches = 0;
  long dofs = 0;
  long multipliers = 0;
  long primal = 0;
  int iterations = 0;
  double condition = 0;
  double lambda_min = 0;
  double lambda_max = 0;
  bool converged = false;
  double final_residual = 0;
  double setup_seconds = 0;
  double solve_seconds = 0;
  /// L2 error against prod sin(pi x_i); absent when that is not the exact solution.
  std::optional<double> l2_error;
  /// Largest coefficient spread across matched dofs after recovery.
  double max_jump = 0;
  /// "ok", "not converged", "OoM" or "error: ...".
  std::string status = "ok";
};

MultiPatch build_geometry(const ExperimentConfig &config);
Discretization discretize(const ExperimentConfig &config);
RunRecord solve_discretization(const Discretization &disc, const ExperimentConfig &config);
RunRecord run_experiment(const ExperimentConfig &config);

/// Right-hand side d pi^2 prod sin(pi x_i) and its exact solution on the unit hypercube.
double manufactured_source(const Eigen::VectorXd &x);
double manufactured_solution(const Eigen::VectorXd &x);

/// Runs all configs, reusing discretizations between primal choices. Failures
/// are recorded in the row status instead of aborting the sweep.
std::vector<RunRecord> sweep(const std::vector<ExperimentConfig> &configs, std::ostream *progress = nullptr);

std::string to_json(const RunRecord &record);
std::string to_json(const std::vector<RunRecord> &records);
RunRecord record_from_json(const std::string &text);
std::vector<RunRecord> records_from_json(const std::string &text);

void write_csv(std::ostream &out, const std::vector<RunRecord> &records);
std::vector<RunRecord> read_csv(std::istream &in);
/// One block per primal choice: rows r, column pairs (it, kappa) per degree.
void write_markdown(std::ostream &out, const std::vector<RunRecord> &records);
/// Series for plotting: kappa and solve time against r and p per primal choice.
void write_plot_csv(std::ostream &out, const std::vector<RunRecord> &records);

} // namespace ietidp
