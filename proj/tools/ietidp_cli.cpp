// Experiment driver: builds a multipatch geometry, discretizes it with
// tensor B-splines and solves the Poisson problem with IETI-DP, sweeping
// degree, refinement and primal choice.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ietidp/experiment.hpp"

namespace {

void dump_matrices(const ietidp::ExperimentConfig &config, const std::string &dir) {
  using namespace ietidp;
  std::filesystem::create_directories(dir);
  const auto disc = discretize(config);
  IetiOptions options;
  options.primal = config.primal;
  options.edge_average_includes_endpoints = config.edge_average_includes_endpoints;
  const auto primal = build_primal_constraints(disc.topology, disc.dofs, options);
  const auto jumps = build_jump_matrix(disc.dofs, config.primal, &primal);
  for (int k = 0; k < disc.multipatch.size(); ++k) {
    const auto stem = dir + "/patch" + std::to_string(k);
    write_matrix_market(stem + "_A.mtx", disc.systems[k].stiffness);
    write_matrix_market(stem + "_B.mtx", jumps.global(k));
    write_matrix_market(stem + "_C.mtx", primal.constraints[k]);
  }
}

} // namespace

int main(int argc, char **argv) {
  using namespace ietidp;
  CLI::App app{"IETI-DP solver for the Poisson problem on multipatch B-spline domains"};
  app.get_formatter()->column_width(40);

  ExperimentConfig base;
  std::vector<int> degrees{2};
  std::vector<int> levels{1};
  std::vector<std::string> primals{"VE"};
  std::string out_json, table_csv, markdown_path, plot_csv, save_geometry, dump_dir;

  app.add_option("--geometry", base.geometry, "Built-in geometry")
      ->check(CLI::IsMember({"square", "cube", "fichera"}))
      ->capture_default_str();
  app.add_option("--geometry-file", base.geometry_file, "Multipatch JSON file (overrides --geometry)")
      ->check(CLI::ExistingFile);
  app.add_option("--splits", base.splits, "Patches per direction for square/cube, e.g. 2,2,2 (default 2 each)")
      ->delimiter(',');
  app.add_option("--twist", base.twist, "Fichera twist angle in radians")->capture_default_str();
  app.add_option("--subdivide", base.subdivide, "Split every patch into M^d patches")->capture_default_str();
  app.add_option("--degree", degrees, "Spline degree(s) P, comma separated")->delimiter(',')->capture_default_str();
  app.add_option("--refine", levels, "Refinement level(s) R (2^R spans per patch)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--primal", primals, "Primal choice(s): V,E,F,VE,VF,EF,VEF,none")
      ->delimiter(',')
      ->capture_default_str();
  app.add_flag("--edge-average-includes-endpoints", base.edge_average_includes_endpoints,
               "Include edge end-vertex dofs in edge averages");
  app.add_option("--tol", base.tol, "Relative residual reduction")->capture_default_str();
  app.add_option("--max-iter", base.max_iter, "PCG iteration limit")->capture_default_str();
  app.add_option("--seed", base.seed, "Seed of the random PCG start vector")->capture_default_str();
  app.add_option("--threads", base.threads, "Worker threads for patch-local work")->capture_default_str();
  app.add_option("--max-dofs", base.max_dofs, "Mark runs above this many dofs as OoM (0: no limit)")
      ->capture_default_str();
  app.add_option("--out", out_json, "Write run records as JSON");
  app.add_option("--table", table_csv, "Write the results table as CSV");
  app.add_option("--markdown", markdown_path, "Write the results table as Markdown");
  app.add_option("--plot-data", plot_csv, "Write plot series (kappa, times vs r and p) as CSV");
  app.add_option("--save-geometry", save_geometry, "Write the (subdivided) multipatch as JSON and continue");
  app.add_option("--dump-matrices", dump_dir, "Write A, B, C of every patch (first configuration) as MatrixMarket");

  CLI11_PARSE(app, argc, argv);
  if (!base.geometry_file.empty()) base.geometry = "file";

  std::vector<ExperimentConfig> configs;
  try {
    for (int p : degrees)
      for (int r : levels)
        for (const auto &name : primals) {
          ExperimentConfig c = base;
          c.degree = p;
          c.refine = r;
          c.primal = PrimalChoice::parse(name);
          c.validate();
          configs.push_back(c);
        }
    if (!save_geometry.empty()) save_multipatch(build_geometry(base), save_geometry);
    if (!dump_dir.empty()) dump_matrices(configs.front(), dump_dir);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  std::vector<RunRecord> records;
  if (configs.size() == 1) {
    try {
      records.push_back(run_experiment(configs.front()));
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  } else {
    records = sweep(configs, &std::cerr);
  }

  write_markdown(std::cout, records);
  for (const auto &r : records)
    if (r.l2_error) std::cout << "L2 error (p=" << r.config.degree << ", r=" << r.config.refine << ", "
                              << r.config.primal.name() << "): " << *r.l2_error << '\n';

  const auto write = [](const std::string &path, auto &&fn) {
    if (path.empty()) return;
    std::ofstream file(path);
    if (!file) throw Error("cli", "cannot open " + path + " for writing");
    fn(file);
  };
  try {
    write(out_json, [&](std::ostream &os) { os << (records.size() == 1 ? to_json(records.front()) : to_json(records)) << '\n'; });
    write(table_csv, [&](std::ostream &os) { write_csv(os, records); });
    write(markdown_path, [&](std::ostream &os) { write_markdown(os, records); });
    write(plot_csv, [&](std::ostream &os) { write_plot_csv(os, records); });
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  int code = 0;
  for (const auto &r : records) {
    if (r.status.rfind("error", 0) == 0) {
      std::cerr << r.status << '\n';
      code = 1;
    } else if (r.status == "not converged" && code == 0) {
      code = 2;
    }
  }
  return code;
}
