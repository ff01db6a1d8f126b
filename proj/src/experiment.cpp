#include "ietidp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ietidp/parallel.hpp"

namespace ietidp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string splits_text(const std::vector<int> &splits) {
  std::string out;
  for (std::size_t i = 0; i < splits.size(); ++i) out += (i ? "x" : "") + std::to_string(splits[i]);
  return out;
}

std::vector<int> parse_splits_text(const std::string &text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x'))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string discretization_key(const ExperimentConfig &c) {
  std::ostringstream key;
  key << c.geometry << '|' << c.geometry_file << '|' << splits_text(c.splits) << '|' << format_double(c.twist) << '|'
      << c.subdivide << '|' << c.degree << '|' << c.refine;
  return key.str();
}

RunRecord base_record(const ExperimentConfig &config, const Discretization &disc) {
  RunRecord rec;
  rec.config = config;
  rec.patches = disc.multipatch.size();
  rec.dofs = disc.dofs.conforming_dimension();
  return rec;
}

Discretization discretize_impl(const ExperimentConfig &config, bool assemble) {
  config.validate();
  const auto start = Clock::now();
  Discretization disc;
  disc.multipatch = build_geometry(config);
  disc.topology = build_topology(disc.multipatch);
  const int n_patches = disc.multipatch.size();
  for (int k = 0; k < n_patches; ++k)
    disc.bases.push_back(TensorBasis::uniform(disc.multipatch.dim, config.degree, 1 << config.refine));
  disc.dofs = classify_dofs(disc.multipatch, disc.bases, disc.topology);
  disc.has_exact_solution = config.geometry == "square" || config.geometry == "cube";
  if (assemble) {
    disc.systems.resize(n_patches);
    const ScalarField source = manufactured_source;
    parallel_for(n_patches, config.threads, [&](int k) {
      const auto quad = default_rule(disc.bases[k]);
      disc.systems[k] = assemble_patch(disc.multipatch.patches[k], disc.bases[k], quad, disc.dofs.patches[k], source);
    });
  }
  disc.seconds = seconds_since(start);
  return disc;
}

// CSV

const std::vector<std::string> kCsvColumns{
    "geometry", "splits", "twist", "subdivide", "primal", "p", "r", "tol", "max_iter", "seed", "patches", "dofs",
    "multipliers", "primal_dofs", "it", "kappa", "lambda_min", "lambda_max", "converged", "final_residual", "t_setup",
    "t_solve", "l2_error", "max_jump", "status"};

std::string csv_quote(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

nlohmann::json config_json(const ExperimentConfig &c) {
  return {{"geometry", c.geometry},
          {"geometry_file", c.geometry_file},
          {"splits", c.splits},
          {"twist", c.twist},
          {"subdivide", c.subdivide},
          {"degree", c.degree},
          {"refine", c.refine},
          {"primal", c.primal.name()},
          {"edge_average_includes_endpoints", c.edge_average_includes_endpoints},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"seed", c.seed},
          {"threads", c.threads},
          {"max_dofs", c.max_dofs}};
}

ExperimentConfig config_from(const nlohmann::json &j) {
  ExperimentConfig c;
  c.geometry = j.at("geometry").get<std::string>();
  c.geometry_file = j.at("geometry_file").get<std::string>();
  c.splits = j.at("splits").get<std::vector<int>>();
  c.twist = j.at("twist").get<double>();
  c.subdivide = j.at("subdivide").get<int>();
  c.degree = j.at("degree").get<int>();
  c.refine = j.at("refine").get<int>();
  c.primal = PrimalChoice::parse(j.at("primal").get<std::string>());
  c.edge_average_includes_endpoints = j.at("edge_average_includes_endpoints").get<bool>();
  c.tol = j.at("tol").get<double>();
  c.max_iter = j.at("max_iter").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.max_dofs = j.at("max_dofs").get<long>();
  return c;
}

nlohmann::json record_json(const RunRecord &r) {
  nlohmann::json j{{"config", config_json(r.config)},
                   {"patches", r.patches},
                   {"dofs", r.dofs},
                   {"multipliers", r.multipliers},
                   {"primal_dofs", r.primal},
                   {"iterations", r.iterations},
                   {"condition", r.condition},
                   {"lambda_min", r.lambda_min},
                   {"lambda_max", r.lambda_max},
                   {"converged", r.converged},
                   {"final_residual", r.final_residual},
                   {"setup_seconds", r.setup_seconds},
                   {"solve_seconds", r.solve_seconds},
                   {"max_jump", r.max_jump},
                   {"status", r.status}};
  j["l2_error"] = r.l2_error ? nlohmann::json(*r.l2_error) : nlohmann::json(nullptr);
  return j;
}

RunRecord record_from(const nlohmann::json &j) {
  RunRecord r;
  r.config = config_from(j.at("config"));
  r.patches = j.at("patches").get<int>();
  r.dofs = j.at("dofs").get<long>();
  r.multipliers = j.at("multipliers").get<long>();
  r.primal = j.at("primal_dofs").get<long>();
  r.iterations = j.at("iterations").get<int>();
  r.condition = j.at("condition").get<double>();
  r.lambda_min = j.at("lambda_min").get<double>();
  r.lambda_max = j.at("lambda_max").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.final_residual = j.at("final_residual").get<double>();
  r.setup_seconds = j.at("setup_seconds").get<double>();
  r.solve_seconds = j.at("solve_seconds").get<double>();
  r.max_jump = j.at("max_jump").get<double>();
  r.status = j.at("status").get<std::string>();
  if (!j.at("l2_error").is_null()) r.l2_error = j.at("l2_error").get<double>();
  return r;
}

} // namespace

int ExperimentConfig::dim() const {
  if (geometry == "square") return 2;
  if (geometry == "file") return load_multipatch(geometry_file).dim;
  return 3;
}

void ExperimentConfig::validate() const {
  if (geometry != "square" && geometry != "cube" && geometry != "fichera" && geometry != "file")
    throw Error("cli", "unknown geometry '" + geometry + "' (expected square, cube, fichera or file)");
  if (geometry == "file" && geometry_file.empty()) throw Error("cli", "geometry 'file' needs a geometry path");
  const int d = geometry == "square" ? 2 : 3;
  if ((geometry == "square" || geometry == "cube") && !splits.empty() && static_cast<int>(splits.size()) != d)
    throw Error("cli", "--splits needs " + std::to_string(d) + " entries for " + geometry);
  for (int s : splits)
    if (s < 1) throw Error("cli", "--splits entries must be >= 1");
  if (geometry == "fichera" && std::abs(twist) > std::numbers::pi / 2) throw Error("cli", "--twist must be in [-pi/2, pi/2]");
  if (subdivide < 1) throw Error("cli", "--subdivide must be >= 1");
  if (degree < 1) throw Error("cli", "--degree must be >= 1");
  if (refine < 0 || refine > 10) throw Error("cli", "--refine must be in [0, 10]");
  if (geometry == "square" && primal.faces) throw Error("cli", "face averages (F) are not available in 2D");
  if (!(tol > 0)) throw Error("cli", "--tol must be positive");
  if (max_iter < 1) throw Error("cli", "--max-iter must be >= 1");
  if (threads < 1) throw Error("cli", "--threads must be >= 1");
  if (max_dofs < 0) throw Error("cli", "--max-dofs must be >= 0");
}

double manufactured_solution(const Eigen::VectorXd &x) {
  double u = 1;
  for (Index i = 0; i < x.size(); ++i) u *= std::sin(std::numbers::pi * x[i]);
  return u;
}

double manufactured_source(const Eigen::VectorXd &x) {
  return static_cast<double>(x.size()) * std::numbers::pi * std::numbers::pi * manufactured_solution(x);
}

MultiPatch build_geometry(const ExperimentConfig &config) {
  MultiPatch mp;
  if (config.geometry == "square" || config.geometry == "cube") {
    const int d = config.geometry == "square" ? 2 : 3;
    mp = make_unit_hypercube_multipatch(d, config.splits.empty() ? std::vector<int>(d, 2) : config.splits);
  } else if (config.geometry == "fichera") {
    mp = make_fichera(config.twist);
  } else {
    mp = load_multipatch(config.geometry_file);
  }
  return split_patches(mp, config.subdivide);
}

Discretization discretize(const ExperimentConfig &config) { return discretize_impl(config, true); }

RunRecord solve_discretization(const Discretization &disc, const ExperimentConfig &config) {
  RunRecord rec = base_record(config, disc);
  if (config.max_dofs > 0 && rec.dofs > config.max_dofs) {
    rec.status = "OoM";
    return rec;
  }
  const auto start = Clock::now();
  IetiOptions options;
  options.primal = config.primal;
  options.edge_average_includes_endpoints = config.edge_average_includes_endpoints;
  options.threads = config.threads;
  std::vector<SparseMatrix> stiffness;
  std::vector<Vector> loads;
  for (const auto &sys : disc.systems) {
    stiffness.push_back(sys.stiffness);
    loads.push_back(sys.load);
  }
  const IetiSystem ieti(disc.topology, disc.dofs, std::move(stiffness), options);
  const Vector g = ieti.rhs(loads);
  rec.setup_seconds = disc.seconds + seconds_since(start);
  rec.multipliers = ieti.multiplier_count();
  rec.primal = ieti.primal_count();

  const auto solve_start = Clock::now();
  const Vector x0 = random_vector(ieti.multiplier_count(), config.seed);
  const auto result = pcg(ieti.F_operator(), ieti.preconditioner().as_operator(), g, x0, config.tol, config.max_iter);
  const auto coefficients = ieti.recover(result.x, loads);
  rec.solve_seconds = seconds_since(solve_start);

  rec.iterations = result.report.iterations;
  rec.condition = result.report.condition;
  rec.lambda_min = result.report.lambda_min;
  rec.lambda_max = result.report.lambda_max;
  rec.converged = result.report.converged;
  rec.final_residual = result.report.residual_history.back();
  rec.max_jump = max_jump(disc.dofs, coefficients);
  rec.status = rec.converged ? "ok" : "not converged";

  if (disc.has_exact_solution) {
    double err2 = 0;
    const ScalarField exact = manufactured_solution;
    for (int k = 0; k < disc.multipatch.size(); ++k) {
      const auto coefs = expand_free(coefficients[k], disc.dofs.patches[k].free_to_tensor, disc.bases[k].size());
      err2 += l2_error_squared(disc.multipatch.patches[k], disc.bases[k], coefs, exact, config.degree + 2);
    }
    rec.l2_error = std::sqrt(err2);
  }
  return rec;
}

RunRecord run_experiment(const ExperimentConfig &config) { return solve_discretization(discretize(config), config); }

std::vector<RunRecord> sweep(const std::vector<ExperimentConfig> &configs, std::ostream *progress) {
  if (configs.empty()) throw Error("cli", "sweep needs at least one configuration");
  std::vector<RunRecord> out;
  std::string cached_key;
  std::optional<Discretization> cached;
  for (const auto &config : configs) {
    RunRecord rec;
    rec.config = config;
    try {
      const std::string key = discretization_key(config);
      if (key != cached_key) {
        cached.reset();
        cached_key.clear();
        auto light = discretize_impl(config, false);
        if (config.max_dofs > 0 && light.dofs.conforming_dimension() > config.max_dofs) {
          rec = base_record(config, light);
          rec.status = "OoM";
        } else {
          cached = discretize(config);
          cached_key = key;
        }
      }
      if (cached) rec = solve_discretization(*cached, config);
    } catch (const std::exception &e) {
      rec.status = std::string("error: ") + e.what();
    }
    if (progress)
      *progress << config.geometry << " p=" << config.degree << " r=" << config.refine << " "
                << config.primal.name() << ": it=" << rec.iterations << " kappa=" << rec.condition << " ["
                << rec.status << "]\n";
    out.push_back(rec);
  }
  return out;
}

std::string to_json(const RunRecord &record) { return record_json(record).dump(2); }

std::string to_json(const std::vector<RunRecord> &records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &r : records) arr.push_back(record_json(r));
  return arr.dump(2);
}

RunRecord record_from_json(const std::string &text) {
  try {
    return record_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception &e) {
    throw Error("cli", std::string("run record JSON: ") + e.what());
  }
}

std::vector<RunRecord> records_from_json(const std::string &text) {
  try {
    std::vector<RunRecord> out;
    for (const auto &j : nlohmann::json::parse(text)) out.push_back(record_from(j));
    return out;
  } catch (const nlohmann::json::exception &e) {
    throw Error("cli", std::string("run record JSON: ") + e.what());
  }
}

void write_csv(std::ostream &out, const std::vector<RunRecord> &records) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  for (const auto &r : records) {
    const auto &c = r.config;
    const std::vector<std::string> fields{c.geometry,
                                          splits_text(c.splits),
                                          format_double(c.twist),
                                          std::to_string(c.subdivide),
                                          c.primal.name(),
                                          std::to_string(c.degree),
                                          std::to_string(c.refine),
                                          format_double(c.tol),
                                          std::to_string(c.max_iter),
                                          std::to_string(c.seed),
                                          std::to_string(r.patches),
                                          std::to_string(r.dofs),
                                          std::to_string(r.multipliers),
                                          std::to_string(r.primal),
                                          std::to_string(r.iterations),
                                          format_double(r.condition),
                                          format_double(r.lambda_min),
                                          format_double(r.lambda_max),
                                          r.converged ? "1" : "0",
                                          format_double(r.final_residual),
                                          format_double(r.setup_seconds),
                                          format_double(r.solve_seconds),
                                          r.l2_error ? format_double(*r.l2_error) : "",
                                          format_double(r.max_jump),
                                          r.status};
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_quote(fields[i]);
    out << '\n';
  }
}

std::vector<RunRecord> read_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("cli", "CSV: missing header");
  const auto header = csv_split(line);
  if (header != kCsvColumns) throw Error("cli", "CSV: unexpected header");
  std::vector<RunRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != kCsvColumns.size())
      throw Error("cli", "CSV line " + std::to_string(line_no) + ": expected " + std::to_string(kCsvColumns.size()) +
                             " fields, got " + std::to_string(f.size()));
    RunRecord r;
    auto &c = r.config;
    try {
      c.geometry = f[0];
      c.splits = parse_splits_text(f[1]);
      c.twist = std::stod(f[2]);
      c.subdivide = std::stoi(f[3]);
      c.primal = PrimalChoice::parse(f[4]);
      c.degree = std::stoi(f[5]);
      c.refine = std::stoi(f[6]);
      c.tol = std::stod(f[7]);
      c.max_iter = std::stoi(f[8]);
      c.seed = std::stoull(f[9]);
      r.patches = std::stoi(f[10]);
      r.dofs = std::stol(f[11]);
      r.multipliers = std::stol(f[12]);
      r.primal = std::stol(f[13]);
      r.iterations = std::stoi(f[14]);
      r.condition = std::stod(f[15]);
      r.lambda_min = std::stod(f[16]);
      r.lambda_max = std::stod(f[17]);
      r.converged = f[18] == "1";
      r.final_residual = std::stod(f[19]);
      r.setup_seconds = std::stod(f[20]);
      r.solve_seconds = std::stod(f[21]);
      if (!f[22].empty()) r.l2_error = std::stod(f[22]);
      r.max_jump = std::stod(f[23]);
      r.status = f[24];
    } catch (const std::logic_error &e) {
      throw Error("cli", "CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(r);
  }
  return out;
}

void write_markdown(std::ostream &out, const std::vector<RunRecord> &records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord *>> blocks;
  for (const auto &r : records) {
    const auto name = r.config.primal.name();
    if (!blocks.count(name)) order.push_back(name);
    blocks[name].push_back(&r);
  }
  for (const auto &name : order) {
    out << "### Primal " << name << "\n\n";
    out << "| r | p | it | kappa | dofs | t_setup [s] | t_solve [s] |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto *r : blocks[name]) {
      out << "| " << r->config.refine << " | " << r->config.degree << " | ";
      if (r->status == "ok" || r->status == "not converged") {
        out << r->iterations << (r->converged ? "" : "*") << " | " << std::fixed << std::setprecision(2)
            << r->condition << " | " << r->dofs << " | " << std::setprecision(3) << r->setup_seconds << " | "
            << r->solve_seconds << " |\n";
        out.unsetf(std::ios::floatfield);
      } else {
        const std::string mark = r->status == "OoM" ? "OoM" : "ERR";
        out << mark << " | " << mark << " | " << r->dofs << " | - | - |\n";
      }
    }
    out << '\n';
  }
}

void write_plot_csv(std::ostream &out, const std::vector<RunRecord> &records) {
  out << "primal,p,r,dofs,iterations,kappa,t_setup,t_solve\n";
  for (const auto &r : records) {
    if (r.status != "ok") continue;
    out << r.config.primal.name() << ',' << r.config.degree << ',' << r.config.refine << ',' << r.dofs << ','
        << r.iterations << ',' << format_double(r.condition) << ',' << format_double(r.setup_seconds) << ','
        << format_double(r.solve_seconds) << '\n';
  }
}

} // namespace ietidp
