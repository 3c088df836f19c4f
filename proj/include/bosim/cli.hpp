#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "kmc.hpp"
#include "master_equation.hpp"
#include "maxcut.hpp"
#include "problem.hpp"
#include "quantum_feedback.hpp"
#include "rates.hpp"
#include "version.hpp"

namespace bosim {

inline constexpr std::uint64_t kDefaultSeed = 42;

// Thrown for bad command lines and unusable configs (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

namespace cli {

using nlohmann::json;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> out;
    (out.push_back(cell(cells)), ...);
    row_strings(out);
  }

  const std::string& text() const noexcept { return text_; }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  void row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error("CSV row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("config is missing '") + key + "'");
  return get_or<T>(j, key, T{});
}

// A list given either explicitly or as {"from", "to", "points"} (linear).
inline std::vector<double> number_list(const json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("config is missing '") + key + "'");
  const json& v = j.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) return v.get<std::vector<double>>();
  const double from = require<double>(v, "from");
  const double to = require<double>(v, "to");
  const int points = require<int>(v, "points");
  if (points < 1) throw UsageError(std::string("'") + key + "' needs points >= 1");
  std::vector<double> out;
  for (int i = 0; i < points; ++i) out.push_back(points == 1 ? from : from + (to - from) * i / (points - 1));
  return out;
}

inline std::vector<int> int_list(const json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("config is missing '") + key + "'");
  const json& v = j.at(key);
  if (v.is_number_integer()) return {v.get<int>()};
  return v.get<std::vector<int>>();
}

// Instance description:
//   {"couplings": [[...]], "field": x}
//   {"two_level": {"gap": d}}
//   {"complete_graph": {"sites": m, "coupling": j, "field": x}}
//   {"ferromagnetic_pair": {"J": j, "lambda": l}}     H = -J S1 S2 - lambda N (S1 + S2)
//   {"graph_file": "path", "lambda_bias": x}
inline ProblemInstance make_instance(const json& spec, int bosons) {
  if (spec.contains("two_level")) return two_level_instance(bosons, require<double>(spec.at("two_level"), "gap"));
  if (spec.contains("complete_graph")) {
    const json& c = spec.at("complete_graph");
    return complete_graph_instance(require<int>(c, "sites"), bosons, require<double>(c, "coupling"),
                                   get_or<double>(c, "field", 0.0));
  }
  if (spec.contains("ferromagnetic_pair")) {
    const json& c = spec.at("ferromagnetic_pair");
    return ferromagnetic_pair_instance(bosons, require<double>(c, "J"), require<double>(c, "lambda"));
  }
  if (spec.contains("graph_file")) {
    const Graph g = parse_edge_list(read_file(spec.at("graph_file").get<std::string>()));
    return maxcut_instance(g, bosons, get_or<double>(spec, "lambda_bias", 0.0));
  }
  if (spec.contains("couplings")) {
    const auto rows = spec.at("couplings").get<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != rows.size()) throw UsageError("couplings must be a square matrix");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return ProblemInstance(static_cast<int>(rows.size()), bosons, std::move(flat), get_or<double>(spec, "field", 0.0));
  }
  throw UsageError("unrecognized instance description");
}

inline DynamicsParams make_dynamics(const json& config) {
  DynamicsParams p;
  if (!config.contains("dynamics")) return p;
  const json& d = config.at("dynamics");
  p.alpha = get_or<double>(d, "alpha", p.alpha);
  p.xi = get_or<double>(d, "xi", p.xi);
  p.delta_k_max = get_or<int>(d, "delta_k_max", p.delta_k_max);
  return p;
}

// "temperature" (k_B T) or "beta"; absent means T = infinity.
inline double config_beta(const json& config) {
  if (config.contains("beta")) return config.at("beta").get<double>();
  if (config.contains("temperature")) {
    const double t = config.at("temperature").get<double>();
    if (!(t > 0.0)) throw UsageError("temperature must be positive");
    return std::isinf(t) ? 0.0 : 1.0 / t;
  }
  return 0.0;
}

struct RunContext {
  json config;
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
  std::ostream* log = &std::cerr;
};

inline std::string run_equilibrium(const RunContext& ctx) {
  const json& c = ctx.config;
  const auto bosons = int_list(c, "bosons");
  const auto grid = number_list(c, "kT_over_JN");
  const double scale = require<double>(c, "energy_scale");
  std::vector<Statistics> kinds{Statistics::bosonic, Statistics::distinguishable};
  if (c.contains("kinds")) {
    kinds.clear();
    for (const auto& k : c.at("kinds").get<std::vector<std::string>>()) {
      if (k == "bosonic") kinds.push_back(Statistics::bosonic);
      else if (k == "distinguishable") kinds.push_back(Statistics::distinguishable);
      else throw UsageError("unknown statistics kind '" + k + "'");
    }
  }
  CsvWriter csv({"kind", "N", "kT_over_JN", "mean_spin_over_N", "error_prob"});
  for (Statistics kind : kinds) {
    for (int n : bosons) {
      const ExactEnsemble exact(make_instance(require<json>(c, "instance"), n));
      for (double x : grid) {
        const auto s = exact.stats(1.0 / (x * scale * n), kind);
        csv.row(to_string(kind), n, x, s.mean_spin[0] / n,
                s.error_probability ? *s.error_probability : std::numeric_limits<double>::quiet_NaN());
      }
    }
  }
  return csv.text();
}

inline std::string run_ode(const RunContext& ctx) {
  const json& c = ctx.config;
  const ProblemInstance instance = make_instance(require<json>(c, "instance"), require<int>(c, "bosons"));
  DynamicsParams params = make_dynamics(c);
  params.beta = config_beta(c);
  const ExactEnsemble exact(instance);
  const MasterGenerator generator(instance, params);
  const std::string init = get_or<std::string>(c, "initial", "half");
  if (init != "half" && init != "uniform") throw UsageError("initial must be 'half' or 'uniform'");
  const auto p0 = initial_distribution(generator.indexer(),
                                       init == "half" ? InitialCondition::half : InitialCondition::uniform);
  const auto times = uniform_grid(require<double>(c, "t_end"), static_cast<std::size_t>(get_or<int>(c, "points", 101)));
  const auto trajectory = evolve_distribution(generator, p0, times);
  const auto p_eq = exact.boltzmann(params.beta);
  const auto& pattern = *exact.ground_sign_patterns().begin();
  CsvWriter csv({"t", "L1_to_eq", "ground_pop"});
  for (const auto& d : trajectory)
    csv.row(d.time, l1_distance(d.p, p_eq), aligned_fraction(generator.indexer(), pattern, d.p));
  return csv.text();
}

inline std::string run_kmc(const RunContext& ctx) {
  const json& c = ctx.config;
  const ProblemInstance instance = make_instance(require<json>(c, "instance"), require<int>(c, "bosons"));
  DynamicsParams params = make_dynamics(c);
  EnsembleOptions options;
  options.n_traj = static_cast<std::size_t>(get_or<int>(c, "n_traj", 1000));
  options.master_seed = ctx.seed;
  options.threads = ctx.threads;
  const std::string init = get_or<std::string>(c, "initial", "uniform");
  if (init == "uniform") options.init = InitMode::uniform;
  else if (init == "half") options.init = InitMode::half;
  else throw UsageError("initial must be 'half' or 'uniform'");
  const ExactEnsemble exact(instance, options.rule);
  params.beta = c.contains("target_error") ? exact.beta_for_error(c.at("target_error").get<double>(), Statistics::bosonic)
                                           : config_beta(c);
  const double t_end = require<double>(c, "t_end");
  const auto times = uniform_grid(t_end, static_cast<std::size_t>(get_or<int>(c, "points", 51)));
  const auto schedule = AnnealingSchedule::constant(
      params.beta == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / params.beta, t_end);
  const auto summary = ensemble_statistics(exact, params, schedule, times, options);
  CsvWriter csv({"t", "error_est", "error_stderr", "mean_energy"});
  for (std::size_t i = 0; i < times.size(); ++i)
    csv.row(times[i], summary.error[i], summary.error_stderr[i], summary.mean_energy[i]);
  return csv.text();
}

inline std::string run_anneal(const RunContext& ctx) {
  const json& c = ctx.config;
  const DynamicsParams params = make_dynamics(c);
  EnsembleOptions options;
  options.n_traj = static_cast<std::size_t>(get_or<int>(c, "n_traj", 1000));
  options.master_seed = ctx.seed;
  options.threads = ctx.threads;
  AnnealOptions anneal;
  anneal.initial_error = get_or<double>(c, "initial_error", 0.7);
  anneal.n_slices = get_or<int>(c, "n_slices", 400);
  CsvWriter csv({"tau0", "N", "residual_energy", "stderr"});
  for (double tau0 : number_list(c, "tau0")) {
    for (int n : int_list(c, "bosons")) {
      const ExactEnsemble exact(make_instance(require<json>(c, "instance"), n), options.rule);
      const auto result = anneal_ensemble(exact, params, tau0, options, anneal);
      csv.row(tau0, n, result.summary.residual_energy, result.summary.residual_stderr);
    }
  }
  return csv.text();
}

inline std::string run_quantum(const RunContext& ctx) {
  const json& c = ctx.config;
  const int n = require<int>(c, "bosons");
  const auto rows = require<std::vector<std::vector<double>>>(c, "couplings");
  const int m = static_cast<int>(rows.size());
  RealMatrix couplings(m, m);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i].size()) != m) throw UsageError("couplings must be a square matrix");
    for (int j = 0; j < m; ++j) couplings(i, j) = rows[i][j];
  }
  FeedbackParams fp;
  if (c.contains("feedback")) {
    const json& f = c.at("feedback");
    fp.feedback_gain = get_or<double>(f, "Gamma", fp.feedback_gain);
    fp.efficiency = get_or<double>(f, "eta", fp.efficiency);
    fp.gamma_meas = get_or<double>(f, "gamma", fp.gamma_meas);
    fp.alpha = get_or<double>(f, "alpha", fp.alpha);
  }
  const SiteOperators ops = build_site_operators(n, m);
  ComplexMatrix rho0;
  const std::string init = get_or<std::string>(c, "initial", "maximally_mixed");
  if (init == "maximally_mixed") {
    rho0 = ComplexMatrix::Identity(static_cast<Eigen::Index>(ops.dim), static_cast<Eigen::Index>(ops.dim)) /
           static_cast<double>(ops.dim);
  } else if (init == "all_up") {
    const StateIndexer indexer(m, n);
    rho0 = basis_projector(ops.dim, indexer.encode(OccupationState(static_cast<std::size_t>(m), n)));
  } else {
    throw UsageError("initial must be 'maximally_mixed' or 'all_up'");
  }
  const auto times = uniform_grid(require<double>(c, "t_end"), static_cast<std::size_t>(get_or<int>(c, "points", 51)));
  const auto samples = evolve_density_matrix(ops, fp, couplings, rho0, times);
  CsvWriter csv({"t", "trace_defect", "offdiag_mass", "max_residual"});
  for (const auto& s : samples) {
    const auto d = inspect_density_matrix(s.rho);
    csv.row(s.time, d.trace_defect, d.offdiag_mass,
            feedback_generator_residual(ops, fp.feedback_gain, couplings, s.rho));
  }
  return csv.text();
}

struct MaxCutReport {
  double best_cut = 0.0;
  std::vector<int> best_signs;
};

// Best cut over `restarts` annealed trajectories, reading each final state
// with canonical_signs.
inline MaxCutReport anneal_maxcut(const Graph& graph, int bosons, double tau0, std::size_t restarts,
                                  const DynamicsParams& params, std::uint64_t seed, int threads,
                                  double initial_error = 0.7) {
  const ExactEnsemble exact(maxcut_instance(graph, bosons), ReadoutRule::any_pattern);
  EnsembleOptions options;
  options.n_traj = restarts;
  options.master_seed = seed;
  options.threads = threads;
  options.rule = ReadoutRule::any_pattern;
  AnnealOptions anneal;
  anneal.initial_error = initial_error;
  const auto result = anneal_ensemble(exact, params, tau0, options, anneal);
  MaxCutReport report;
  report.best_cut = -1.0;
  for (const auto& state : result.summary.final_states) {
    auto signs = canonical_signs(bosons, state);
    const double value = cut_value(graph, signs);
    if (value > report.best_cut) {
      report.best_cut = value;
      report.best_signs = std::move(signs);
    }
  }
  return report;
}

inline std::string run_maxcut(const RunContext& ctx, const std::string& graph_path, bool oracle, std::ostream& out) {
  const json& c = ctx.config;
  const Graph graph = parse_edge_list(read_file(graph_path));
  const auto report = anneal_maxcut(graph, get_or<int>(c, "bosons", 4), get_or<double>(c, "tau0", 10.0),
                                    static_cast<std::size_t>(get_or<int>(c, "restarts", 20)), make_dynamics(c),
                                    ctx.seed, ctx.threads, get_or<double>(c, "initial_error", 0.7));
  CsvWriter csv({"n_vertices", "n_edges", "best_cut", "oracle_cut"});
  std::string oracle_cell;
  out << "simulated best cut: " << format_number(report.best_cut);
  if (oracle) {
    const auto exact = brute_force_maxcut(graph);
    oracle_cell = format_number(exact.value);
    out << "   brute-force optimum: " << oracle_cell;
  }
  out << '\n';
  csv.row(graph.n_vertices, graph.edges.size(), report.best_cut, oracle_cell);
  return csv.text();
}

}  // namespace cli

// Entry point of the `bosim` tool. Returns 0 on success, 2 on usage errors
// and 1 on runtime errors.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using cli::json;
  CLI::App app{"Boson-accelerated Ising optimizer simulations", "bosim"};
  app.require_subcommand(1);
  app.fallthrough();  // subcommands inherit this when created
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "64-bit master seed")->capture_default_str();
  app.add_option("--out", out_path, "CSV output path (a .meta.json sidecar is written next to it)");
  app.add_option("--threads", threads, "worker threads for ensembles")->check(CLI::PositiveNumber);

  std::string graph_path;
  bool oracle = false;
  app.add_subcommand("equilibrium", "exact bosonic and distinguishable equilibrium over a temperature grid");
  app.add_subcommand("ode", "integrate the master equation and report distance to equilibrium");
  app.add_subcommand("kmc", "kinetic Monte Carlo ensemble at constant temperature");
  app.add_subcommand("anneal", "annealed KMC ensembles and residual energy");
  app.add_subcommand("quantum", "Lindblad evolution with measurement feedback");
  auto* maxcut = app.add_subcommand("maxcut", "anneal a MAX-CUT instance from an edge list");
  maxcut->add_option("--graph", graph_path, "edge-list file")->required();
  maxcut->add_flag("--oracle", oracle, "also report the brute-force optimum");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "bosim: " << e.what() << '\n';
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  cli::RunContext ctx;
  ctx.seed = seed;
  ctx.threads = threads;
  ctx.log = &err;
  std::string csv;
  try {
    if (!config_path.empty()) {
      try {
        ctx.config = json::parse(cli::read_file(config_path));
      } catch (const json::exception& e) {
        throw UsageError("config '" + config_path + "' is not valid JSON: " + e.what());
      }
    } else if (command != "maxcut") {
      throw UsageError(command + " needs --config");
    } else {
      ctx.config = json::object();
    }
    if (command == "equilibrium") csv = cli::run_equilibrium(ctx);
    else if (command == "ode") csv = cli::run_ode(ctx);
    else if (command == "kmc") csv = cli::run_kmc(ctx);
    else if (command == "anneal") csv = cli::run_anneal(ctx);
    else if (command == "quantum") csv = cli::run_quantum(ctx);
    else csv = cli::run_maxcut(ctx, graph_path, oracle, out);
  } catch (const UsageError& e) {
    err << "bosim " << command << ": " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    err << "bosim " << command << ": bad config: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "bosim " << command << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "bosim " << command << ": " << e.what() << '\n';
    return 1;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (out_path.empty()) {
    out << csv;
    return 0;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    err << "bosim: cannot write '" << out_path << "'\n";
    return 1;
  }
  file << csv;
  json meta = {{"command", command}, {"config", ctx.config}, {"seed", seed}, {"version", kVersion}, {"wall_seconds", wall}};
  std::ofstream sidecar(out_path + ".meta.json", std::ios::binary);
  sidecar << meta.dump(2) << '\n';
  if (!file || !sidecar) {
    err << "bosim: write failed for '" << out_path << "'\n";
    return 1;
  }
  return 0;
}

}  // namespace bosim
