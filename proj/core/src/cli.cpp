#include "sdtp/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdtp/analysis.hpp"
#include "sdtp/feasibility.hpp"
#include "sdtp/io.hpp"
#include "sdtp/objective.hpp"
#include "sdtp/optimizer.hpp"
#include "sdtp/simulator.hpp"
#include "sdtp/workload.hpp"

namespace sdtp::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunConfig {
  json doc;
  std::string config_dir;
  std::string out_dir = ".";
  uint64_t seed = 1;
  std::vector<double> sigma_grid;
  io::Provenance prov;

  // Paths in the config are resolved relative to the config file.
  std::string resolve(const std::string& p) const {
    const fs::path path(p);
    if (path.is_absolute()) return p;
    return (fs::path(config_dir) / path).string();
  }
  std::string out_path(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }
};

OptimizerSettings settings_from(const json& doc) {
  OptimizerSettings s;
  if (!doc.contains("optimizer")) return s;
  const json& o = doc["optimizer"];
  s.epsilon = o.value("epsilon", s.epsilon);
  s.gamma0 = o.value("gamma0", s.gamma0);
  s.diminishing = o.value("diminishing", s.diminishing);
  s.max_outer = o.value("max_outer", s.max_outer);
  s.max_inner = o.value("max_inner", s.max_inner);
  s.inner_per_cycle = o.value("inner_per_cycle", s.inner_per_cycle);
  s.prox_weight = o.value("prox_weight", s.prox_weight);
  s.fd_gradients = o.value("fd_gradients", s.fd_gradients);
  s.validate();
  return s;
}

WorkloadSpec workload_from(const json& doc, uint64_t seed) {
  WorkloadSpec spec;
  if (!doc.contains("workload")) {
    throw std::runtime_error("config: missing workload section");
  }
  const json& w = doc["workload"];
  spec.files = w.value("files", spec.files);
  spec.pareto_shape = w.value("pareto_shape", spec.pareto_shape);
  spec.pareto_scale = w.value("pareto_scale", spec.pareto_scale);
  spec.max_length = w.value("max_length", spec.max_length);
  spec.tau = w.value("tau", spec.tau);
  spec.startup_delay = w.value("startup_delay", spec.startup_delay);
  spec.sigma = w.value("sigma", spec.sigma);
  spec.weight = w.value("weight", spec.weight);
  if (w.contains("rate_bands")) {
    spec.rate_bands.clear();
    for (const json& band : w["rate_bands"]) {
      spec.rate_bands.push_back(
          {band.at("count").get<int>(), band.at("rate").get<double>()});
    }
  }
  spec.seed = seed;
  spec.validate();
  return spec;
}

SystemTopology topology_from(const RunConfig& cfg) {
  if (!cfg.doc.contains("topology")) {
    throw std::runtime_error("config: missing topology path");
  }
  return io::load_topology(cfg.resolve(cfg.doc["topology"].get<std::string>()));
}

VideoCatalog catalog_from(const RunConfig& cfg) {
  if (!cfg.doc.contains("catalog")) {
    throw std::runtime_error("config: missing catalog path");
  }
  VideoCatalog cat =
      io::load_catalog_csv(cfg.resolve(cfg.doc["catalog"].get<std::string>()));
  if (cfg.doc.contains("catalog_meta")) {
    const json& meta = cfg.doc["catalog_meta"];
    cat.tau = meta.value("tau", cat.tau);
    cat.startup_delay = meta.value("startup_delay", cat.startup_delay);
    cat.sigma = meta.value("sigma", cat.sigma);
    cat.validate();
  }
  return cat;
}

ControlPoint point_from(const RunConfig& cfg, const SystemTopology& topo,
                        const VideoCatalog& cat) {
  if (cfg.doc.contains("control_point")) {
    return io::load_control_point(
        cfg.resolve(cfg.doc["control_point"].get<std::string>()), topo, cat);
  }
  return closest_feasible(uniform_control_point(topo, cat), topo, cat);
}

std::vector<double> default_sigma_grid(const VideoCatalog& cat) {
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k) grid.push_back(cat.sigma * k / 4.0);
  return grid;
}

int cmd_gen_workload(const RunConfig& cfg) {
  const WorkloadSpec spec = workload_from(cfg.doc, cfg.seed);
  const VideoCatalog cat = generate_catalog(spec);
  io::save_catalog_csv(cat, cfg.out_path("catalog.csv"), cfg.prov);
  return 0;
}

int cmd_eval_bound(const RunConfig& cfg) {
  const SystemTopology topo = topology_from(cfg);
  const VideoCatalog cat = catalog_from(cfg);
  const ControlPoint pt = point_from(cfg, topo, cat);
  const std::vector<double> grid =
      cfg.sigma_grid.empty() ? default_sigma_grid(cat) : cfg.sigma_grid;
  std::vector<BoundReport> reports;
  reports.reserve(grid.size());
  for (double sigma : grid) {
    reports.push_back(bound_report(sigma, topo, cat, pt));
  }
  io::write_bound_csv(cfg.out_path("bounds.csv"), cfg.prov, grid, reports);
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const SystemTopology topo = topology_from(cfg);
  const VideoCatalog cat = catalog_from(cfg);
  const ControlPoint pt = point_from(cfg, topo, cat);
  SimConfig sim{topo, cat, pt};
  sim.seed = cfg.seed;
  if (cfg.doc.contains("sim")) {
    const json& s = cfg.doc["sim"];
    sim.horizon = s.value("horizon", sim.horizon);
    sim.warmup = s.value("warmup", sim.warmup);
    sim.keep_segments = s.value("per_segment_csv", false);
  } else {
    sim.keep_segments = false;
  }
  const SimTrace trace = run_sim(sim);
  const std::vector<double> grid =
      cfg.sigma_grid.empty() ? default_sigma_grid(cat) : cfg.sigma_grid;
  io::write_trace_csv(cfg.out_path("trace.csv"), cfg.prov, trace);
  io::write_empirical_csv(cfg.out_path("empirical.csv"), cfg.prov,
                          empirical_sdtp(trace, cat, grid));
  if (sim.keep_segments) {
    io::write_segments_csv(cfg.out_path("segments.csv"), cfg.prov, trace);
  }
  return 0;
}

int cmd_optimize(const RunConfig& cfg) {
  const SystemTopology topo = topology_from(cfg);
  const VideoCatalog cat = catalog_from(cfg);
  const ControlPoint start = closest_feasible(point_from(cfg, topo, cat),
                                              topo, cat);
  const OptimizerSettings settings = settings_from(cfg.doc);
  auto [point, trace] = alternate(topo, cat, start, settings);
  io::save_control_point(point, cfg.out_path("point_opt.json"), cfg.prov);
  io::write_opt_trace_csv(cfg.out_path("opt_trace.csv"), cfg.prov, trace);
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  const SystemTopology topo = topology_from(cfg);
  const VideoCatalog cat = catalog_from(cfg);
  const OptimizerSettings settings = settings_from(cfg.doc);
  std::vector<std::string> names = {"OPT", "PEA", "PEB",    "PSP",
                                    "PEC", "CHF", "FIXED_T"};
  if (cfg.doc.contains("compare") &&
      cfg.doc["compare"].contains("strategies")) {
    names = cfg.doc["compare"]["strategies"].get<std::vector<std::string>>();
  }
  const std::vector<double> grid =
      cfg.sigma_grid.empty() ? default_sigma_grid(cat) : cfg.sigma_grid;
  std::vector<io::CompareRow> rows;
  for (const std::string& name : names) {
    const StrategyResult res =
        run_strategy(strategy_from_name(name), topo, cat, settings);
    io::CompareRow row;
    row.strategy = name;
    row.objective = res.objective;
    for (double sigma : grid) {
      row.per_sigma.push_back(bound_report(sigma, topo, cat, res.point)
                                  .objective);
    }
    rows.push_back(std::move(row));
  }
  io::write_compare_csv(cfg.out_path("compare.csv"), cfg.prov, grid, rows);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::string* error_line) {
  CLI::App app{"stall-tail bound evaluation, simulation and optimization"};
  std::string command, config_path, out_dir, sigma_csv;
  std::optional<uint64_t> seed_flag;
  app.add_option("--command", command,
                 "one of: gen-workload, eval-bound, simulate, optimize, "
                 "compare")
      ->required();
  app.add_option("--config", config_path, "run configuration (JSON)")
      ->required();
  app.add_option("--out", out_dir, "output directory (default: from config)");
  app.add_option("--seed", seed_flag, "seed override");
  app.add_option("--sigma-grid", sigma_csv,
                 "comma-separated threshold grid override");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const std::string msg = std::string("error: ") + e.what();
    if (error_line) *error_line = msg;
    std::cerr << msg << '\n';
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    const std::string raw = io::read_file(config_path);
    cfg.doc = json::parse(raw);
    cfg.config_dir = fs::path(config_path).parent_path().string();
    cfg.out_dir = cfg.doc.value("output_dir", std::string("."));
    if (!fs::path(cfg.out_dir).is_absolute()) {
      cfg.out_dir = cfg.resolve(cfg.out_dir);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.seed = cfg.doc.value("seed", 1ULL);
    if (seed_flag) cfg.seed = *seed_flag;
    if (cfg.doc.contains("sigma_grid")) {
      cfg.sigma_grid = cfg.doc["sigma_grid"].get<std::vector<double>>();
    }
    if (!sigma_csv.empty()) {
      cfg.sigma_grid.clear();
      std::istringstream ss(sigma_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        cfg.sigma_grid.push_back(std::strtod(tok.c_str(), nullptr));
      }
    }
    for (size_t k = 1; k < cfg.sigma_grid.size(); ++k) {
      if (cfg.sigma_grid[k] <= cfg.sigma_grid[k - 1]) {
        throw std::runtime_error("sigma grid must be strictly increasing");
      }
    }
    fs::create_directories(cfg.out_dir);
    cfg.prov.tool = "sdtp";
    cfg.prov.seed = cfg.seed;
    cfg.prov.config_hash = io::hash_bytes_hex(raw);

    if (command == "gen-workload") return cmd_gen_workload(cfg);
    if (command == "eval-bound") return cmd_eval_bound(cfg);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "optimize") return cmd_optimize(cfg);
    if (command == "compare") return cmd_compare(cfg);
    throw std::runtime_error("unknown command: " + command);
  } catch (const std::exception& e) {
    const std::string msg = std::string("error: ") + e.what();
    if (error_line) *error_line = msg;
    std::cerr << msg << '\n';
    return 1;
  }
}

}  // namespace sdtp::cli
