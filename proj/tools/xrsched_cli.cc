#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "xrsched/config.h"
#include "xrsched/exact_solver.h"
#include "xrsched/experiment.h"

namespace {

using namespace xrsched;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kInstance = 4,
};

constexpr const char* kOutputDirEnv = "XRSCHED_OUTPUT_DIR";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_simulate(const std::string& config_path, bool fast, const std::string& out_dir,
                 int workers) {
  ExperimentSpec spec = parse_config(config_path);
  if (fast) apply_fast_profile(spec);
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    spec.output_dir = env;
  }
  if (!out_dir.empty()) spec.output_dir = out_dir;
  spec.validate();

  RunOptions opts;
  opts.workers = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opts.on_run_done = [](const RunTuple& r, std::size_t done, std::size_t total) {
    fmt::print(stderr, "[{}/{}] {} psdb={} N={} drop={}\n", done, total, to_string(r.scheduler),
               format_psdb(r.psdb_ms), r.xr_per_cell, r.drop);
  };
  fmt::print(stderr, "config {} -> {} ({} runs, {} workers)\n", config_hash(spec), spec.output_dir,
             enumerate_runs(spec).size(), opts.workers);
  const auto result = run_experiment(spec, opts);

  fmt::print("{:<9} {:>7} {:>3} {:>8} {:>9} {:>8} {:>10}\n", "scheduler", "psdb_ms", "N",
             "satisf.", "p95_ms", "queued", "embb_mbps");
  for (const auto& p : result.points) {
    fmt::print("{:<9} {:>7} {:>3} {:>8.4f} {:>9.2f} {:>8.3f} {:>10.2f}\n", to_string(p.scheduler),
               format_psdb(p.psdb_ms), p.xr_per_cell, p.satisfaction, p.p95_delay_ms,
               p.avg_queued_ues, p.embb_cell_tp_mbps);
  }
  for (const auto& c : result.capacities) {
    fmt::print("capacity {} psdb={} -> {:.3f} ({})\n", to_string(c.scheduler),
               format_psdb(c.psdb_ms), c.capacity.value, to_string(c.capacity.censoring));
  }
  return kOk;
}

nlohmann::ordered_json solution_json(const MiniInstance& inst, const Assignment& a,
                                     const Evaluation& ev) {
  nlohmann::ordered_json j;
  j["objective"] = ev.objective;
  j["xr_term"] = ev.xr_term;
  j["embb_term"] = ev.embb_term;
  auto& grid = j["assignment"] = nlohmann::ordered_json::array();
  for (int s = 0; s < inst.num_slots; ++s) {
    auto row = nlohmann::ordered_json::array();
    for (int p = 0; p < inst.num_prbs; ++p) row.push_back(a[static_cast<std::size_t>(s * inst.num_prbs + p)]);
    grid.push_back(row);
  }
  j["gamma"] = ev.gamma;
  j["y"] = ev.y;
  return j;
}

int cmd_oracle(const std::string& instance_path) {
  const MiniInstance inst = parse_instance_json(read_file(instance_path));
  const auto exact = solve_exact(inst);
  const auto heur = heuristic_on_instance(inst);
  const auto checks = check_constraints(inst, exact.assignment, exact.evaluation);

  nlohmann::ordered_json j;
  j["exact"] = solution_json(inst, exact.assignment, exact.evaluation);
  j["exact"]["search_nodes"] = exact.nodes;
  j["heuristic"] = solution_json(inst, heur.assignment, heur.evaluation);
  const double gap = exact.evaluation.objective - heur.evaluation.objective;
  j["gap"] = gap;
  j["relative_gap"] = exact.evaluation.objective != 0.0 ? gap / std::abs(exact.evaluation.objective) : 0.0;
  bool all_pass = true;
  auto& cj = j["constraint_checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    cj.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    all_pass = all_pass && c.pass;
  }
  std::cout << j.dump(2) << "\n";
  if (!all_pass) {
    fmt::print(stderr, "exact solution failed a constraint check\n");
    return kInstance;
  }
  return kOk;
}

int cmd_validate(const std::string& config_path) {
  const ExperimentSpec spec = parse_config(config_path);
  fmt::print("{}: ok, config_hash={}, {} runs\n", config_path, config_hash(spec),
             enumerate_runs(spec).size());
  return kOk;
}

int cmd_defaults(const std::string& out) {
  const auto text = defaults_reference();
  if (out.empty()) {
    std::cout << text;
    return kOk;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f || !(f << text)) throw IoError(fmt::format("cannot write '{}'", out));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"XR PDU-set scheduling simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, instance_path, defaults_out;
  bool fast = false;
  int workers = 0;

  auto* sim = app.add_subcommand("simulate", "run a load sweep and write figure data");
  sim->add_option("--config", config_path, "config file")->required();
  sim->add_flag("--fast", fast, "4 cells, 3 drops, 5 s per drop");
  sim->add_option("--out", out_dir, "output directory (overrides config and environment)");
  sim->add_option("--workers", workers, "parallel drops (default: hardware threads)")
      ->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "solve a small instance exactly and compare");
  oracle->add_option("--instance", instance_path, "instance JSON file")->required();

  auto* validate = app.add_subcommand("validate-config", "parse and check a config file");
  validate->add_option("file", config_path, "config file")->required();

  auto* defaults = app.add_subcommand("defaults", "print every config key with its default");
  defaults->add_option("--out", defaults_out, "write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(config_path, fast, out_dir, workers);
    if (*oracle) return cmd_oracle(instance_path);
    if (*validate) return cmd_validate(config_path);
    if (*defaults) return cmd_defaults(defaults_out);
  } catch (const IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const InstanceError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInstance;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return kFailure;
  }
  return kFailure;
}
