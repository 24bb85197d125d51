// race: closed-loop overtaking simulator CLI.
//
// Subcommands:
//   race run      --config <file> [--seeds a,b,c] --out <dir>
//   race sweep    --config <file> --param <name> --values v1,v2 --seeds n --out <dir>
//   race validate --config <file>
//
// Exit codes: 0 success, 1 run/I-O failure, 2 usage or config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gpsmpc/config.hpp"
#include "gpsmpc/sim.hpp"
#include "gpsmpc/trace.hpp"

namespace fs = std::filesystem;
using namespace gpsmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitUsage = 2;

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

bool prepare_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "race: cannot create output directory '" << out_dir
              << "': " << ec.message() << "\n";
    return false;
  }
  // Probe writability before producing anything.
  const fs::path probe = fs::path(out_dir) / ".race_write_probe";
  std::ofstream test(probe);
  if (!test) {
    std::cerr << "race: output directory '" << out_dir << "' is not writable\n";
    return false;
  }
  test.close();
  fs::remove(probe, ec);
  return true;
}

int cmd_run(const std::string& config_path,
            const std::vector<std::uint64_t>& seed_override,
            const std::string& out_dir, int jobs) {
  ScenarioConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "race: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::vector<std::uint64_t> seeds =
      seed_override.empty() ? config.run.seeds : seed_override;

  if (!prepare_out_dir(out_dir)) {
    return kExitRunFailure;
  }

  const std::string hash = config_hash(config);
  const std::vector<RunResult> results = run_batch(config, seeds, jobs);

  try {
    for (const RunResult& r : results) {
      const fs::path path =
          fs::path(out_dir) / ("trace_" + std::to_string(r.seed) + ".csv");
      write_trace_csv(path.string(), r, config.N, hash);
    }
    std::ofstream summary(fs::path(out_dir) / "summary.json");
    if (!summary) {
      throw std::runtime_error("cannot open summary.json for writing");
    }
    summary << summary_json(results, hash) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "race: " << e.what() << "\n";
    return kExitRunFailure;
  }

  int failures = 0;
  for (const RunResult& r : results) {
    std::cout << "seed " << r.seed << ": "
              << (r.failed ? "FAILED"
                           : (r.overtake_success ? "overtake" : "no overtake"))
              << (r.collision ? " (collision)" : "") << ", min_gap=" << r.min_gap
              << ", infeasible_cycles=" << r.infeasible_cycles << "\n";
    failures += r.failed ? 1 : 0;
  }
  std::cout << "wrote " << results.size() << " trace file(s) and summary.json to "
            << out_dir << "\n";
  return failures == 0 ? kExitOk : kExitRunFailure;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<double>& values, int seed_count,
              const std::string& out_dir, int jobs) {
  if (values.empty()) {
    std::cerr << "race: sweep needs at least one --values entry\n";
    return kExitUsage;
  }
  if (seed_count < 1) {
    std::cerr << "race: sweep needs --seeds >= 1\n";
    return kExitUsage;
  }
  ScenarioConfig base;
  try {
    base = load_config(config_path);
    ScenarioConfig probe = base;
    set_sweep_parameter(probe, param, values.front());
  } catch (const ConfigError& e) {
    std::cerr << "race: " << e.what() << "\n";
    return kExitUsage;
  }

  if (!prepare_out_dir(out_dir)) {
    return kExitRunFailure;
  }

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(seed_count));
  for (int i = 0; i < seed_count; ++i) {
    seeds[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i + 1);
  }

  std::ofstream csv(fs::path(out_dir) / "sweep.csv");
  if (!csv) {
    std::cerr << "race: cannot open sweep.csv for writing\n";
    return kExitRunFailure;
  }
  csv << "param,value,seed,success,min_gap,infeasible_cycles\n";

  int failures = 0;
  for (double value : values) {
    ScenarioConfig config = base;
    try {
      set_sweep_parameter(config, param, value);
    } catch (const ConfigError& e) {
      std::cerr << "race: " << e.what() << "\n";
      return kExitUsage;
    }
    const std::vector<RunResult> results = run_batch(config, seeds, jobs);
    for (const RunResult& r : results) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", r.min_gap);
      csv << param << ',' << value << ',' << r.seed << ','
          << (r.overtake_success ? 1 : 0) << ',' << buf << ','
          << r.infeasible_cycles << "\n";
      failures += r.failed ? 1 : 0;
    }
  }
  csv.close();
  std::cout << "wrote sweep.csv (" << values.size() * seeds.size()
            << " rows) to " << out_dir << "\n";
  return failures == 0 ? kExitOk : kExitRunFailure;
}

int cmd_validate(const std::string& config_path) {
  try {
    const ScenarioConfig config = load_config(config_path);
    std::cout << "OK config_hash=" << config_hash(config) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "race: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-informed stochastic MPC overtaking simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds;
  int jobs = default_jobs();

  CLI::App* run = app.add_subcommand("run", "Run the scenario for each seed");
  run->add_option("--config", config_path, "Scenario config file")->required();
  run->add_option("--seeds", seeds, "Seed list (defaults to config run.seeds)")
      ->delimiter(',');
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--jobs", jobs, "Worker pool size");

  std::string param;
  std::vector<double> values;
  int seed_count = 1;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Cross-product of one parameter and seeds");
  sweep->add_option("--config", config_path, "Scenario config file")->required();
  sweep->add_option("--param", param, "Parameter to vary")->required();
  sweep->add_option("--values", values, "Values to sweep")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", seed_count, "Number of seeds (1..n)")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Worker pool size");

  CLI::App* validate =
      app.add_subcommand("validate", "Parse and validate a config file");
  validate->add_option("--config", config_path, "Scenario config file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  if (run->parsed()) {
    return cmd_run(config_path, seeds, out_dir, jobs);
  }
  if (sweep->parsed()) {
    return cmd_sweep(config_path, param, values, seed_count, out_dir, jobs);
  }
  return cmd_validate(config_path);
}
