// mvs: run, validate and compare visual-servoing simulation batches.

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvs/cli/config.hpp"
#include "mvs/cli/runner.hpp"
#include "mvs/errors.hpp"

namespace {

using mvs::cli::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

int exit_for(const mvs::Error& e) {
  switch (e.code()) {
    case mvs::ErrorCode::IoError: return code(ExitCode::IoError);
    case mvs::ErrorCode::TrialDiverged: return code(ExitCode::TrialDiverged);
    default: return code(ExitCode::ConfigError);
  }
}

void print_issues(const std::string& file, const std::vector<mvs::cli::ConfigIssue>& issues) {
  for (const auto& issue : issues) std::cerr << file << ": " << issue.format() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-based visual servoing simulator"};
  app.require_subcommand(1);

  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::string> out;
  std::vector<std::string> controllers;
  unsigned jobs = 0;
  bool no_timeseries = false;
  bool no_summary = false;
  bool no_comparison = false;

  auto* run_cmd = app.add_subcommand("run", "Run every controller for the requested repetitions");
  run_cmd->add_option("spec", spec_path, "Configuration file (JSON)")->required();
  run_cmd->add_option("--seed", seed, "Seed of the first repetition; repetition i uses seed + i");
  run_cmd->add_option("--reps", reps, "Repetitions per controller")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out, "Output directory");
  run_cmd->add_option("--controllers", controllers, "Controllers, e.g. IBVS,MPC2,MPC2_KF")->delimiter(',');
  run_cmd->add_option("--jobs", jobs, "Worker threads (0: all cores)");
  run_cmd->add_flag("--no-timeseries", no_timeseries, "Skip per-trial CSV files");
  run_cmd->add_flag("--no-summary", no_summary, "Skip summary.json files");
  run_cmd->add_flag("--no-comparison", no_comparison, "Skip comparison.csv");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration file and list every problem");
  validate_cmd->add_option("spec", validate_path, "Configuration file (JSON)")->required();

  std::string compare_dir;
  auto* compare_cmd = app.add_subcommand("compare", "Rebuild comparison.csv from existing summaries");
  compare_cmd->add_option("outdir", compare_dir, "Directory written by `mvs run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::ConfigError);
  }

  try {
    if (*validate_cmd) {
      const auto loaded = mvs::cli::load_config(validate_path);
      if (loaded.ok()) {
        std::cout << validate_path << ": ok\n";
        return code(ExitCode::Success);
      }
      print_issues(validate_path, loaded.issues);
      std::cerr << loaded.issues.size() << " problem(s) found\n";
      return code(ExitCode::ConfigError);
    }

    if (*compare_cmd) {
      const auto report = mvs::cli::compare(compare_dir, std::cerr);
      std::cout << mvs::cli::format_comparison_table(report.rows);
      return code(report.exit);
    }

    const auto loaded = mvs::cli::load_config(spec_path);
    if (!loaded.ok()) {
      print_issues(spec_path, loaded.issues);
      return code(ExitCode::ConfigError);
    }

    mvs::cli::RunSpec spec;
    spec.config = loaded.config;
    spec.out_dir = out.value_or(spec.config.run.out);
    spec.repetitions = reps.value_or(spec.config.run.reps);
    spec.seed_base = seed.value_or(spec.config.run.seed);
    spec.jobs = jobs;
    spec.emit = {!no_timeseries, !no_summary, !no_comparison};
    if (!controllers.empty()) {
      for (const auto& name : controllers) {
        const auto c = mvs::cli::parse_controller_spec(name);
        if (!c) {
          std::cerr << "--controllers: unknown controller '" << name << "'\n";
          return code(ExitCode::ConfigError);
        }
        if (std::find(spec.controllers.begin(), spec.controllers.end(), *c) == spec.controllers.end()) {
          spec.controllers.push_back(*c);
        }
      }
    } else if (!spec.config.run.controllers.empty()) {
      spec.controllers = spec.config.run.controllers;
    } else {
      spec.controllers = {{spec.config.scenario.controller, spec.config.scenario.kf_enabled}};
    }

    const auto report = mvs::cli::run(spec, std::cerr);
    std::cout << mvs::cli::format_comparison_table(report.rows);
    return code(report.exit);
  } catch (const mvs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::IoError);
  }
}
