#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvs/cli/config.hpp"
#include "mvs/cli/output.hpp"

namespace mvs::cli {

enum class ExitCode : int { Success = 0, ConfigError = 1, TrialDiverged = 2, IoError = 3 };

struct EmitFlags {
  bool timeseries = true;
  bool summary = true;
  bool comparison = true;
};

/// One batch: every controller runs `repetitions` trials with seeds seed_base + i.
struct RunSpec {
  RunConfig config;
  std::filesystem::path out_dir;
  int repetitions = 1;
  std::vector<ControllerSpec> controllers;
  std::uint64_t seed_base = 1;
  EmitFlags emit;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned jobs = 0;
};

struct RunReport {
  ExitCode exit = ExitCode::Success;
  std::vector<ComparisonRow> rows;  ///< canonical controller order
};

/// Runs all trials and writes
///   <out>/<controller>/trial_<i>.csv  time series
///   <out>/<controller>/summary.json   per-trial metrics and their means
///   <out>/comparison.csv
/// Returns TrialDiverged if any trial diverged (the remaining trials still run).
/// Throws mvs::Error(IoError) when outputs cannot be written.
RunReport run(const RunSpec& spec, std::ostream& log);

/// Rebuilds comparison.csv from the summary.json files under `out_dir`.
/// Throws mvs::Error(IoError) when no summaries are found or files cannot be read.
RunReport compare(const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace mvs::cli
