#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvs/simworld.hpp"

namespace mvs::cli {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double x);

/// Header of the per-trial time series, in column order.
const std::vector<std::string>& timeseries_columns();

void write_timeseries_csv(std::ostream& out, const std::vector<TrialSample>& series);

/// Per-trial record. Diverged trials carry no metrics.
struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string message;
  TrialSummary summary;
};

/// Arithmetic means over the non-diverged trials of one controller.
struct ComparisonRow {
  std::string controller;
  int trials = 0;
  int diverged = 0;
  int converged = 0;
  double time = 0.0;  ///< +inf when any averaged trial never converged
  double rmse_error = 0.0;
  double rmse_joint = 0.0;
  double oscillation = 0.0;
};

ComparisonRow aggregate(const std::string& controller, const std::vector<TrialRecord>& trials);

std::string summary_json(const std::string& controller, const std::vector<TrialRecord>& trials);

/// Inverse of summary_json; throws mvs::Error(ConfigError) on malformed input.
std::vector<TrialRecord> parse_summary_json(const std::string& text, std::string& controller);

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

/// Fixed-width table for terminals.
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace mvs::cli
