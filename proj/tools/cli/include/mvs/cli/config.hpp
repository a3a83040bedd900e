#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvs/kalman.hpp"
#include "mvs/mpc.hpp"
#include "mvs/simworld.hpp"

namespace mvs::cli {

/// A controller variant plus whether the Kalman filter runs in front of it.
struct ControllerSpec {
  ControllerKind kind = ControllerKind::MPC2;
  bool kf = false;

  /// "MPC2" or "MPC2_KF".
  [[nodiscard]] std::string label() const;
  friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;
};

std::optional<ControllerSpec> parse_controller_spec(std::string_view label);

/// Canonical table order: IBVS, MPC, MPC1, MPC2, each without then with the filter.
bool canonical_less(const ControllerSpec& a, const ControllerSpec& b);

/// Optional batch defaults stored next to the models; command-line flags win.
struct RunDefaults {
  std::vector<ControllerSpec> controllers;
  int reps = 1;
  std::uint64_t seed = 1;
  std::string out = "results";
};

struct RunConfig {
  Scenario scenario;
  MpcConfig mpc;
  KalmanConfig kalman;
  RunDefaults run;
};

/// A problem found while loading. `line` is 0 when no source position applies.
struct ConfigIssue {
  std::string field;
  int line = 0;
  std::string message;

  [[nodiscard]] std::string format() const;
};

struct LoadResult {
  RunConfig config;
  std::vector<ConfigIssue> issues;

  [[nodiscard]] bool ok() const { return issues.empty(); }
};

/// Maps dotted field paths ("scenario.noise_std", "scenario.dropout_windows[1]")
/// to the 1-based line where their value starts.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text);
  /// Line of `path` or of its nearest recorded ancestor; 0 if none.
  [[nodiscard]] int line_of(std::string_view path) const;

 private:
  std::map<std::string, int, std::less<>> lines_;
};

/// Parses and validates a configuration document. Missing keys keep defaults;
/// unknown keys, type errors and every broken invariant are reported together.
LoadResult parse_config(std::string_view text);

/// Reads the file first; throws mvs::Error(IoError) when it cannot be read.
LoadResult load_config(const std::filesystem::path& path);

}  // namespace mvs::cli
