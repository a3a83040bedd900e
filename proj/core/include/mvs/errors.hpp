#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mvs {

enum class ErrorCode {
  InvalidArgument,
  EmptyRegion,
  DegeneratePolygon,
  NonPositiveArea,
  NonPositiveDepth,
  SingularInteraction,
  SingularModel,
  DimensionMismatch,
  SingularInnovation,
  TargetBehindCamera,
  TrialDiverged,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One broken configuration invariant. `field` uses the configuration key name.
struct Violation {
  std::string field;
  std::string message;
};

/// Throws InvalidArgument with the first violation, if any.
inline void throw_first(const std::vector<Violation>& violations) {
  if (!violations.empty()) {
    throw Error(ErrorCode::InvalidArgument, violations.front().field + ": " + violations.front().message);
  }
}

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::NonPositiveArea: return "NonPositiveArea";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::SingularInteraction: return "SingularInteraction";
    case ErrorCode::SingularModel: return "SingularModel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::TargetBehindCamera: return "TargetBehindCamera";
    case ErrorCode::TrialDiverged: return "TrialDiverged";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace mvs
