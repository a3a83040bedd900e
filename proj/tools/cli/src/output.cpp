#include "mvs/cli/output.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "mvs/errors.hpp"

namespace mvs::cli {

using nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols = {
      "t",          "e1",         "e2",         "e3",         "e4",         "u_cmd1",    "u_cmd2",
      "u_cmd3",     "u_cmd4",     "u_applied1", "u_applied2", "u_applied3", "u_applied4", "meas_valid",
      "qp_status",  "kf_x1",      "kf_x2",      "kf_x3",      "kf_x4"};
  return cols;
}

void write_timeseries_csv(std::ostream& out, const std::vector<TrialSample>& series) {
  const auto& cols = timeseries_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  std::string line;
  for (const auto& s : series) {
    line.clear();
    line += format_number(s.t);
    for (int i = 0; i < 4; ++i) line += "," + format_number(s.e(i));
    for (int i = 0; i < 4; ++i) line += "," + format_number(s.u_cmd(i));
    for (int i = 0; i < 4; ++i) line += "," + format_number(s.u_applied(i));
    line += s.measurement_valid ? ",1," : ",0,";
    if (s.qp_status) line += to_string(*s.qp_status);
    for (int i = 0; i < 4; ++i) line += "," + format_number(s.kf_x(i));
    out << line << '\n';
  }
}

namespace {

// JSON has no infinity; non-finite values are stored as null.
ordered_json number_or_null(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

double number_or_inf(const ordered_json& v) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw Error(ErrorCode::ConfigError, "expected a number or null");
  return v.get<double>();
}

ordered_json record_object(const TrialRecord& r) {
  ordered_json j;
  j["index"] = r.index;
  j["seed"] = r.seed;
  j["status"] = r.diverged ? "diverged" : "completed";
  if (r.diverged) {
    j["message"] = r.message;
    return j;
  }
  const TrialSummary& s = r.summary;
  j["converged"] = s.converged;
  j["convergence_time"] = number_or_null(s.convergence_time);
  j["rmse_error"] = s.rmse_error;
  j["rmse_joint"] = s.rmse_joint;
  j["oscillation"] = s.oscillation;
  j["oscillation_std"] = {s.oscillation_std(0), s.oscillation_std(1), s.oscillation_std(2), s.oscillation_std(3)};
  j["constraint_violations"] = s.constraint_violations;
  return j;
}

TrialRecord record_from(const ordered_json& j) {
  TrialRecord r;
  r.index = j.at("index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.diverged = j.at("status").get<std::string>() == "diverged";
  if (r.diverged) {
    r.message = j.value("message", "");
    return r;
  }
  TrialSummary& s = r.summary;
  s.converged = j.at("converged").get<bool>();
  s.convergence_time = number_or_inf(j.at("convergence_time"));
  s.rmse_error = j.at("rmse_error").get<double>();
  s.rmse_joint = j.at("rmse_joint").get<double>();
  s.oscillation = j.at("oscillation").get<double>();
  const auto& osc = j.at("oscillation_std");
  for (int i = 0; i < 4; ++i) s.oscillation_std(i) = osc.at(static_cast<std::size_t>(i)).get<double>();
  s.constraint_violations = j.at("constraint_violations").get<int>();
  return r;
}

}  // namespace

ComparisonRow aggregate(const std::string& controller, const std::vector<TrialRecord>& trials) {
  ComparisonRow row;
  row.controller = controller;
  int n = 0;
  for (const auto& t : trials) {
    if (t.diverged) {
      ++row.diverged;
      continue;
    }
    ++n;
    if (t.summary.converged) ++row.converged;
    row.time += t.summary.convergence_time;
    row.rmse_error += t.summary.rmse_error;
    row.rmse_joint += t.summary.rmse_joint;
    row.oscillation += t.summary.oscillation;
  }
  row.trials = static_cast<int>(trials.size());
  if (n == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.time = row.rmse_error = row.rmse_joint = row.oscillation = nan;
    return row;
  }
  const auto d = static_cast<double>(n);
  row.time /= d;
  row.rmse_error /= d;
  row.rmse_joint /= d;
  row.oscillation /= d;
  return row;
}

std::string summary_json(const std::string& controller, const std::vector<TrialRecord>& trials) {
  const ComparisonRow row = aggregate(controller, trials);
  ordered_json j;
  j["controller"] = controller;
  j["trials"] = ordered_json::array();
  for (const auto& t : trials) j["trials"].push_back(record_object(t));
  ordered_json mean;
  mean["completed"] = row.trials;
  mean["diverged"] = row.diverged;
  mean["converged"] = row.converged;
  mean["convergence_time"] = number_or_null(row.time);
  mean["rmse_error"] = number_or_null(row.rmse_error);
  mean["rmse_joint"] = number_or_null(row.rmse_joint);
  mean["oscillation"] = number_or_null(row.oscillation);
  j["mean"] = std::move(mean);
  return j.dump(2) + "\n";
}

std::vector<TrialRecord> parse_summary_json(const std::string& text, std::string& controller) {
  try {
    const ordered_json j = ordered_json::parse(text);
    controller = j.at("controller").get<std::string>();
    std::vector<TrialRecord> out;
    for (const auto& t : j.at("trials")) out.push_back(record_from(t));
    return out;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed summary: ") + e.what());
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "controller,trials,diverged,converged,Time,RMSE_error,RMSE_joint,oscillation\n";
  for (const auto& r : rows) {
    out << r.controller << ',' << r.trials << ',' << r.diverged << ',' << r.converged << ','
        << format_number(r.time) << ',' << format_number(r.rmse_error) << ',' << format_number(r.rmse_joint)
        << ',' << format_number(r.oscillation) << '\n';
  }
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %6s %10s %12s %12s %12s\n", "controller", "trials", "Time", "RMSE_error",
                "RMSE_joint", "oscillation");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %6d %10.4f %12.4f %12.4f %12.5f\n", r.controller.c_str(), r.trials,
                  r.time, r.rmse_error, r.rmse_joint, r.oscillation);
    out += buf;
  }
  return out;
}

}  // namespace mvs::cli
