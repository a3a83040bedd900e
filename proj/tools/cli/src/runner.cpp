#include "mvs/cli/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "mvs/errors.hpp"

namespace mvs::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "error while writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_comparison(const fs::path& out_dir, const std::vector<ComparisonRow>& rows) {
  std::ostringstream csv;
  write_comparison_csv(csv, rows);
  write_file(out_dir / "comparison.csv", csv.str());
}

}  // namespace

RunReport run(const RunSpec& spec, std::ostream& log) {
  if (spec.repetitions < 1) throw Error(ErrorCode::ConfigError, "repetitions must be >= 1");
  if (spec.controllers.empty()) throw Error(ErrorCode::ConfigError, "controller list is empty");

  std::vector<ControllerSpec> controllers = spec.controllers;
  std::stable_sort(controllers.begin(), controllers.end(), canonical_less);

  std::error_code ec;
  for (const auto& c : controllers) {
    fs::create_directories(spec.out_dir / c.label(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + (spec.out_dir / c.label()).string() + ": " + ec.message());
  }

  const auto reps = static_cast<std::size_t>(spec.repetitions);
  const std::size_t total = controllers.size() * reps;
  std::vector<TrialRecord> records(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const ControllerSpec& c = controllers[job / reps];
      const auto i = static_cast<int>(job % reps);
      TrialRecord& rec = records[job];
      rec.index = i;
      rec.seed = spec.seed_base + static_cast<std::uint64_t>(i);
      try {
        Scenario sc = spec.config.scenario;
        sc.controller = c.kind;
        sc.kf_enabled = c.kf;
        sc.seed = rec.seed;
        const fs::path dir = spec.out_dir / c.label();
        const std::string stem = "trial_" + std::to_string(i);
        try {
          const TrialResult result = run_trial(sc, spec.config.mpc, spec.config.kalman);
          rec.summary = result.summary;
          if (spec.emit.timeseries) {
            std::ostringstream csv;
            write_timeseries_csv(csv, result.series);
            write_file(dir / (stem + ".csv"), csv.str());
          }
        } catch (const Error& e) {
          if (e.code() == ErrorCode::IoError) throw;
          rec.diverged = true;
          rec.message = e.what();
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  unsigned jobs = spec.jobs ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, total));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  RunReport report;
  for (std::size_t ci = 0; ci < controllers.size(); ++ci) {
    const std::string label = controllers[ci].label();
    const std::vector<TrialRecord> group(records.begin() + static_cast<std::ptrdiff_t>(ci * reps),
                                         records.begin() + static_cast<std::ptrdiff_t>((ci + 1) * reps));
    for (const auto& r : group) {
      if (r.diverged) {
        log << label << " trial " << r.index << " (seed " << r.seed << ") diverged: " << r.message << '\n';
        report.exit = ExitCode::TrialDiverged;
      }
    }
    if (spec.emit.summary) write_file(spec.out_dir / label / "summary.json", summary_json(label, group));
    report.rows.push_back(aggregate(label, group));
  }
  if (spec.emit.comparison) write_comparison(spec.out_dir, report.rows);
  return report;
}

RunReport compare(const fs::path& out_dir, std::ostream& log) {
  std::error_code ec;
  if (!fs::is_directory(out_dir, ec)) throw Error(ErrorCode::IoError, out_dir.string() + " is not a directory");

  std::vector<std::pair<ControllerSpec, std::vector<TrialRecord>>> groups;
  for (const auto& entry : fs::directory_iterator(out_dir, ec)) {
    const fs::path summary = entry.path() / "summary.json";
    if (!entry.is_directory() || !fs::exists(summary)) continue;
    std::string label;
    std::vector<TrialRecord> trials = parse_summary_json(read_file(summary), label);
    const auto spec = parse_controller_spec(label);
    if (!spec) {
      log << "skipping " << summary.string() << ": unknown controller '" << label << "'\n";
      continue;
    }
    groups.emplace_back(*spec, std::move(trials));
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot list " + out_dir.string() + ": " + ec.message());
  if (groups.empty()) throw Error(ErrorCode::IoError, "no summary.json files under " + out_dir.string());

  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return canonical_less(a.first, b.first); });
  RunReport report;
  for (const auto& [c, trials] : groups) {
    report.rows.push_back(aggregate(c.label(), trials));
    if (report.rows.back().diverged > 0) report.exit = ExitCode::TrialDiverged;
  }
  write_comparison(out_dir, report.rows);
  return report;
}

}  // namespace mvs::cli
