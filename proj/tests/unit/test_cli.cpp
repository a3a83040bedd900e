#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "mvs/cli/config.hpp"
#include "mvs/cli/output.hpp"
#include "mvs/cli/runner.hpp"
#include "mvs/errors.hpp"

namespace fs = std::filesystem;
using namespace mvs;
using namespace mvs::cli;
using doctest::Approx;

namespace {

const fs::path kConfigDir = MVS_CONFIG_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mvs_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MVS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Short, noisy scenario so the CLI tests stay fast.
const char* kSmall = R"({
  "scenario": {
    "duration": 1.0,
    "noise_std": [0.01, 0.01, 0.01, 0.02]
  },
  "mpc": {"horizon": 5},
  "run": {"controllers": ["IBVS", "MPC2"], "reps": 2, "seed": 3}
})";

bool has_issue(const LoadResult& r, const std::string& field) {
  for (const auto& i : r.issues) {
    if (i.field == field) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("shipped configurations load cleanly") {
  for (const char* name : {"default.json", "table1.json", "dropout.json"}) {
    CAPTURE(name);
    const LoadResult r = load_config(kConfigDir / name);
    for (const auto& i : r.issues) MESSAGE(i.format());
    CHECK(r.ok());
  }
  const LoadResult t1 = load_config(kConfigDir / "table1.json");
  CHECK(t1.config.run.controllers.size() == 4);
  CHECK(t1.config.run.reps == 5);
  CHECK(t1.config.scenario.initial.position.x() == 1.6);
  CHECK(t1.config.scenario.initial.yaw == Approx(20.0 * std::numbers::pi / 180.0));
}

TEST_CASE("defaults survive an empty document") {
  const LoadResult r = parse_config("{}");
  CHECK(r.ok());
  CHECK(r.config.mpc.horizon == MpcConfig{}.horizon);
  CHECK(r.config.mpc.sample_period == Approx(1.0 / r.config.scenario.control_rate));
}

TEST_CASE("matrices accept diagonals or full arrays") {
  const LoadResult diag = parse_config(R"({"mpc": {"Q": [1, 2, 3, 4]}})");
  REQUIRE(diag.ok());
  CHECK(diag.config.mpc.Q == Mat4(Vec4(1, 2, 3, 4).asDiagonal()));
  const LoadResult full = parse_config(
      R"({"mpc": {"Q": [[2, 0.5, 0, 0], [0.5, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]}})");
  REQUIRE(full.ok());
  CHECK(full.config.mpc.Q(0, 1) == 0.5);
  const LoadResult bad = parse_config(R"({"mpc": {"Q": [1, 2, 3]}})");
  CHECK(has_issue(bad, "mpc.Q"));
}

TEST_CASE("issues carry the field and its line") {
  const std::string text =
      "{\n"
      "  \"scenario\": {\n"
      "    \"duration\": 2.0,\n"
      "    \"dropout_windows\": [[0.5, 1.0], [1.5, 3.0]],\n"
      "    \"colour\": \"red\"\n"
      "  },\n"
      "  \"mpc\": {\n"
      "    \"e_min\": [3, -2, -3, -3],\n"
      "    \"horizon\": 0\n"
      "  }\n"
      "}\n";
  const LoadResult r = parse_config(text);
  REQUIRE(r.issues.size() == 4);
  auto find = [&](const std::string& f) -> const ConfigIssue* {
    for (const auto& i : r.issues) {
      if (i.field == f) return &i;
    }
    return nullptr;
  };
  const ConfigIssue* e_min = find("mpc.e_min");
  REQUIRE(e_min);
  CHECK(e_min->line == 8);
  CHECK(e_min->format().find("e_max") != std::string::npos);
  const ConfigIssue* window = find("scenario.dropout_windows[1]");
  REQUIRE(window);
  CHECK(window->line == 4);
  CHECK(find("scenario.colour"));
  CHECK(find("mpc.horizon"));
  CHECK_FALSE(find("scenario.dropout_windows[0]"));
}

TEST_CASE("malformed documents") {
  SUBCASE("syntax error reports its line") {
    const LoadResult r = parse_config("{\n \"scenario\": {\n  \"duration\": 2.0,\n }\n}\n");
    REQUIRE(r.issues.size() == 1);
    CHECK(r.issues[0].line == 4);
  }
  SUBCASE("type errors") {
    const LoadResult r = parse_config(R"({"scenario": {"duration": "long", "controller": "PID"}})");
    CHECK(has_issue(r, "scenario.duration"));
    CHECK(has_issue(r, "scenario.controller"));
  }
  SUBCASE("unknown top-level section") {
    CHECK(has_issue(parse_config(R"({"plant": {}})"), "plant"));
  }
  SUBCASE("unreadable file") {
    try {
      load_config("/nonexistent/mvs.json");
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
    }
  }
}

TEST_CASE("controller labels") {
  const auto spec = parse_controller_spec("MPC1_KF");
  REQUIRE(spec);
  CHECK(spec->kind == ControllerKind::MPC1);
  CHECK(spec->kf);
  CHECK(spec->label() == "MPC1_KF");
  CHECK_FALSE(parse_controller_spec("LQR"));
  CHECK(canonical_less(ControllerSpec{ControllerKind::IBVS, true}, ControllerSpec{ControllerKind::MPC, false}));
  CHECK(canonical_less(ControllerSpec{ControllerKind::MPC2, false}, ControllerSpec{ControllerKind::MPC2, true}));
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("aggregation skips diverged trials") {
  std::vector<TrialRecord> trials(3);
  trials[0].summary = {true, 2.0, 0.1, 0.2, 0, Vec4::Zero(), 0.01};
  trials[1].summary = {true, 4.0, 0.3, 0.4, 0, Vec4::Zero(), 0.03};
  trials[2].diverged = true;
  const ComparisonRow row = aggregate("MPC", trials);
  CHECK(row.trials == 3);
  CHECK(row.diverged == 1);
  CHECK(row.converged == 2);
  CHECK(row.time == Approx(3.0));
  CHECK(row.rmse_joint == Approx(0.3));
  trials[1].summary.converged = false;
  trials[1].summary.convergence_time = std::numeric_limits<double>::infinity();
  CHECK(std::isinf(aggregate("MPC", trials).time));

  std::string label;
  const auto back = parse_summary_json(summary_json("MPC", trials), label);
  CHECK(label == "MPC");
  REQUIRE(back.size() == 3);
  CHECK(std::isinf(back[1].summary.convergence_time));
  CHECK(back[2].diverged);
  CHECK(back[0].summary.rmse_error == trials[0].summary.rmse_error);
}

TEST_CASE("library run writes the documented layout") {
  TempDir tmp("lib");
  const LoadResult cfg = parse_config(kSmall);
  REQUIRE(cfg.ok());
  RunSpec spec;
  spec.config = cfg.config;
  spec.out_dir = tmp.path;
  spec.repetitions = 2;
  spec.controllers = {*parse_controller_spec("MPC2"), *parse_controller_spec("IBVS")};
  spec.seed_base = 3;
  std::ostringstream log;
  const RunReport rep = run(spec, log);
  CHECK(rep.exit == ExitCode::Success);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].controller == "IBVS");
  CHECK(rep.rows[1].controller == "MPC2");

  for (const char* c : {"IBVS", "MPC2"}) {
    for (int i = 0; i < 2; ++i) CHECK(fs::exists(tmp.path / c / ("trial_" + std::to_string(i) + ".csv")));
    CHECK(fs::exists(tmp.path / c / "summary.json"));
  }
  const std::string csv = slurp(tmp.path / "IBVS" / "trial_0.csv");
  std::string header = csv.substr(0, csv.find('\n'));
  std::string expected;
  for (const auto& col : timeseries_columns()) expected += (expected.empty() ? "" : ",") + col;
  CHECK(header == expected);
  CHECK(header.rfind("t,e1,e2,e3,e4,u_cmd1", 0) == 0);
  // 1 s at 30 Hz plus the header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);

  const auto summary = nlohmann::json::parse(slurp(tmp.path / "MPC2" / "summary.json"));
  CHECK(summary["trials"].size() == 2);
  CHECK(summary["trials"][1]["seed"] == 4);

  const std::string comparison = slurp(tmp.path / "comparison.csv");
  CHECK(comparison.rfind("controller,trials,diverged,converged,Time,RMSE_error,RMSE_joint,oscillation\n", 0) == 0);

  SUBCASE("compare rebuilds the same table") {
    fs::remove(tmp.path / "comparison.csv");
    const RunReport again = compare(tmp.path, log);
    REQUIRE(again.rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      CHECK(again.rows[i].controller == rep.rows[i].controller);
      CHECK(std::abs(again.rows[i].rmse_joint - rep.rows[i].rmse_joint) <= 1e-12);
      CHECK(std::abs(again.rows[i].oscillation - rep.rows[i].oscillation) <= 1e-12);
    }
    CHECK(slurp(tmp.path / "comparison.csv") == comparison);
  }
  SUBCASE("compare on an empty directory") {
    TempDir empty("empty");
    CHECK_THROWS_AS(compare(empty.path, log), Error);
  }
}

TEST_CASE("command line") {
  TempDir tmp("exe");
  const fs::path cfg = tmp.path / "small.json";
  spit(cfg, kSmall);

  SUBCASE("validate") {
    CHECK(run_cli("validate \"" + cfg.string() + "\"") == 0);
    const fs::path bad = tmp.path / "bad.json";
    spit(bad, R"({"mpc": {"e_min": [5, 5, 5, 5]}})");
    CHECK(run_cli("validate \"" + bad.string() + "\"") == 1);
    CHECK(run_cli("validate \"" + (tmp.path / "missing.json").string() + "\"") == 3);
    CHECK(run_cli("frobnicate") == 1);
  }
  SUBCASE("one trial yields one series and one summary") {
    const fs::path out = tmp.path / "one";
    CHECK(run_cli("run \"" + cfg.string() + "\" --controllers MPC2 --reps 1 --out \"" + out.string() + "\"") == 0);
    int csv = 0, json = 0;
    for (const auto& e : fs::recursive_directory_iterator(out / "MPC2")) {
      csv += e.path().extension() == ".csv";
      json += e.path().extension() == ".json";
    }
    CHECK(csv == 1);
    CHECK(json == 1);
    CHECK(fs::exists(out / "comparison.csv"));
  }
  SUBCASE("reruns are byte-identical") {
    const fs::path a = tmp.path / "a", b = tmp.path / "b";
    CHECK(run_cli("run \"" + cfg.string() + "\" --out \"" + a.string() + "\" --jobs 2") == 0);
    CHECK(run_cli("run \"" + cfg.string() + "\" --out \"" + b.string() + "\" --jobs 1") == 0);
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      ++files;
      CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
    }
    CHECK(files == 2 * 2 + 2 + 1);
  }
  SUBCASE("emission flags") {
    const fs::path out = tmp.path / "quiet";
    CHECK(run_cli("run \"" + cfg.string() + "\" --no-timeseries --no-comparison --out \"" + out.string() + "\"") == 0);
    CHECK_FALSE(fs::exists(out / "IBVS" / "trial_0.csv"));
    CHECK(fs::exists(out / "IBVS" / "summary.json"));
    CHECK_FALSE(fs::exists(out / "comparison.csv"));
    CHECK(run_cli("compare \"" + out.string() + "\"") == 0);
    CHECK(fs::exists(out / "comparison.csv"));
  }
  SUBCASE("divergence exits with 2 and keeps going") {
    const fs::path diverging = tmp.path / "div.json";
    spit(diverging, R"({"scenario": {"duration": 0.5, "divergence_threshold": 1e-3}})");
    const fs::path out = tmp.path / "div";
    CHECK(run_cli("run \"" + diverging.string() + "\" --controllers IBVS,MPC --out \"" + out.string() + "\"") == 2);
    CHECK(fs::exists(out / "IBVS" / "summary.json"));
    CHECK(fs::exists(out / "MPC" / "summary.json"));
  }
  SUBCASE("unwritable output is an IO error") {
    const fs::path blocker = tmp.path / "blocker";
    spit(blocker, "x");
    CHECK(run_cli("run \"" + cfg.string() + "\" --out \"" + (blocker / "sub").string() + "\"") == 3);
  }
  SUBCASE("bad flags") {
    CHECK(run_cli("run \"" + cfg.string() + "\" --controllers LQR") == 1);
    CHECK(run_cli("run \"" + cfg.string() + "\" --reps 0") == 1);
  }
}
