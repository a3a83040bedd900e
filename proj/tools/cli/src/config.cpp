#include "mvs/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mvs/errors.hpp"

namespace mvs::cli {

using nlohmann::json;

std::string ControllerSpec::label() const {
  std::string s(to_string(kind));
  if (kf) s += "_KF";
  return s;
}

std::optional<ControllerSpec> parse_controller_spec(std::string_view label) {
  constexpr std::string_view suffix = "_KF";
  ControllerSpec spec;
  if (label.size() > suffix.size() && label.ends_with(suffix)) {
    spec.kf = true;
    label.remove_suffix(suffix.size());
  }
  const auto kind = parse_controller_kind(label);
  if (!kind) return std::nullopt;
  spec.kind = *kind;
  return spec;
}

bool canonical_less(const ControllerSpec& a, const ControllerSpec& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  return !a.kf && b.kf;
}

std::string ConfigIssue::format() const {
  std::string s;
  if (line > 0) s += "line " + std::to_string(line) + ": ";
  s += field.empty() ? std::string("<document>") : field;
  s += ": " + message;
  return s;
}

// ---------------------------------------------------------------------------
// Line index: a small structural scanner over the JSON text.

LineIndex::LineIndex(std::string_view text) {
  struct Frame {
    bool object;
    std::string path;
    std::string key;
    int index = 0;
    bool expect_key = true;
    bool value_seen = false;  // current array element already recorded
  };
  std::vector<Frame> stack;
  int line = 1;

  auto child_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& top = stack.back();
    if (top.object) return top.path.empty() ? top.key : top.path + "." + top.key;
    return top.path + "[" + std::to_string(top.index) + "]";
  };
  auto record = [&](const std::string& path) {
    if (!path.empty()) lines_.emplace(path, line);
  };
  auto mark_array_value = [&]() {
    if (!stack.empty() && !stack.back().object && !stack.back().value_seen) {
      record(child_path());
      stack.back().value_seen = true;
    }
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') continue;
    if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        if (text[i] == '\n') ++line;
        s.push_back(text[i]);
      }
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
        record(child_path());
      } else {
        mark_array_value();
      }
      continue;
    }
    switch (c) {
      case '{':
      case '[': {
        mark_array_value();
        Frame f{c == '{', child_path(), "", 0, true, false};
        stack.push_back(std::move(f));
        break;
      }
      case '}':
      case ']':
        if (!stack.empty()) stack.pop_back();
        break;
      case ',':
        if (!stack.empty()) {
          if (stack.back().object) {
            stack.back().expect_key = true;
          } else {
            ++stack.back().index;
            stack.back().value_seen = false;
          }
        }
        break;
      case ':': break;
      default: mark_array_value(); break;
    }
  }
}

int LineIndex::line_of(std::string_view path) const {
  std::string p(path);
  while (!p.empty()) {
    if (auto it = lines_.find(p); it != lines_.end()) return it->second;
    const auto cut = p.find_last_of(".[");
    if (cut == std::string::npos) break;
    p.resize(cut);
  }
  return 0;
}

// ---------------------------------------------------------------------------

namespace {

class Reader {
 public:
  Reader(const LineIndex& index, std::vector<ConfigIssue>& issues) : index_(index), issues_(issues) {}

  void issue(const std::string& path, std::string message) {
    issues_.push_back({path, index_.line_of(path), std::move(message)});
  }

  /// Checks that `v` is an object whose keys are all in `allowed`.
  bool object(const json& v, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!v.is_object()) {
      issue(path, "expected an object");
      return false;
    }
    for (const auto& [key, _] : v.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        issue(join(path, key), "unknown field");
      }
    }
    return true;
  }

  template <typename Fn>
  void field(const json& obj, const std::string& path, const char* key, Fn&& fn) {
    if (auto it = obj.find(key); it != obj.end()) fn(*it, join(path, key));
  }

  void number(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) return issue(path, "expected a number");
    out = v.get<double>();
  }

  void integer(const json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) return issue(path, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      return issue(path, "integer out of range");
    }
    out = static_cast<int>(x);
  }

  void unsigned64(const json& v, const std::string& path, std::uint64_t& out) {
    if (!v.is_number_unsigned()) return issue(path, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void boolean(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) return issue(path, "expected true or false");
    out = v.get<bool>();
  }

  void string(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) return issue(path, "expected a string");
    out = v.get<std::string>();
  }

  template <typename Vec>
  bool vector(const json& v, const std::string& path, Vec& out) {
    const auto n = static_cast<std::size_t>(out.size());
    if (!v.is_array() || v.size() != n) {
      issue(path, "expected an array of " + std::to_string(n) + " numbers");
      return false;
    }
    Vec tmp = out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!v[i].is_number()) {
        issue(path + "[" + std::to_string(i) + "]", "expected a number");
        return false;
      }
      tmp(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    out = tmp;
    return true;
  }

  /// Four numbers give a diagonal matrix; four rows of four give a full one.
  void matrix4(const json& v, const std::string& path, Mat4& out) {
    if (v.is_array() && v.size() == 4 && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
      Vec4 d;
      for (int i = 0; i < 4; ++i) d(i) = v[static_cast<std::size_t>(i)].get<double>();
      out = d.asDiagonal();
      return;
    }
    if (v.is_array() && v.size() == 4) {
      Mat4 m;
      for (int r = 0; r < 4; ++r) {
        const json& row = v[static_cast<std::size_t>(r)];
        Eigen::Matrix<double, 1, 4> tmp;
        if (!vector(row, path + "[" + std::to_string(r) + "]", tmp)) return;
        m.row(r) = tmp;
      }
      out = m;
      return;
    }
    issue(path, "expected 4 diagonal entries or a 4x4 array");
  }

  void pose(const json& v, const std::string& path, Eigen::Vector3d& position, double& yaw) {
    if (!object(v, path, {"position", "yaw_deg"})) return;
    field(v, path, "position", [&](const json& x, const std::string& p) { vector(x, p, position); });
    field(v, path, "yaw_deg", [&](const json& x, const std::string& p) {
      double deg = yaw * 180.0 / std::numbers::pi;
      number(x, p, deg);
      yaw = deg * std::numbers::pi / 180.0;
    });
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

 private:
  const LineIndex& index_;
  std::vector<ConfigIssue>& issues_;
};

void read_target(Reader& rd, const json& v, const std::string& path, Scenario& sc) {
  if (!rd.object(v, path, {"width", "height", "center", "angle_deg", "vertices"})) return;
  try {
    if (v.contains("vertices")) {
      if (v.contains("width") || v.contains("height") || v.contains("center") || v.contains("angle_deg")) {
        rd.issue(path, "give either vertices or a rectangle, not both");
        return;
      }
      const json& verts = v["vertices"];
      const std::string vp = path + ".vertices";
      if (!verts.is_array()) return rd.issue(vp, "expected an array of [x, y] pairs");
      std::vector<Eigen::Vector2d> pts;
      for (std::size_t i = 0; i < verts.size(); ++i) {
        Eigen::Vector2d p = Eigen::Vector2d::Zero();
        if (!rd.vector(verts[i], vp + "[" + std::to_string(i) + "]", p)) return;
        pts.push_back(p);
      }
      sc.target = ConvexPolygon(std::move(pts));
      return;
    }
    double w = 0.3, h = 0.2, angle_deg = 0.0;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    rd.field(v, path, "width", [&](const json& x, const std::string& p) { rd.number(x, p, w); });
    rd.field(v, path, "height", [&](const json& x, const std::string& p) { rd.number(x, p, h); });
    rd.field(v, path, "center", [&](const json& x, const std::string& p) { rd.vector(x, p, center); });
    rd.field(v, path, "angle_deg", [&](const json& x, const std::string& p) { rd.number(x, p, angle_deg); });
    if (!(w > 0.0) || !(h > 0.0)) return rd.issue(path, "width and height must be > 0");
    sc.target = ConvexPolygon::rectangle(w, h, center, angle_deg * std::numbers::pi / 180.0);
  } catch (const Error& e) {
    rd.issue(path, e.what());
  }
}

void read_scenario(Reader& rd, const json& v, const std::string& path, Scenario& sc) {
  if (!rd.object(v, path,
                 {"target", "desired", "initial", "controller", "kf_enabled", "noise_std", "dropout_windows",
                  "duration", "control_rate", "safety_vmax", "seed", "fov_half_extent", "plant_lag",
                  "depth_mode", "ibvs_gain", "convergence_threshold", "divergence_threshold"})) {
    return;
  }
  rd.field(v, path, "target", [&](const json& x, const std::string& p) { read_target(rd, x, p, sc); });
  rd.field(v, path, "desired", [&](const json& x, const std::string& p) {
    rd.pose(x, p, sc.desired.position, sc.desired.yaw);
  });
  rd.field(v, path, "initial", [&](const json& x, const std::string& p) {
    rd.pose(x, p, sc.initial.position, sc.initial.yaw);
  });
  rd.field(v, path, "controller", [&](const json& x, const std::string& p) {
    std::string name;
    rd.string(x, p, name);
    if (!x.is_string()) return;
    if (auto kind = parse_controller_kind(name)) {
      sc.controller = *kind;
    } else {
      rd.issue(p, "unknown controller '" + name + "' (IBVS, MPC, MPC1, MPC2)");
    }
  });
  rd.field(v, path, "kf_enabled", [&](const json& x, const std::string& p) { rd.boolean(x, p, sc.kf_enabled); });
  rd.field(v, path, "noise_std", [&](const json& x, const std::string& p) { rd.vector(x, p, sc.noise_std); });
  rd.field(v, path, "dropout_windows", [&](const json& x, const std::string& p) {
    if (!x.is_array()) return rd.issue(p, "expected an array of [start, end] pairs");
    std::vector<std::pair<double, double>> windows;
    for (std::size_t i = 0; i < x.size(); ++i) {
      Eigen::Vector2d w = Eigen::Vector2d::Zero();
      if (!rd.vector(x[i], p + "[" + std::to_string(i) + "]", w)) return;
      windows.emplace_back(w(0), w(1));
    }
    sc.dropout_windows = std::move(windows);
  });
  rd.field(v, path, "duration", [&](const json& x, const std::string& p) { rd.number(x, p, sc.duration); });
  rd.field(v, path, "control_rate", [&](const json& x, const std::string& p) { rd.number(x, p, sc.control_rate); });
  rd.field(v, path, "safety_vmax", [&](const json& x, const std::string& p) { rd.number(x, p, sc.safety_vmax); });
  rd.field(v, path, "seed", [&](const json& x, const std::string& p) { rd.unsigned64(x, p, sc.seed); });
  rd.field(v, path, "fov_half_extent", [&](const json& x, const std::string& p) {
    rd.vector(x, p, sc.fov_half_extent);
  });
  rd.field(v, path, "plant_lag", [&](const json& x, const std::string& p) { rd.number(x, p, sc.plant_lag); });
  rd.field(v, path, "depth_mode", [&](const json& x, const std::string& p) {
    std::string name;
    rd.string(x, p, name);
    if (!x.is_string()) return;
    if (auto mode = parse_depth_mode(name)) {
      sc.depth_mode = *mode;
    } else {
      rd.issue(p, "unknown depth mode '" + name + "' (desired, true)");
    }
  });
  rd.field(v, path, "ibvs_gain", [&](const json& x, const std::string& p) { rd.number(x, p, sc.ibvs_gain); });
  rd.field(v, path, "convergence_threshold", [&](const json& x, const std::string& p) {
    rd.number(x, p, sc.convergence_threshold);
  });
  rd.field(v, path, "divergence_threshold", [&](const json& x, const std::string& p) {
    rd.number(x, p, sc.divergence_threshold);
  });
}

void read_solver(Reader& rd, const json& v, const std::string& path, QpSettings& s) {
  if (!rd.object(v, path,
                 {"tol", "max_iter", "rho", "sigma", "alpha", "infeasibility_tol", "check_interval",
                  "adaptive_rho_interval", "polish"})) {
    return;
  }
  rd.field(v, path, "tol", [&](const json& x, const std::string& p) { rd.number(x, p, s.tol); });
  rd.field(v, path, "max_iter", [&](const json& x, const std::string& p) { rd.integer(x, p, s.max_iter); });
  rd.field(v, path, "rho", [&](const json& x, const std::string& p) { rd.number(x, p, s.rho); });
  rd.field(v, path, "sigma", [&](const json& x, const std::string& p) { rd.number(x, p, s.sigma); });
  rd.field(v, path, "alpha", [&](const json& x, const std::string& p) { rd.number(x, p, s.alpha); });
  rd.field(v, path, "infeasibility_tol", [&](const json& x, const std::string& p) {
    rd.number(x, p, s.infeasibility_tol);
  });
  rd.field(v, path, "check_interval", [&](const json& x, const std::string& p) {
    rd.integer(x, p, s.check_interval);
  });
  rd.field(v, path, "adaptive_rho_interval", [&](const json& x, const std::string& p) {
    rd.integer(x, p, s.adaptive_rho_interval);
  });
  rd.field(v, path, "polish", [&](const json& x, const std::string& p) { rd.boolean(x, p, s.polish); });
}

void read_mpc(Reader& rd, const json& v, const std::string& path, MpcConfig& m) {
  if (!rd.object(v, path,
                 {"horizon", "Q", "R", "P_term", "e_min", "e_max", "u_min", "u_max", "eps_term",
                  "terminal_slack_weight", "solver"})) {
    return;
  }
  rd.field(v, path, "horizon", [&](const json& x, const std::string& p) { rd.integer(x, p, m.horizon); });
  rd.field(v, path, "Q", [&](const json& x, const std::string& p) { rd.matrix4(x, p, m.Q); });
  rd.field(v, path, "R", [&](const json& x, const std::string& p) { rd.matrix4(x, p, m.R); });
  rd.field(v, path, "P_term", [&](const json& x, const std::string& p) { rd.matrix4(x, p, m.P_term); });
  rd.field(v, path, "e_min", [&](const json& x, const std::string& p) { rd.vector(x, p, m.e_min); });
  rd.field(v, path, "e_max", [&](const json& x, const std::string& p) { rd.vector(x, p, m.e_max); });
  rd.field(v, path, "u_min", [&](const json& x, const std::string& p) { rd.vector(x, p, m.u_min); });
  rd.field(v, path, "u_max", [&](const json& x, const std::string& p) { rd.vector(x, p, m.u_max); });
  rd.field(v, path, "eps_term", [&](const json& x, const std::string& p) { rd.vector(x, p, m.eps_term); });
  rd.field(v, path, "terminal_slack_weight", [&](const json& x, const std::string& p) {
    rd.number(x, p, m.terminal_slack_weight);
  });
  rd.field(v, path, "solver", [&](const json& x, const std::string& p) { read_solver(rd, x, p, m.solver); });
}

void read_kalman(Reader& rd, const json& v, const std::string& path, KalmanConfig& k) {
  if (!rd.object(v, path, {"A", "C", "Q_noise", "R_noise", "P0", "x0", "max_dropout"})) return;
  rd.field(v, path, "A", [&](const json& x, const std::string& p) { rd.matrix4(x, p, k.A); });
  rd.field(v, path, "C", [&](const json& x, const std::string& p) { rd.matrix4(x, p, k.C); });
  rd.field(v, path, "Q_noise", [&](const json& x, const std::string& p) { rd.matrix4(x, p, k.Q_noise); });
  rd.field(v, path, "R_noise", [&](const json& x, const std::string& p) { rd.matrix4(x, p, k.R_noise); });
  rd.field(v, path, "P0", [&](const json& x, const std::string& p) { rd.matrix4(x, p, k.P0); });
  rd.field(v, path, "x0", [&](const json& x, const std::string& p) { rd.vector(x, p, k.x0); });
  rd.field(v, path, "max_dropout", [&](const json& x, const std::string& p) { rd.integer(x, p, k.max_dropout); });
}

void read_run(Reader& rd, const json& v, const std::string& path, RunDefaults& r) {
  if (!rd.object(v, path, {"controllers", "reps", "seed", "out"})) return;
  rd.field(v, path, "controllers", [&](const json& x, const std::string& p) {
    if (!x.is_array() || x.empty()) return rd.issue(p, "expected a non-empty array of controller names");
    std::vector<ControllerSpec> list;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::string ip = p + "[" + std::to_string(i) + "]";
      if (!x[i].is_string()) {
        rd.issue(ip, "expected a controller name");
        continue;
      }
      const auto spec = parse_controller_spec(x[i].get<std::string>());
      if (!spec) {
        rd.issue(ip, "unknown controller '" + x[i].get<std::string>() + "'");
        continue;
      }
      if (std::find(list.begin(), list.end(), *spec) != list.end()) {
        rd.issue(ip, "duplicate controller '" + spec->label() + "'");
        continue;
      }
      list.push_back(*spec);
    }
    r.controllers = std::move(list);
  });
  rd.field(v, path, "reps", [&](const json& x, const std::string& p) {
    rd.integer(x, p, r.reps);
    if (x.is_number_integer() && r.reps < 1) rd.issue(p, "must be >= 1");
  });
  rd.field(v, path, "seed", [&](const json& x, const std::string& p) { rd.unsigned64(x, p, r.seed); });
  rd.field(v, path, "out", [&](const json& x, const std::string& p) { rd.string(x, p, r.out); });
}

}  // namespace

LoadResult parse_config(std::string_view text) {
  LoadResult result;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    result.issues.push_back({"", line, std::string("malformed JSON: ") + e.what()});
    return result;
  }

  const LineIndex index(text);
  Reader rd(index, result.issues);
  if (!rd.object(doc, "", {"scenario", "mpc", "kalman", "run"})) return result;

  RunConfig& cfg = result.config;
  rd.field(doc, "", "scenario", [&](const json& x, const std::string& p) { read_scenario(rd, x, p, cfg.scenario); });
  rd.field(doc, "", "mpc", [&](const json& x, const std::string& p) { read_mpc(rd, x, p, cfg.mpc); });
  rd.field(doc, "", "kalman", [&](const json& x, const std::string& p) { read_kalman(rd, x, p, cfg.kalman); });
  rd.field(doc, "", "run", [&](const json& x, const std::string& p) { read_run(rd, x, p, cfg.run); });

  // The MPC samples at the control rate.
  if (cfg.scenario.control_rate > 0.0) cfg.mpc.sample_period = 1.0 / cfg.scenario.control_rate;

  auto add = [&](const std::string& prefix, const std::vector<Violation>& vs) {
    for (const auto& v : vs) rd.issue(prefix + "." + v.field, v.message);
  };
  add("scenario", cfg.scenario.violations());
  add("mpc", cfg.mpc.violations());
  add("kalman", cfg.kalman.violations());
  return result;
}

LoadResult load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "error while reading " + path.string());
  return parse_config(buf.str());
}

}  // namespace mvs::cli
