#include "mvs/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvs/errors.hpp"
#include "mvs/interaction.hpp"

namespace mvs {

namespace {

Eigen::Matrix2d rot2(double a) {
  Eigen::Matrix2d R;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

bool inside_window(double t, const std::vector<std::pair<double, double>>& windows) {
  return std::any_of(windows.begin(), windows.end(),
                     [t](const auto& w) { return t >= w.first && t < w.second; });
}

// Kinematic step with constant camera-frame velocity v over dt.
void advance(Eigen::Vector3d& position, double& yaw, const Vec4& v, double dt) {
  const double omega = v(3);
  const Eigen::Vector2d v_body(v(0), v(1));
  Eigen::Vector2d shift;
  if (std::abs(omega * dt) < 1e-12) {
    shift = rot2(yaw + 0.5 * omega * dt) * v_body * dt;
  } else {
    // int_0^dt R(yaw + omega s) ds = (R(yaw + omega dt) - R(yaw)) J^{-1} / omega
    Eigen::Matrix2d j_inv;
    j_inv << 0.0, 1.0, -1.0, 0.0;
    shift = (rot2(yaw + omega * dt) - rot2(yaw)) * j_inv * v_body / omega;
  }
  position.x() += shift.x();
  position.y() += shift.y();
  position.z() += v(2) * dt;
  yaw += omega * dt;
}

}  // namespace

std::string_view to_string(ControllerKind kind) noexcept {
  switch (kind) {
    case ControllerKind::IBVS: return "IBVS";
    case ControllerKind::MPC: return "MPC";
    case ControllerKind::MPC1: return "MPC1";
    case ControllerKind::MPC2: return "MPC2";
  }
  return "IBVS";
}

std::optional<ControllerKind> parse_controller_kind(std::string_view name) noexcept {
  if (name == "IBVS") return ControllerKind::IBVS;
  if (name == "MPC") return ControllerKind::MPC;
  if (name == "MPC1") return ControllerKind::MPC1;
  if (name == "MPC2") return ControllerKind::MPC2;
  return std::nullopt;
}

ConstraintFlags constraint_flags(ControllerKind kind) noexcept {
  switch (kind) {
    case ControllerKind::IBVS:
    case ControllerKind::MPC: return {};
    case ControllerKind::MPC1: return {.input = true, .state = false, .terminal = false};
    case ControllerKind::MPC2: return {.input = true, .state = true, .terminal = true};
  }
  return {};
}

std::string_view to_string(DepthMode mode) noexcept {
  return mode == DepthMode::Desired ? "desired" : "true";
}

std::optional<DepthMode> parse_depth_mode(std::string_view name) noexcept {
  if (name == "desired") return DepthMode::Desired;
  if (name == "true") return DepthMode::True;
  return std::nullopt;
}

std::vector<Violation> Scenario::violations() const {
  std::vector<Violation> out;
  if (!desired.position.allFinite() || !(desired.position.z() > 0.0)) {
    out.push_back({"desired.position", "camera height must be > 0"});
  }
  if (!initial.position.allFinite() || !(initial.position.z() > 0.0)) {
    out.push_back({"initial.position", "camera height must be > 0"});
  }
  if (!(duration > 0.0)) out.push_back({"duration", "must be > 0"});
  if (!(control_rate > 0.0)) out.push_back({"control_rate", "must be > 0"});
  if (!(safety_vmax > 0.0)) out.push_back({"safety_vmax", "must be > 0"});
  if (!(noise_std.array() >= 0.0).all()) out.push_back({"noise_std", "must be >= 0"});
  if (!(fov_half_extent.array() > 0.0).all()) out.push_back({"fov_half_extent", "must be > 0"});
  if (!(plant_lag >= 0.0)) out.push_back({"plant_lag", "must be >= 0"});
  if (!(ibvs_gain > 0.0)) out.push_back({"ibvs_gain", "must be > 0"});
  if (!(convergence_threshold > 0.0)) out.push_back({"convergence_threshold", "must be > 0"});
  if (!(divergence_threshold > 0.0)) out.push_back({"divergence_threshold", "must be > 0"});
  for (std::size_t i = 0; i < dropout_windows.size(); ++i) {
    const auto& [start, end] = dropout_windows[i];
    if (!(start >= 0.0 && start < end && end <= duration)) {
      out.push_back({"dropout_windows[" + std::to_string(i) + "]", "must satisfy 0 <= start < end <= duration"});
    }
  }
  return out;
}

void Scenario::validate() const { throw_first(violations()); }

ConvexPolygon project_target(const Scenario& scenario, const Eigen::Vector3d& position, double yaw) {
  const double height = position.z();
  if (!(height > 0.0)) throw Error(ErrorCode::TargetBehindCamera, "camera is not above the target plane");
  // Image axes are anti-parallel to the body x/y axes, so a positive body
  // velocity increases the corresponding feature (q_dot = L v_c).
  const Eigen::Matrix2d to_camera = rot2(yaw).transpose();
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(scenario.target.vertices().size());
  for (const auto& p : scenario.target.vertices()) {
    pts.emplace_back(to_camera * (position.head<2>() - p) / height);
  }
  return ConvexPolygon(std::move(pts));
}

Reference reference_features(const Scenario& scenario) {
  Reference ref;
  ref.z_star = scenario.desired.position.z();
  const MomentSet m = polygon_moments(project_target(scenario, scenario.desired.position, scenario.desired.yaw));
  ref.a_star = spread_area(m);
  ref.q_star = feature_vector(m, ref.z_star, ref.a_star);
  return ref;
}

Observation observe(const CameraState& cam, const Scenario& scenario, const Reference& ref,
                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec4 noise;
  for (int i = 0; i < 4; ++i) noise(i) = normal(rng) * scenario.noise_std(i);

  Observation obs;
  const ConvexPolygon image = project_target(scenario, cam.position, cam.yaw);
  obs.true_depth = cam.position.z();
  obs.truth = feature_vector(polygon_moments(image), ref.z_star, ref.a_star);
  obs.in_fov = std::all_of(image.vertices().begin(), image.vertices().end(), [&](const auto& p) {
    return std::abs(p.x()) <= scenario.fov_half_extent.x() && std::abs(p.y()) <= scenario.fov_half_extent.y();
  });
  obs.in_dropout = inside_window(cam.time, scenario.dropout_windows);
  if (obs.in_fov && !obs.in_dropout) {
    Vec4 q = obs.truth.as_vector() + noise;
    q(3) = wrap_orientation(q(3));
    obs.measured = FeatureVector::from_vector(q);
  }
  return obs;
}

CameraState integrate(const CameraState& cam, const ControlInput& u, double dt, double lag) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "integration step must be > 0");
  if (!(lag >= 0.0)) throw Error(ErrorCode::InvalidArgument, "plant lag must be >= 0");
  CameraState next = cam;
  next.time = cam.time + dt;
  const Vec4 cmd = u.as_vector();
  if (lag == 0.0) {
    advance(next.position, next.yaw, cmd, dt);
    next.velocity = cmd;
    return next;
  }
  // First-order tracking v' = (u - v) / lag, sub-stepped at the midpoint velocity.
  constexpr int kSubsteps = 20;
  const double h = dt / kSubsteps;
  Vec4 v = cam.velocity;
  for (int i = 0; i < kSubsteps; ++i) {
    const Vec4 v_end = cmd + (v - cmd) * std::exp(-h / lag);
    advance(next.position, next.yaw, 0.5 * (v + v_end), h);
    v = v_end;
  }
  next.velocity = v;
  return next;
}

ControlInput safety_clamp(const ControlInput& u, double vmax) {
  if (!(vmax > 0.0)) throw Error(ErrorCode::InvalidArgument, "vmax must be > 0");
  return {std::clamp(u.v_x, -vmax, vmax), std::clamp(u.v_y, -vmax, vmax), std::clamp(u.v_z, -vmax, vmax),
          u.omega_z};
}

int count_constraint_violations(std::span<const TrialSample> series, const MpcConfig& cfg,
                                ConstraintFlags flags, double tol) {
  int count = 0;
  for (const auto& s : series) {
    if (!s.controller_ran || s.qp_status != QpStatus::Optimal) continue;
    bool bad = false;
    if (flags.input) {
      bad |= ((s.u_cmd - cfg.u_max).array() > tol).any();
      bad |= ((cfg.u_min - s.u_cmd).array() > tol).any();
    }
    const Eigen::Index blocks = s.predicted.size() / 4;
    if (flags.state) {
      for (Eigen::Index i = 0; i < blocks; ++i) {
        const Vec4 e = s.predicted.segment<4>(4 * i);
        bad |= ((e - cfg.e_max).array() > tol).any() || ((cfg.e_min - e).array() > tol).any();
      }
    }
    if (flags.terminal && blocks > 0) {
      const Vec4 e_n = s.predicted.tail<4>();
      bad |= ((e_n.cwiseAbs() - cfg.eps_term).array() > tol).any();
    }
    if (bad) ++count;
  }
  return count;
}

TrialSummary compute_metrics(std::span<const TrialSample> series, double threshold, double hold) {
  if (series.empty()) throw Error(ErrorCode::InvalidArgument, "cannot compute metrics of an empty series");
  TrialSummary m;
  const auto n = static_cast<double>(series.size());

  double sum_e2 = 0.0;
  double sum_v2 = 0.0;
  for (const auto& s : series) {
    sum_e2 += s.e.squaredNorm();
    sum_v2 += s.u_cmd.head<3>().squaredNorm();
  }
  m.rmse_error = std::sqrt(sum_e2 / n);
  m.rmse_joint = std::sqrt(sum_e2 / n + sum_v2 / n);

  // Sustained crossing: the first sample below threshold that stays below for
  // `hold` seconds, or to the end of the series.
  m.converged = false;
  m.convergence_time = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < series.size()) {
    if (series[i].e.norm() >= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < series.size() && series[j].e.norm() < threshold && series[j].t - series[i].t < hold) ++j;
    if (j == series.size() || series[j].e.norm() < threshold) {
      m.converged = true;
      m.convergence_time = series[i].t;
      break;
    }
    i = j + 1;
  }

  if (series.size() >= 2) {
    Vec4 mean = Vec4::Zero();
    Vec4 sq = Vec4::Zero();
    const auto k = static_cast<double>(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) mean += series[t].u_cmd - series[t - 1].u_cmd;
    mean /= k;
    for (std::size_t t = 1; t < series.size(); ++t) {
      const Vec4 d = series[t].u_cmd - series[t - 1].u_cmd - mean;
      sq += d.cwiseProduct(d);
    }
    m.oscillation_std = (sq / k).cwiseSqrt();
  }
  m.oscillation = m.oscillation_std.norm();
  return m;
}

TrialResult run_trial(const Scenario& scenario, const MpcConfig& mpc_cfg, const KalmanConfig& kf_cfg) {
  scenario.validate();
  kf_cfg.validate();

  const Reference ref = reference_features(scenario);
  const double dt = 1.0 / scenario.control_rate;
  const bool is_mpc = scenario.controller != ControllerKind::IBVS;

  MpcConfig mpc = mpc_cfg;
  mpc.flags = constraint_flags(scenario.controller);
  mpc.sample_period = dt;
  if (is_mpc) mpc.validate();

  const auto steps = static_cast<std::size_t>(std::llround(scenario.duration * scenario.control_rate));
  std::mt19937_64 rng(scenario.seed);

  TrialResult result;
  result.series.reserve(steps);

  CameraState cam = scenario.initial;
  cam.time = 0.0;
  std::optional<KalmanState> kf;
  Vec4 last_cmd = Vec4::Zero();
  Vec4 last_q = ref.q_star.as_vector();
  const Vec4 q_star = ref.q_star.as_vector();

  for (std::size_t k = 0; k < steps; ++k) {
    cam.time = static_cast<double>(k) * dt;
    const Observation obs = observe(cam, scenario, ref, rng);

    TrialSample s;
    s.t = cam.time;
    s.q_star = q_star;
    s.e = feature_error(obs.truth, ref.q_star);
    s.measurement_valid = obs.measured.has_value();
    if (!std::isfinite(s.e.norm()) || s.e.norm() > scenario.divergence_threshold) {
      throw Error(ErrorCode::TrialDiverged, "feature error exceeded the divergence threshold at t = " +
                                                std::to_string(cam.time));
    }

    bool can_control = false;
    if (scenario.kf_enabled) {
      if (!kf) {
        KalmanConfig init = kf_cfg;
        init.x0 = obs.measured ? obs.measured->as_vector() : q_star;
        kf = initial_state(init);
      }
      std::optional<Vec4> z;
      if (obs.measured) z = obs.measured->as_vector();
      const KalmanStepResult r = step(*kf, z, kf_cfg);
      kf = r.state;
      kf->x_hat(3) = wrap_orientation(kf->x_hat(3));
      last_q = kf->x_hat;
      s.stale_estimate = r.stale;
      can_control = !r.stale;
    } else if (obs.measured) {
      last_q = obs.measured->as_vector();
      can_control = true;
    }
    s.q = last_q;
    s.kf_x = last_q;

    Vec4 cmd = last_cmd;
    if (can_control) {
      const FeatureVector q_used = FeatureVector::from_vector(last_q);
      const Vec4 e_used = feature_error(q_used, ref.q_star);
      const double depth = scenario.depth_mode == DepthMode::Desired ? ref.z_star : obs.true_depth;
      const InteractionMatrix L = interaction_matrix(q_used, depth);
      if (is_mpc) {
        MpcStepResult r = mpc_step(e_used, L, mpc);
        cmd = r.u.as_vector();
        s.qp_status = r.solution.status;
        s.predicted = std::move(r.predicted);
      } else {
        cmd = ibvs_law(e_used, L, scenario.ibvs_gain).as_vector();
      }
      s.controller_ran = true;
    } else if (scenario.kf_enabled) {
      // Stale estimate: hover until measurements return.
      cmd = Vec4::Zero();
    }

    s.u_cmd = cmd;
    s.u_applied = safety_clamp(ControlInput::from_vector(cmd), scenario.safety_vmax).as_vector();
    last_cmd = cmd;

    const CameraState next = integrate(cam, ControlInput::from_vector(s.u_applied), dt, scenario.plant_lag);
    result.series.push_back(std::move(s));
    cam = next;
  }

  result.summary = compute_metrics(result.series, scenario.convergence_threshold);
  if (is_mpc) {
    result.summary.constraint_violations = count_constraint_violations(result.series, mpc, mpc.flags);
  }
  return result;
}

}  // namespace mvs
