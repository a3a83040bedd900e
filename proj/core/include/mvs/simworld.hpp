#pragma once

#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mvs/kalman.hpp"
#include "mvs/moments.hpp"
#include "mvs/mpc.hpp"
#include "mvs/errors.hpp"
#include "mvs/types.hpp"

namespace mvs {

/// Controller variants: classical law, MPC without constraints, with input
/// constraints, and with input, state and terminal constraints.
enum class ControllerKind { IBVS, MPC, MPC1, MPC2 };

std::string_view to_string(ControllerKind kind) noexcept;
std::optional<ControllerKind> parse_controller_kind(std::string_view name) noexcept;
ConstraintFlags constraint_flags(ControllerKind kind) noexcept;

/// Depth handed to the interaction matrix: the constant desired depth or the
/// simulator's true camera height.
enum class DepthMode { Desired, True };

std::string_view to_string(DepthMode mode) noexcept;
std::optional<DepthMode> parse_depth_mode(std::string_view name) noexcept;

struct Pose {
  Eigen::Vector3d position{0.0, 0.0, 1.0};
  double yaw = 0.0;
};

/// Downward-looking camera above the target plane z = 0. `velocity` is the
/// executed camera-frame velocity (differs from the command only with plant lag).
struct CameraState {
  Eigen::Vector3d position{0.0, 0.0, 1.0};
  double yaw = 0.0;
  double time = 0.0;
  Vec4 velocity = Vec4::Zero();
};

struct Scenario {
  /// Target outline on the world plane, metres.
  ConvexPolygon target = ConvexPolygon::rectangle(0.3, 0.2);
  Pose desired;
  /// 0.4 m lateral, 0.3 m vertical and 20 degrees of yaw away from `desired`.
  CameraState initial{.position = {0.4, 0.0, 1.3}, .yaw = 20.0 * std::numbers::pi / 180.0};
  ControllerKind controller = ControllerKind::MPC2;
  bool kf_enabled = false;
  Vec4 noise_std = Vec4::Zero();
  std::vector<std::pair<double, double>> dropout_windows;  ///< [start, end) seconds
  double duration = 15.0;
  double control_rate = 30.0;
  double safety_vmax = 1.0;
  std::uint64_t seed = 1;
  /// Half extents of the visible region on the normalized image plane.
  Eigen::Vector2d fov_half_extent{0.8, 0.6};
  /// First-order velocity-tracking time constant; 0 executes commands exactly.
  double plant_lag = 0.0;
  DepthMode depth_mode = DepthMode::Desired;
  double ibvs_gain = 1.0;
  double convergence_threshold = 0.1;
  double divergence_threshold = 100.0;

  /// Every broken invariant, in declaration order.
  [[nodiscard]] std::vector<Violation> violations() const;
  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

/// Desired features and the normalization constants derived from the desired view.
struct Reference {
  FeatureVector q_star;
  double z_star = 0.0;
  double a_star = 0.0;
};

/// Target outline projected on the normalized image plane of `cam`.
/// Throws TargetBehindCamera when the camera is not above the plane.
ConvexPolygon project_target(const Scenario& scenario, const Eigen::Vector3d& position, double yaw);

Reference reference_features(const Scenario& scenario);

struct Observation {
  std::optional<FeatureVector> measured;  ///< noisy; empty inside dropout or outside the FOV
  FeatureVector truth;                    ///< noise-free features at the current pose
  double true_depth = 0.0;
  bool in_fov = true;
  bool in_dropout = false;
};

/// Projects the target, computes moments and features, adds seeded Gaussian
/// noise. Four normal draws are consumed from `rng` on every call.
Observation observe(const CameraState& cam, const Scenario& scenario, const Reference& ref,
                    std::mt19937_64& rng);

/// Advances the camera by dt under a piecewise-constant command. Without lag
/// the yawing translation is integrated in closed form.
CameraState integrate(const CameraState& cam, const ControlInput& u, double dt, double lag = 0.0);

/// Clamps v_x, v_y, v_z to [-vmax, vmax]; omega_z passes through.
ControlInput safety_clamp(const ControlInput& u, double vmax);

struct TrialSample {
  double t = 0.0;
  Vec4 q = Vec4::Zero();        ///< features consumed by the controller
  Vec4 q_star = Vec4::Zero();
  Vec4 e = Vec4::Zero();        ///< true (noise-free) feature error
  Vec4 u_cmd = Vec4::Zero();    ///< controller output, before the safety clamp
  Vec4 u_applied = Vec4::Zero();
  Vec4 kf_x = Vec4::Zero();     ///< filter estimate, or the raw measurement without filter
  bool measurement_valid = false;
  bool controller_ran = false;
  bool stale_estimate = false;
  std::optional<QpStatus> qp_status;
  VecX predicted;  ///< MPC predicted errors over the horizon (empty for IBVS)
};

struct TrialSummary {
  bool converged = false;
  double convergence_time = 0.0;  ///< +inf when never converged
  double rmse_error = 0.0;
  double rmse_joint = 0.0;
  int constraint_violations = 0;
  Vec4 oscillation_std = Vec4::Zero();
  double oscillation = 0.0;  ///< 2-norm of oscillation_std
};

struct TrialResult {
  std::vector<TrialSample> series;
  TrialSummary summary;
};

/// Counts MPC steps with Optimal status whose command or prediction leaves the
/// enabled bounds by more than `tol`.
int count_constraint_violations(std::span<const TrialSample> series, const MpcConfig& cfg,
                                ConstraintFlags flags, double tol = 1e-8);

/// rmse_error = sqrt(mean |e|^2); rmse_joint = sqrt(mean |e|^2 + mean |v_e|^2) with
/// v_e the translational command; convergence when |e| < threshold and stays
/// below for `hold` seconds (or until the series ends); oscillation from the
/// standard deviation of successive command differences.
TrialSummary compute_metrics(std::span<const TrialSample> series, double threshold, double hold = 1.0);

/// Closed loop at the scenario control rate. Throws TrialDiverged when the true
/// error norm exceeds scenario.divergence_threshold.
TrialResult run_trial(const Scenario& scenario, const MpcConfig& mpc_cfg, const KalmanConfig& kf_cfg);

}  // namespace mvs
