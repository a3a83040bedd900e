#pragma once

#include <optional>

#include "mvs/errors.hpp"
#include "mvs/types.hpp"

namespace mvs {

/// Linear filter for the feature vector, x(k) = A x(k-1) + w, z(k) = C x(k) + v.
struct KalmanConfig {
  Mat4 A = Mat4::Identity();
  Mat4 C = Mat4::Identity();
  Mat4 Q_noise = 1e-4 * Mat4::Identity();
  Mat4 R_noise = Vec4(0.02 * 0.02, 0.02 * 0.02, 0.02 * 0.02, 0.05 * 0.05).asDiagonal();
  Mat4 P0 = Mat4::Identity();
  Vec4 x0 = Vec4::Zero();
  int max_dropout = 30;

  /// Every broken invariant, in declaration order.
  [[nodiscard]] std::vector<Violation> violations() const;
  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

struct KalmanState {
  Vec4 x_hat = Vec4::Zero();
  Mat4 P_cov = Mat4::Identity();
  int steps_since_update = 0;
};

KalmanState initial_state(const KalmanConfig& cfg);

/// x <- A x, P <- A P A^T + Q_noise.
KalmanState predict(const KalmanState& state, const KalmanConfig& cfg);

/// Standard measurement update; P <- (I - K C) P, symmetrized.
/// Throws SingularInnovation when S = C P C^T + R_noise cannot be factored.
KalmanState update(const KalmanState& state, const Vec4& z, const KalmanConfig& cfg);

/// Gain K = P C^T S^{-1} for a prior covariance.
Mat4 kalman_gain(const Mat4& P_prior, const KalmanConfig& cfg);

struct KalmanStepResult {
  KalmanState state;
  Vec4 x_out;
  bool stale = false;  ///< steps_since_update exceeded cfg.max_dropout
};

/// Predict, then update when a measurement is present.
KalmanStepResult step(const KalmanState& state, const std::optional<Vec4>& z, const KalmanConfig& cfg);

}  // namespace mvs
