#include "mvs/kalman.hpp"

#include "mvs/errors.hpp"

namespace mvs {

namespace {

bool symmetric(const Mat4& M) {
  return (M - M.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, M.lpNorm<Eigen::Infinity>());
}

double min_eigenvalue(const Mat4& M) {
  return Eigen::SelfAdjointEigenSolver<Mat4>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

std::vector<Violation> KalmanConfig::violations() const {
  std::vector<Violation> out;
  if (!A.allFinite()) out.push_back({"A", "must be finite"});
  if (!C.allFinite()) out.push_back({"C", "must be finite"});
  if (!Q_noise.allFinite() || !symmetric(Q_noise) || min_eigenvalue(Q_noise) < 0.0) {
    out.push_back({"Q_noise", "must be symmetric positive semidefinite"});
  }
  if (!R_noise.allFinite() || !symmetric(R_noise) || min_eigenvalue(R_noise) <= 0.0) {
    out.push_back({"R_noise", "must be symmetric positive definite"});
  }
  if (!P0.allFinite() || !symmetric(P0) || min_eigenvalue(P0) < 0.0) {
    out.push_back({"P0", "must be symmetric positive semidefinite"});
  }
  if (!x0.allFinite()) out.push_back({"x0", "must be finite"});
  if (max_dropout < 0) out.push_back({"max_dropout", "must be >= 0"});
  return out;
}

void KalmanConfig::validate() const { throw_first(violations()); }

KalmanState initial_state(const KalmanConfig& cfg) { return {cfg.x0, cfg.P0, 0}; }

KalmanState predict(const KalmanState& state, const KalmanConfig& cfg) {
  KalmanState next;
  next.x_hat = cfg.A * state.x_hat;
  next.P_cov = cfg.A * state.P_cov * cfg.A.transpose() + cfg.Q_noise;
  next.P_cov = (0.5 * (next.P_cov + next.P_cov.transpose())).eval();
  next.steps_since_update = state.steps_since_update + 1;
  return next;
}

Mat4 kalman_gain(const Mat4& P_prior, const KalmanConfig& cfg) {
  const Mat4 S = cfg.C * P_prior * cfg.C.transpose() + cfg.R_noise;
  const Eigen::LDLT<Mat4> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not invertible");
  }
  // K = P C^T S^{-1}  <=>  S K^T = C P^T
  return ldlt.solve(cfg.C * P_prior.transpose()).transpose();
}

KalmanState update(const KalmanState& state, const Vec4& z, const KalmanConfig& cfg) {
  const Vec4 innovation = z - cfg.C * state.x_hat;
  const Mat4 K = kalman_gain(state.P_cov, cfg);

  KalmanState next;
  next.x_hat = state.x_hat + K * innovation;
  next.P_cov = (Mat4::Identity() - K * cfg.C) * state.P_cov;
  next.P_cov = (0.5 * (next.P_cov + next.P_cov.transpose())).eval();
  next.steps_since_update = 0;
  return next;
}

KalmanStepResult step(const KalmanState& state, const std::optional<Vec4>& z, const KalmanConfig& cfg) {
  KalmanStepResult r;
  r.state = predict(state, cfg);
  if (z) r.state = update(r.state, *z, cfg);
  r.x_out = r.state.x_hat;
  r.stale = r.state.steps_since_update > cfg.max_dropout;
  return r;
}

}  // namespace mvs
