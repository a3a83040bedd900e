#pragma once

#include "mvs/interaction.hpp"
#include "mvs/qp.hpp"
#include "mvs/errors.hpp"
#include "mvs/types.hpp"

namespace mvs {

/// Which constraint families enter the condensed QP.
struct ConstraintFlags {
  bool input = false;
  bool state = false;
  bool terminal = false;
};

struct MpcConfig {
  int horizon = 20;
  double sample_period = 1.0 / 30.0;
  Mat4 Q = Vec4(10.0, 10.0, 10.0, 5.0).asDiagonal();
  Mat4 R = Mat4::Identity();
  Mat4 P_term = 10.0 * Mat4(Vec4(10.0, 10.0, 10.0, 5.0).asDiagonal());
  Vec4 e_min = -Vec4(2.0, 2.0, 3.0, 3.14159265358979323846);
  Vec4 e_max = Vec4(2.0, 2.0, 3.0, 3.14159265358979323846);
  Vec4 u_min = -Vec4(1.0, 1.0, 1.0, 0.8);
  Vec4 u_max = Vec4(1.0, 1.0, 1.0, 0.8);
  Vec4 eps_term = Vec4(0.5, 0.5, 1.0, 0.5);
  ConstraintFlags flags;
  double terminal_slack_weight = 1e6;
  QpSettings solver;

  /// Every broken invariant, in declaration order.
  [[nodiscard]] std::vector<Violation> violations() const;
  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

/// Stacked prediction E = Phi e_k + Gamma U over the horizon.
struct PredictionMatrices {
  MatX Phi;    ///< 4N x 4
  MatX Gamma;  ///< 4N x 4N, block lower triangular
};

struct DiscreteModel {
  Mat4 A;
  Mat4 B;
};

/// A = I, B = T_s L.
DiscreteModel discretize(const InteractionMatrix& L, double sample_period);

/// Phi = [A; A^2; ...; A^N], Gamma(i, j) = A^(i-j) B for j <= i.
PredictionMatrices build_prediction(const Mat4& A, const Mat4& B, int horizon);

/// H = 2 (Gamma^T Qbar Gamma + Rbar), f = 2 Gamma^T Qbar Phi e_k with
/// Qbar = blkdiag(Q, ..., Q, Q + P_term): every predicted error e(k+1..k+N) is
/// weighted by Q and the last one also by P_term. Inequality rows follow the flags.
QpProblem condense(const Vec4& e_k, const PredictionMatrices& pred, const MpcConfig& cfg);

/// Stacked predicted errors for a given input sequence.
VecX predict_errors(const Vec4& e_k, const PredictionMatrices& pred, const VecX& U);

struct MpcStepResult {
  ControlInput u;
  QpSolution solution;
  VecX predicted;  ///< E = Phi e_k + Gamma U*, [e(k+1); ...; e(k+N)]
  DiscreteModel model;
};

/// One receding-horizon step: discretize, predict, condense, solve and return
/// the first input. A terminal set that makes the QP infeasible is relaxed by a
/// slack penalized at cfg.terminal_slack_weight (status SoftenedTerminal).
MpcStepResult mpc_step(const Vec4& e_k, const InteractionMatrix& L, const MpcConfig& cfg);

}  // namespace mvs
