#pragma once

#include <string>
#include <string_view>

#include "mvs/types.hpp"

namespace mvs {

/// Dense convex QP
///
///   minimize    1/2 U^T H U + f^T U
///   subject to  G U <= w,  Eq U = d.
///
/// Either constraint block may be empty (zero rows).
struct QpProblem {
  MatX H;
  VecX f;
  MatX G;
  VecX w;
  MatX Eq;
  VecX d;

  [[nodiscard]] Eigen::Index num_variables() const { return H.rows(); }
  [[nodiscard]] Eigen::Index num_inequalities() const { return G.rows(); }
  [[nodiscard]] Eigen::Index num_equalities() const { return Eq.rows(); }

  /// Throws DimensionMismatch on inconsistent shapes.
  void check_dimensions() const;

  [[nodiscard]] double objective(const VecX& U) const;
};

enum class QpStatus {
  Optimal,
  SoftenedTerminal,  ///< set by the MPC layer when a terminal slack was needed
  Infeasible,
  MaxIterations,
};

std::string_view to_string(QpStatus s) noexcept;

struct KktResiduals {
  double stationarity = 0.0;     ///< |H U + f + G^T lambda + Eq^T nu|_inf
  double primal = 0.0;           ///< max(G U - w)_+ and |Eq U - d|_inf
  double dual = 0.0;             ///< max(-lambda)_+
  double complementarity = 0.0;  ///< max |lambda_i (G U - w)_i|

  [[nodiscard]] double max() const;
};

KktResiduals kkt_residuals(const QpProblem& qp, const VecX& U, const VecX& lambda, const VecX& nu);

struct QpSettings {
  double tol = 1e-6;
  int max_iter = 10000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  ///< over-relaxation in (0, 2)
  double infeasibility_tol = 1e-6;
  int check_interval = 10;
  int adaptive_rho_interval = 50;
  bool polish = true;
};

struct QpSolution {
  VecX U_opt;
  VecX lambda;  ///< multipliers of G U <= w
  VecX nu;      ///< multipliers of Eq U = d
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIterations;
  double kkt_residual = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  bool polished = false;
  std::string diagnostic;
};

/// Over-relaxed ADMM with an active-set polish. Deterministic for fixed inputs.
/// Infeasible problems come back with status Infeasible and a diagnostic; an
/// exhausted iteration budget returns the best iterate with status MaxIterations.
QpSolution solve_qp(const QpProblem& qp, const QpSettings& settings = {});

inline QpSolution solve_qp(const QpProblem& qp, double tol, int max_iter) {
  QpSettings s;
  s.tol = tol;
  s.max_iter = max_iter;
  return solve_qp(qp, s);
}

}  // namespace mvs
