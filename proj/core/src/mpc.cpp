#include "mvs/mpc.hpp"

#include <string>

#include "mvs/errors.hpp"

namespace mvs {

namespace {

bool symmetric_psd(const Mat4& M) {
  if (!M.allFinite()) return false;
  if ((M - M.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, M.lpNorm<Eigen::Infinity>())) {
    return false;
  }
  const Eigen::SelfAdjointEigenSolver<Mat4> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, M.lpNorm<Eigen::Infinity>());
}

MatX block_diag(const Mat4& M, int copies) {
  MatX out = MatX::Zero(4 * copies, 4 * copies);
  for (int i = 0; i < copies; ++i) out.block<4, 4>(4 * i, 4 * i) = M;
  return out;
}

// Appends rows [M | -I] so that M U - s <= rhs for a 4-row block, used for the
// softened terminal set; s >= 0 is appended separately.
QpProblem with_terminal_slack(const QpProblem& hard, Eigen::Index terminal_rows, double weight) {
  const Eigen::Index n = hard.num_variables();
  const Eigen::Index mi = hard.num_inequalities();
  const Eigen::Index first_terminal = mi - terminal_rows;
  const Eigen::Index slack_dim = 4;

  QpProblem soft;
  soft.H = MatX::Zero(n + slack_dim, n + slack_dim);
  soft.H.topLeftCorner(n, n) = hard.H;
  soft.f = VecX::Zero(n + slack_dim);
  soft.f.head(n) = hard.f;
  soft.f.tail(slack_dim).setConstant(weight);

  soft.G = MatX::Zero(mi + slack_dim, n + slack_dim);
  soft.w = VecX::Zero(mi + slack_dim);
  soft.G.topLeftCorner(mi, n) = hard.G;
  soft.w.head(mi) = hard.w;
  for (Eigen::Index r = 0; r < terminal_rows; ++r) {
    soft.G(first_terminal + r, n + (r % slack_dim)) = -1.0;
  }
  for (Eigen::Index j = 0; j < slack_dim; ++j) soft.G(mi + j, n + j) = -1.0;

  soft.Eq = MatX::Zero(hard.num_equalities(), n + slack_dim);
  if (hard.num_equalities() > 0) soft.Eq.leftCols(n) = hard.Eq;
  soft.d = hard.d;
  return soft;
}

}  // namespace

std::vector<Violation> MpcConfig::violations() const {
  std::vector<Violation> out;
  if (horizon < 1) out.push_back({"horizon", "must be >= 1"});
  if (!(sample_period > 0.0)) out.push_back({"sample_period", "must be > 0"});
  if (!symmetric_psd(Q)) out.push_back({"Q", "must be symmetric positive semidefinite"});
  if (!symmetric_psd(R)) out.push_back({"R", "must be symmetric positive semidefinite"});
  if (!symmetric_psd(P_term)) out.push_back({"P_term", "must be symmetric positive semidefinite"});
  if (!(e_min.array() < e_max.array()).all()) out.push_back({"e_min", "must be < e_max componentwise"});
  if (!(u_min.array() < u_max.array()).all()) out.push_back({"u_min", "must be < u_max componentwise"});
  if (!(eps_term.array() > 0.0).all()) out.push_back({"eps_term", "must be > 0"});
  if (!(terminal_slack_weight > 0.0)) out.push_back({"terminal_slack_weight", "must be > 0"});
  if (!(solver.tol > 0.0)) out.push_back({"solver.tol", "must be > 0"});
  if (solver.max_iter < 1) out.push_back({"solver.max_iter", "must be >= 1"});
  if (!(solver.rho > 0.0)) out.push_back({"solver.rho", "must be > 0"});
  if (!(solver.sigma > 0.0)) out.push_back({"solver.sigma", "must be > 0"});
  if (!(solver.alpha > 0.0 && solver.alpha < 2.0)) out.push_back({"solver.alpha", "must lie in (0, 2)"});
  return out;
}

void MpcConfig::validate() const { throw_first(violations()); }

DiscreteModel discretize(const InteractionMatrix& L, double sample_period) {
  if (!(sample_period > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample period must be > 0");
  return {Mat4::Identity(), sample_period * L.entries};
}

PredictionMatrices build_prediction(const Mat4& A, const Mat4& B, int horizon) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  const int N = horizon;
  PredictionMatrices p;
  p.Phi = MatX::Zero(4 * N, 4);
  p.Gamma = MatX::Zero(4 * N, 4 * N);

  // powers[k] = A^k B, filled once and reused along each block diagonal.
  std::vector<Mat4> powers(static_cast<std::size_t>(N));
  Mat4 Ak = Mat4::Identity();
  for (int k = 0; k < N; ++k) {
    powers[static_cast<std::size_t>(k)] = Ak * B;
    Ak = A * Ak;
    p.Phi.block<4, 4>(4 * k, 0) = Ak;
  }
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j <= i; ++j) {
      p.Gamma.block<4, 4>(4 * i, 4 * j) = powers[static_cast<std::size_t>(i - j)];
    }
  }
  return p;
}

VecX predict_errors(const Vec4& e_k, const PredictionMatrices& pred, const VecX& U) {
  if (U.size() != pred.Gamma.cols()) throw Error(ErrorCode::DimensionMismatch, "input sequence length");
  return pred.Phi * e_k + pred.Gamma * U;
}

QpProblem condense(const Vec4& e_k, const PredictionMatrices& pred, const MpcConfig& cfg) {
  const Eigen::Index n = pred.Gamma.cols();
  if (pred.Phi.cols() != 4 || pred.Phi.rows() != n || pred.Gamma.rows() != n || n % 4 != 0 ||
      n / 4 != cfg.horizon) {
    throw Error(ErrorCode::DimensionMismatch, "prediction matrices do not match the horizon");
  }
  const int N = cfg.horizon;

  MatX Qbar = block_diag(cfg.Q, N);
  Qbar.bottomRightCorner<4, 4>() += cfg.P_term;
  const MatX Rbar = block_diag(cfg.R, N);

  QpProblem qp;
  const VecX free_response = pred.Phi * e_k;
  const MatX GtQ = pred.Gamma.transpose() * Qbar;
  qp.H = 2.0 * (GtQ * pred.Gamma + Rbar);
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.f = 2.0 * GtQ * free_response;

  Eigen::Index rows = 0;
  if (cfg.flags.input) rows += 2 * n;
  if (cfg.flags.state) rows += 2 * n;
  if (cfg.flags.terminal) rows += 8;
  qp.G = MatX::Zero(rows, n);
  qp.w = VecX::Zero(rows);

  Eigen::Index r = 0;
  if (cfg.flags.input) {
    qp.G.block(r, 0, n, n) = MatX::Identity(n, n);
    qp.w.segment(r, n) = cfg.u_max.replicate(N, 1);
    r += n;
    qp.G.block(r, 0, n, n) = -MatX::Identity(n, n);
    qp.w.segment(r, n) = -cfg.u_min.replicate(N, 1);
    r += n;
  }
  if (cfg.flags.state) {
    qp.G.block(r, 0, n, n) = pred.Gamma;
    qp.w.segment(r, n) = cfg.e_max.replicate(N, 1) - free_response;
    r += n;
    qp.G.block(r, 0, n, n) = -pred.Gamma;
    qp.w.segment(r, n) = -cfg.e_min.replicate(N, 1) + free_response;
    r += n;
  }
  if (cfg.flags.terminal) {
    const MatX last = pred.Gamma.bottomRows(4);
    const Vec4 free_last = free_response.tail<4>();
    qp.G.block(r, 0, 4, n) = last;
    qp.w.segment<4>(r) = cfg.eps_term - free_last;
    r += 4;
    qp.G.block(r, 0, 4, n) = -last;
    qp.w.segment<4>(r) = cfg.eps_term + free_last;
    r += 4;
  }
  qp.Eq.resize(0, n);
  qp.d.resize(0);
  return qp;
}

MpcStepResult mpc_step(const Vec4& e_k, const InteractionMatrix& L, const MpcConfig& cfg) {
  cfg.validate();
  if (!e_k.allFinite()) throw Error(ErrorCode::InvalidArgument, "error vector must be finite");
  if (!L.entries.allFinite() || condition_number(L) > kMaxInteractionCondition) {
    throw Error(ErrorCode::SingularModel, "interaction matrix is singular or non-finite");
  }

  MpcStepResult out;
  out.model = discretize(L, cfg.sample_period);
  const PredictionMatrices pred = build_prediction(out.model.A, out.model.B, cfg.horizon);
  const QpProblem hard = condense(e_k, pred, cfg);
  const Eigen::Index n = hard.num_variables();

  QpSolution sol = solve_qp(hard, cfg.solver);

  if (sol.status != QpStatus::Optimal && cfg.flags.terminal) {
    const QpProblem soft = with_terminal_slack(hard, 8, cfg.terminal_slack_weight);
    QpSolution relaxed = solve_qp(soft, cfg.solver);
    if (relaxed.status == QpStatus::Optimal) {
      relaxed.U_opt = relaxed.U_opt.head(n).eval();
      relaxed.status = QpStatus::SoftenedTerminal;
      relaxed.diagnostic = "terminal set relaxed: " + sol.diagnostic;
      sol = std::move(relaxed);
    }
  }

  if (sol.status == QpStatus::Infeasible) {
    // Keep emitting a bounded command: fall back to the input-constrained problem.
    MpcConfig fallback = cfg;
    fallback.flags = {.input = true, .state = false, .terminal = false};
    QpSolution backup = solve_qp(condense(e_k, pred, fallback), cfg.solver);
    backup.status = QpStatus::Infeasible;
    backup.diagnostic = "constraints infeasible, input-bounded fallback: " + sol.diagnostic;
    sol = std::move(backup);
  }

  out.u = ControlInput::from_vector(sol.U_opt.head<4>());
  out.predicted = predict_errors(e_k, pred, sol.U_opt);
  out.solution = std::move(sol);
  return out;
}

}  // namespace mvs
