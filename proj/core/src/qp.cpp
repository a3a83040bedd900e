#include "mvs/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mvs/errors.hpp"

namespace mvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VecX& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Inequalities and equalities stacked as l <= A x <= u, rows scaled to unit
// infinity norm. Multipliers of the scaled rows map back through `scale`.
struct StackedConstraints {
  MatX A;
  VecX l;
  VecX u;
  VecX scale;
  Eigen::Index num_ineq = 0;
};

StackedConstraints stack_constraints(const QpProblem& qp) {
  const Eigen::Index n = qp.num_variables();
  const Eigen::Index mi = qp.num_inequalities();
  const Eigen::Index me = qp.num_equalities();
  StackedConstraints s;
  s.num_ineq = mi;
  s.A.resize(mi + me, n);
  s.l.resize(mi + me);
  s.u.resize(mi + me);
  s.scale.resize(mi + me);
  if (mi > 0) {
    s.A.topRows(mi) = qp.G;
    s.l.head(mi).setConstant(-kInf);
    s.u.head(mi) = qp.w;
  }
  if (me > 0) {
    s.A.bottomRows(me) = qp.Eq;
    s.l.tail(me) = qp.d;
    s.u.tail(me) = qp.d;
  }
  for (Eigen::Index i = 0; i < s.A.rows(); ++i) {
    const double norm = s.A.row(i).lpNorm<Eigen::Infinity>();
    const double d = norm > 0.0 ? 1.0 / norm : 1.0;
    s.scale(i) = d;
    s.A.row(i) *= d;
    s.l(i) *= d;
    s.u(i) *= d;
  }
  return s;
}

VecX project_box(const VecX& v, const VecX& l, const VecX& u) { return v.cwiseMax(l).cwiseMin(u); }

bool primal_infeasibility_certificate(const StackedConstraints& c, const VecX& dy, double eps) {
  const double norm = inf_norm(dy);
  if (norm < 1e-12) return false;
  if (inf_norm(c.A.transpose() * dy) > eps * norm) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < dy.size(); ++i) {
    if (dy(i) > 0.0) {
      if (!std::isfinite(c.u(i))) return false;
      support += c.u(i) * dy(i);
    } else if (dy(i) < 0.0) {
      if (!std::isfinite(c.l(i))) return false;
      support += c.l(i) * dy(i);
    }
  }
  return support < -eps * norm;
}

bool dual_infeasibility_certificate(const QpProblem& qp, const StackedConstraints& c, const VecX& dx,
                                    double eps) {
  const double norm = inf_norm(dx);
  if (norm < 1e-12) return false;
  if (inf_norm(qp.H * dx) > eps * norm) return false;
  if (qp.f.dot(dx) >= -eps * norm) return false;
  const VecX adx = c.A * dx;
  for (Eigen::Index i = 0; i < adx.size(); ++i) {
    const bool lo = std::isfinite(c.l(i));
    const bool hi = std::isfinite(c.u(i));
    if (hi && adx(i) > eps * norm) return false;
    if (lo && adx(i) < -eps * norm) return false;
  }
  return true;
}

struct Polished {
  bool ok = false;
  VecX x;
  VecX lambda;
  VecX nu;
};

// Solves the equality-constrained KKT system of the working set with a small
// regularization and iterative refinement, then adjusts the working set until
// duals have the right sign and inactive rows are satisfied.
Polished polish(const QpProblem& qp, std::vector<bool> active) {
  const Eigen::Index n = qp.num_variables();
  const Eigen::Index mi = qp.num_inequalities();
  const Eigen::Index me = qp.num_equalities();
  const double hscale = std::max(1.0, qp.H.size() ? qp.H.lpNorm<Eigen::Infinity>() : 1.0);
  const double delta = 1e-10 * hscale;

  Polished out;
  const int max_rounds = static_cast<int>(3 * (mi + 1)) + 20;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (active[static_cast<std::size_t>(i)]) rows.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index k = n + na + me;

    MatX kkt = MatX::Zero(k, k);
    VecX rhs(k);
    kkt.topLeftCorner(n, n) = qp.H;
    rhs.head(n) = -qp.f;
    for (Eigen::Index j = 0; j < na; ++j) {
      kkt.block(n + j, 0, 1, n) = qp.G.row(rows[static_cast<std::size_t>(j)]);
      rhs(n + j) = qp.w(rows[static_cast<std::size_t>(j)]);
    }
    if (me > 0) {
      kkt.block(n + na, 0, me, n) = qp.Eq;
      rhs.tail(me) = qp.d;
    }
    kkt.topRightCorner(n, na + me) = kkt.bottomLeftCorner(na + me, n).transpose();

    MatX reg = kkt;
    reg.topLeftCorner(n, n).diagonal().array() += delta;
    reg.bottomRightCorner(na + me, na + me).diagonal().array() -= delta;
    const Eigen::PartialPivLU<MatX> lu(reg);
    VecX sol = lu.solve(rhs);
    for (int it = 0; it < 10; ++it) {
      const VecX r = rhs - kkt * sol;
      if (inf_norm(r) < 1e-15 * std::max(1.0, inf_norm(rhs))) break;
      sol += lu.solve(r);
    }
    if (!sol.allFinite()) return out;

    const VecX x = sol.head(n);
    const VecX lam_active = sol.segment(n, na);

    // Drop the working-set row with the most negative multiplier.
    Eigen::Index worst = -1;
    double worst_val = -1e-11;
    for (Eigen::Index j = 0; j < na; ++j) {
      if (lam_active(j) < worst_val) {
        worst_val = lam_active(j);
        worst = rows[static_cast<std::size_t>(j)];
      }
    }
    if (worst >= 0) {
      active[static_cast<std::size_t>(worst)] = false;
      continue;
    }

    // Add the most violated inactive row.
    Eigen::Index viol = -1;
    double viol_val = 0.0;
    if (mi > 0) {
      const VecX slack = qp.G * x - qp.w;
      for (Eigen::Index i = 0; i < mi; ++i) {
        if (active[static_cast<std::size_t>(i)]) continue;
        const double tol = 1e-11 * std::max(1.0, std::abs(qp.w(i)));
        if (slack(i) > tol && slack(i) > viol_val) {
          viol_val = slack(i);
          viol = i;
        }
      }
    }
    if (viol >= 0) {
      active[static_cast<std::size_t>(viol)] = true;
      continue;
    }

    out.ok = true;
    out.x = x;
    out.lambda = VecX::Zero(mi);
    for (Eigen::Index j = 0; j < na; ++j) {
      out.lambda(rows[static_cast<std::size_t>(j)]) = std::max(0.0, lam_active(j));
    }
    out.nu = sol.tail(me);
    return out;
  }
  return out;
}

QpSolution finish(const QpProblem& qp, VecX x, VecX lambda, VecX nu, QpStatus status, int iterations,
                  bool polished) {
  QpSolution s;
  s.residuals = kkt_residuals(qp, x, lambda, nu);
  s.kkt_residual = s.residuals.max();
  s.objective = qp.objective(x);
  s.U_opt = std::move(x);
  s.lambda = std::move(lambda);
  s.nu = std::move(nu);
  s.status = status;
  s.iterations = iterations;
  s.polished = polished;
  return s;
}

QpSolution solve_unconstrained(const QpProblem& qp, const QpSettings& settings) {
  const Eigen::Index n = qp.num_variables();
  const Eigen::LDLT<MatX> ldlt(qp.H);
  VecX x = ldlt.solve(-qp.f);
  // Refine against round-off in nearly singular Hessians.
  for (int it = 0; it < 3 && x.allFinite(); ++it) x += ldlt.solve(-qp.f - qp.H * x);
  if (!x.allFinite()) x = VecX::Zero(n);
  QpSolution s = finish(qp, x, VecX(0), VecX(0), QpStatus::Optimal, 0, true);
  if (s.kkt_residual > settings.tol) {
    s.status = QpStatus::Infeasible;
    s.diagnostic = "objective unbounded below (H singular and f outside its range)";
  }
  return s;
}

}  // namespace

void QpProblem::check_dimensions() const {
  const Eigen::Index n = H.rows();
  if (H.cols() != n) throw Error(ErrorCode::DimensionMismatch, "H must be square");
  if (f.size() != n) throw Error(ErrorCode::DimensionMismatch, "f length differs from H");
  if (G.rows() != w.size()) throw Error(ErrorCode::DimensionMismatch, "rows of G and w differ");
  if (G.rows() > 0 && G.cols() != n) throw Error(ErrorCode::DimensionMismatch, "G column count");
  if (Eq.rows() != d.size()) throw Error(ErrorCode::DimensionMismatch, "rows of Eq and d differ");
  if (Eq.rows() > 0 && Eq.cols() != n) throw Error(ErrorCode::DimensionMismatch, "Eq column count");
}

double QpProblem::objective(const VecX& U) const { return 0.5 * U.dot(H * U) + f.dot(U); }

std::string_view to_string(QpStatus s) noexcept {
  switch (s) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::SoftenedTerminal: return "SoftenedTerminal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::MaxIterations: return "MaxIterations";
  }
  return "Unknown";
}

double KktResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

KktResiduals kkt_residuals(const QpProblem& qp, const VecX& U, const VecX& lambda, const VecX& nu) {
  KktResiduals r;
  VecX grad = qp.H * U + qp.f;
  if (qp.num_inequalities() > 0) {
    grad += qp.G.transpose() * lambda;
    const VecX slack = qp.G * U - qp.w;
    r.primal = std::max(0.0, slack.maxCoeff());
    r.dual = std::max(0.0, -lambda.minCoeff());
    r.complementarity = inf_norm(lambda.cwiseProduct(slack));
  }
  if (qp.num_equalities() > 0) {
    grad += qp.Eq.transpose() * nu;
    r.primal = std::max(r.primal, inf_norm(qp.Eq * U - qp.d));
  }
  r.stationarity = inf_norm(grad);
  return r;
}

QpSolution solve_qp(const QpProblem& qp, const QpSettings& settings) {
  qp.check_dimensions();
  if (!(settings.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver tolerance must be positive");
  if (!(settings.alpha > 0.0 && settings.alpha < 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "relaxation parameter must lie in (0, 2)");
  }

  const Eigen::Index n = qp.num_variables();
  const Eigen::Index mi = qp.num_inequalities();
  const Eigen::Index me = qp.num_equalities();
  if (mi + me == 0) return solve_unconstrained(qp, settings);

  const StackedConstraints c = stack_constraints(qp);
  const Eigen::Index m = mi + me;

  double rho = settings.rho;
  VecX rho_vec(m);
  auto set_rho = [&](double base) {
    for (Eigen::Index i = 0; i < m; ++i) rho_vec(i) = (c.l(i) == c.u(i)) ? 1e3 * base : base;
  };
  set_rho(rho);

  auto factor = [&]() {
    MatX K = qp.H;
    K.diagonal().array() += settings.sigma;
    K.noalias() += c.A.transpose() * rho_vec.asDiagonal() * c.A;
    return Eigen::LLT<MatX>(K);
  };
  Eigen::LLT<MatX> llt = factor();
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "Hessian is not positive semi-definite");
  }

  VecX x = VecX::Zero(n);
  VecX z = project_box(VecX::Zero(m), c.l, c.u);
  VecX y = VecX::Zero(m);
  VecX dx = VecX::Zero(n);
  VecX dy = VecX::Zero(m);

  double eps = std::max(settings.tol, 1e-5);
  const double alpha = settings.alpha;

  auto unscaled_duals = [&](const VecX& ys) {
    const VecX yo = ys.cwiseProduct(c.scale);
    return std::pair<VecX, VecX>{yo.head(mi).cwiseMax(0.0), yo.tail(me)};
  };

  auto try_finish = [&](int iter, bool exhausted) -> std::optional<QpSolution> {
    if (settings.polish) {
      std::vector<bool> active(static_cast<std::size_t>(mi), false);
      const VecX ax = c.A * x;
      for (Eigen::Index i = 0; i < mi; ++i) {
        active[static_cast<std::size_t>(i)] = (c.u(i) - ax(i)) < y(i);
      }
      Polished p = polish(qp, std::move(active));
      if (p.ok) {
        QpSolution s = finish(qp, p.x, p.lambda, p.nu, QpStatus::Optimal, iter, true);
        if (s.kkt_residual <= settings.tol) return s;
      }
    }
    auto [lam, nu] = unscaled_duals(y);
    QpSolution s = finish(qp, x, lam, nu, QpStatus::Optimal, iter, false);
    if (s.kkt_residual <= settings.tol) return s;
    if (exhausted) {
      s.status = QpStatus::MaxIterations;
      s.diagnostic = "iteration limit reached before KKT tolerance";
      return s;
    }
    return std::nullopt;
  };

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    const VecX rhs = settings.sigma * x - qp.f + c.A.transpose() * (rho_vec.cwiseProduct(z) - y);
    const VecX xt = llt.solve(rhs);
    const VecX zt = c.A * xt;
    const VecX x_next = alpha * xt + (1.0 - alpha) * x;
    const VecX z_relaxed = alpha * zt + (1.0 - alpha) * z;
    const VecX z_next = project_box(z_relaxed + y.cwiseQuotient(rho_vec), c.l, c.u);
    const VecX y_next = y + rho_vec.cwiseProduct(z_relaxed - z_next);

    dx = x_next - x;
    dy = y_next - y;
    x = x_next;
    z = z_next;
    y = y_next;

    const bool last = iter == settings.max_iter;
    if (iter % settings.check_interval != 0 && !last) continue;

    const VecX ax = c.A * x;
    const VecX hx = qp.H * x;
    const VecX aty = c.A.transpose() * y;
    const double r_prim = inf_norm(ax - z);
    const double r_dual = inf_norm(hx + qp.f + aty);
    const double scale_p = std::max(inf_norm(ax), inf_norm(z));
    const double scale_d = std::max({inf_norm(hx), inf_norm(aty), inf_norm(qp.f)});

    if (r_prim <= eps * (1.0 + scale_p) && r_dual <= eps * (1.0 + scale_d)) {
      if (auto s = try_finish(iter, false)) return *s;
      eps = std::max(eps * 0.1, 1e-13);
    }

    if (primal_infeasibility_certificate(c, dy, settings.infeasibility_tol)) {
      auto [lam, nu] = unscaled_duals(y);
      QpSolution s = finish(qp, x, lam, nu, QpStatus::Infeasible, iter, false);
      s.diagnostic = "primal infeasibility certificate found";
      return s;
    }
    if (dual_infeasibility_certificate(qp, c, dx, settings.infeasibility_tol)) {
      auto [lam, nu] = unscaled_duals(y);
      QpSolution s = finish(qp, x, lam, nu, QpStatus::Infeasible, iter, false);
      s.diagnostic = "dual infeasibility certificate found (objective unbounded)";
      return s;
    }

    if (last) break;

    if (iter % settings.adaptive_rho_interval == 0 && r_prim > 0.0 && r_dual > 0.0) {
      const double ratio = std::sqrt((r_prim / std::max(scale_p, 1e-30)) /
                                     (r_dual / std::max(scale_d, 1e-30)));
      const double next = std::clamp(rho * ratio, 1e-6, 1e6);
      if (next > 5.0 * rho || next < 0.2 * rho) {
        rho = next;
        set_rho(rho);
        llt = factor();
      }
    }
  }

  return *try_finish(settings.max_iter, true);
}

}  // namespace mvs
