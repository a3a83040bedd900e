#include <cmath>
#include <random>

#include <doctest.h>

#include "mvs/errors.hpp"
#include "mvs/qp.hpp"
#include "oracles.hpp"

using namespace mvs;
using doctest::Approx;

namespace {

QpProblem box_problem(const MatX& H, const VecX& f, const VecX& lo, const VecX& hi) {
  const auto n = H.rows();
  QpProblem qp;
  qp.H = H;
  qp.f = f;
  qp.G.resize(2 * n, n);
  qp.G << MatX::Identity(n, n), -MatX::Identity(n, n);
  qp.w.resize(2 * n);
  qp.w << hi, -lo;
  qp.Eq.resize(0, n);
  qp.d.resize(0);
  return qp;
}

// Box plus m random general rows, feasible by construction around a random point.
QpProblem mixed_problem(std::mt19937_64& rng, int n, int m) {
  const MatX H = oracle::random_spd(rng, n, 0.05);
  const VecX f = oracle::random_vec(rng, n, 3.0);
  const VecX lo = VecX::Constant(n, -1.0);
  const VecX hi = VecX::Constant(n, 1.0);
  QpProblem qp = box_problem(H, f, lo, hi);
  const MatX A = oracle::random_vec(rng, m * n).reshaped(m, n);
  const VecX x0 = oracle::random_vec(rng, n, 0.3).cwiseMax(-0.9).cwiseMin(0.9);
  std::uniform_real_distribution<double> slack(0.0, 0.2);
  VecX b = A * x0;
  for (int i = 0; i < m; ++i) b(i) += slack(rng);
  MatX G(2 * n + m, n);
  G << qp.G, A;
  VecX w(2 * n + m);
  w << qp.w, b;
  qp.G = G;
  qp.w = w;
  return qp;
}

}  // namespace

TEST_CASE("small hand-solved problems") {
  SUBCASE("clipped scalar optimum") {
    const QpProblem qp = box_problem(MatX::Identity(1, 1), VecX::Constant(1, -2.0), VecX::Constant(1, -1.0),
                                     VecX::Constant(1, 1.0));
    const QpSolution s = solve_qp(qp, 1e-9, 10000);
    CHECK(s.status == QpStatus::Optimal);
    CHECK(s.U_opt(0) == Approx(1.0).epsilon(1e-9));
    CHECK(s.lambda(0) == Approx(1.0).epsilon(1e-8));  // multiplier of u <= 1
    CHECK(s.objective == Approx(-1.5));
  }
  SUBCASE("symmetric half-space") {
    QpProblem qp;
    qp.H = MatX::Identity(2, 2);
    qp.f = VecX::Zero(2);
    qp.G = MatX(1, 2);
    qp.G << -1.0, -1.0;
    qp.w = VecX::Constant(1, -1.0);
    qp.Eq.resize(0, 2);
    qp.d.resize(0);
    const QpSolution s = solve_qp(qp);
    CHECK(s.status == QpStatus::Optimal);
    CHECK(s.U_opt(0) == Approx(0.5).epsilon(1e-8));
    CHECK(s.U_opt(1) == Approx(0.5).epsilon(1e-8));
  }
  SUBCASE("equality constraint") {
    const int n = 5;
    QpProblem qp;
    qp.H = MatX::Identity(n, n);
    qp.f = VecX::Zero(n);
    qp.G.resize(0, n);
    qp.w.resize(0);
    qp.Eq = MatX::Ones(1, n);
    qp.d = VecX::Constant(1, 1.0);
    const QpSolution s = solve_qp(qp);
    CHECK(s.status == QpStatus::Optimal);
    CHECK((s.U_opt - VecX::Constant(n, 0.2)).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(s.nu(0) == Approx(-0.2).epsilon(1e-8));
  }
  SUBCASE("unconstrained") {
    std::mt19937_64 rng(2);
    const MatX H = oracle::random_spd(rng, 6, 0.5);
    const VecX f = oracle::random_vec(rng, 6);
    QpProblem qp;
    qp.H = H;
    qp.f = f;
    qp.G.resize(0, 6);
    qp.w.resize(0);
    qp.Eq.resize(0, 6);
    qp.d.resize(0);
    const QpSolution s = solve_qp(qp);
    CHECK(s.status == QpStatus::Optimal);
    CHECK((s.U_opt + oracle::gauss_jordan_inverse(H) * f).norm() < 1e-10);
  }
}

TEST_CASE("status reporting") {
  SUBCASE("contradictory bounds are infeasible") {
    QpProblem qp = box_problem(MatX::Identity(2, 2), VecX::Zero(2), VecX::Constant(2, 1.0), VecX::Constant(2, 0.0));
    const QpSolution s = solve_qp(qp);
    CHECK(s.status == QpStatus::Infeasible);
    CHECK_FALSE(s.diagnostic.empty());
  }
  SUBCASE("unbounded direction is reported") {
    QpProblem qp;
    qp.H = MatX::Zero(1, 1);
    qp.f = VecX::Constant(1, 1.0);
    qp.G = MatX::Constant(1, 1, 1.0);
    qp.w = VecX::Constant(1, 1.0);
    qp.Eq.resize(0, 1);
    qp.d.resize(0);
    CHECK(solve_qp(qp).status != QpStatus::Optimal);
  }
  SUBCASE("iteration cap") {
    std::mt19937_64 rng(8);
    QpProblem qp = mixed_problem(rng, 12, 6);
    QpSettings s;
    s.max_iter = 3;
    s.polish = false;
    CHECK(solve_qp(qp, s).status == QpStatus::MaxIterations);
  }
  SUBCASE("shape mismatch") {
    QpProblem qp = box_problem(MatX::Identity(2, 2), VecX::Zero(2), -VecX::Ones(2), VecX::Ones(2));
    qp.f = VecX::Zero(3);
    CHECK_THROWS_AS(solve_qp(qp), Error);
  }
}

TEST_CASE("KKT residuals by hand") {
  QpProblem qp = box_problem(MatX::Identity(1, 1), VecX::Constant(1, -2.0), VecX::Constant(1, -1.0),
                             VecX::Constant(1, 1.0));
  VecX lam(2);
  lam << 1.0, 0.0;
  const KktResiduals exact = kkt_residuals(qp, VecX::Constant(1, 1.0), lam, VecX());
  CHECK(exact.max() == Approx(0.0));
  lam << 0.5, -0.25;
  const KktResiduals off = kkt_residuals(qp, VecX::Constant(1, 1.5), lam, VecX());
  CHECK(off.stationarity == Approx(std::abs(1.5 - 2.0 + 0.5 + 0.25)));
  CHECK(off.primal == Approx(0.5));
  CHECK(off.dual == Approx(0.25));
  CHECK(off.complementarity == Approx(0.625));  // |-0.25 * (-1 - 1.5)|
}

TEST_CASE("random box QPs against projected gradient") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> dim(1, 20);
  std::uniform_real_distribution<double> shift(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng);
    // Some problems are only positive semidefinite.
    MatX H = oracle::random_spd(rng, n, trial % 4 == 0 ? 0.0 : shift(rng));
    if (trial % 4 == 0 && n > 1) {
      const MatX V = oracle::random_vec(rng, n * (n / 2)).reshaped(n, n / 2);
      H = V * V.transpose();
    }
    const VecX f = oracle::random_vec(rng, n, 2.0);
    const VecX lo = -oracle::random_vec(rng, n).cwiseAbs() - VecX::Constant(n, 0.1);
    const VecX hi = oracle::random_vec(rng, n).cwiseAbs() + VecX::Constant(n, 0.1);
    const QpProblem qp = box_problem(H, f, lo, hi);
    const QpSolution s = solve_qp(qp);
    REQUIRE(s.status == QpStatus::Optimal);
    const VecX ref = oracle::projected_gradient_box(H, f, lo, hi);
    CHECK(std::abs(s.objective - qp.objective(ref)) <= 1e-6);
    CHECK(s.residuals.max() <= 1e-6);
  }
}

TEST_CASE("random mixed QPs against a dual projected-gradient oracle") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(2, 20);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = dim(rng);
    const QpProblem qp = mixed_problem(rng, n, n / 2 + 1);
    const QpSolution s = solve_qp(qp);
    REQUIRE(s.status == QpStatus::Optimal);
    const VecX ref = oracle::dual_projected_gradient(qp.H, qp.f, qp.G, qp.w);
    CHECK(std::abs(s.objective - qp.objective(ref)) <= 1e-6);
    CHECK(s.residuals.stationarity <= 1e-6);
    CHECK(s.residuals.primal <= 1e-6);
    CHECK(s.residuals.dual <= 1e-6);
    CHECK(s.residuals.complementarity <= 1e-6);
  }
}

TEST_CASE("adding constraints never lowers the optimum") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const QpProblem full = mixed_problem(rng, 8, 5);
    QpProblem fewer = full;
    fewer.G = full.G.topRows(16);
    fewer.w = full.w.head(16);
    const double j_full = solve_qp(full).objective;
    const double j_fewer = solve_qp(fewer).objective;
    CHECK(j_full >= j_fewer - 1e-9);
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(17);
  const QpProblem qp = mixed_problem(rng, 15, 7);
  const QpSolution a = solve_qp(qp);
  const QpSolution b = solve_qp(qp);
  CHECK(a.U_opt == b.U_opt);
  CHECK(a.iterations == b.iterations);
}
