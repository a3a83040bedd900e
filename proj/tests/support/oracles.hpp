#pragma once

// Reference computations used only by tests. Each one follows a different
// numerical route from the library code it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace mvs::oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Laplace expansion along the first row.
inline double laplace_det(const Mat& M) {
  const Eigen::Index n = M.rows();
  if (n == 1) return M(0, 0);
  double det = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    Mat minor(n - 1, n - 1);
    for (Eigen::Index i = 1; i < n; ++i) {
      Eigen::Index cc = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, cc++) = M(i, j);
      }
    }
    det += ((c % 2 == 0) ? 1.0 : -1.0) * M(0, c) * laplace_det(minor);
  }
  return det;
}

/// Gauss-Jordan elimination with partial pivoting on an augmented matrix.
inline Mat gauss_jordan_inverse(Mat M) {
  const Eigen::Index n = M.rows();
  Mat aug(n, 2 * n);
  aug << M, Mat::Identity(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(aug(r, col)) > std::abs(aug(pivot, col))) pivot = r;
    }
    aug.row(col).swap(aug.row(pivot));
    aug.row(col) /= aug(col, col);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r != col) aug.row(r) -= aug(r, col) * aug.row(col);
    }
  }
  return aug.rightCols(n);
}

/// Projected gradient with a fixed 1/L step for min 1/2 x'Hx + f'x, lo <= x <= hi.
inline Vec projected_gradient_box(const Mat& H, const Vec& f, const Vec& lo, const Vec& hi,
                                  int max_iter = 200000, double tol = 1e-13) {
  const double L = Eigen::SelfAdjointEigenSolver<Mat>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  Vec x = Vec::Zero(f.size()).cwiseMax(lo).cwiseMin(hi);
  for (int it = 0; it < max_iter; ++it) {
    const Vec next = (x - step * (H * x + f)).cwiseMax(lo).cwiseMin(hi);
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (change < tol) break;
  }
  return x;
}

/// Accelerated projected gradient ascent on the dual of
/// min 1/2 x'Hx + f'x s.t. Gx <= w (H positive definite); returns the primal
/// point x(lambda) = -H^{-1}(f + G'lambda).
inline Vec dual_projected_gradient(const Mat& H, const Vec& f, const Mat& G, const Vec& w,
                                   int max_iter = 400000, double tol = 1e-14) {
  const Eigen::LLT<Mat> llt(H);
  const Mat HinvGt = llt.solve(G.transpose());
  const Vec Hinvf = llt.solve(f);
  const Mat M = G * HinvGt;  // dual Hessian (negated)
  const double L = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly)
                       .eigenvalues()
                       .maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  const Vec c = -G * Hinvf - w;  // gradient of the dual at lambda = 0

  Vec lam = Vec::Zero(w.size());
  Vec y = lam;
  double t = 1.0;
  double prev_value = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Vec grad = c - M * y;
    const Vec next = (y + step * grad).cwiseMax(0.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Adaptive restart when the dual value stops increasing.
    const double value = -0.5 * next.dot(M * next) + c.dot(next);
    if (value < prev_value) {
      y = lam;
      t = 1.0;
      prev_value = -std::numeric_limits<double>::infinity();
      continue;
    }
    y = next + ((t - 1.0) / t_next) * (next - lam);
    const double change = (next - lam).lpNorm<Eigen::Infinity>();
    lam = next;
    t = t_next;
    prev_value = value;
    if (change < tol * std::max(1.0, lam.lpNorm<Eigen::Infinity>())) break;
  }
  return -(Hinvf + HinvGt * lam);
}

/// Proximal-point outer loop around dual_projected_gradient so that merely
/// positive semidefinite H is handled: each subproblem adds rho/2 |x - x_k|^2.
inline Vec proximal_dual_projected_gradient(const Mat& H, const Vec& f, const Mat& G, const Vec& w,
                                            double rho = 1.0, int outer = 2000, double tol = 1e-11) {
  const Mat H_reg = H + rho * Mat::Identity(H.rows(), H.cols());
  Vec x = Vec::Zero(H.rows());
  for (int k = 0; k < outer; ++k) {
    const Vec next = dual_projected_gradient(H_reg, f - rho * x, G, w, 400000, 1e-13);
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (change < tol) break;
  }
  return x;
}

/// Random symmetric positive definite matrix M'M + shift I.
inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double shift) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = normal(rng);
  Mat H = M.transpose() * M / static_cast<double>(n);
  H.diagonal().array() += shift;
  return 0.5 * (H + H.transpose());
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

/// Area moments of a polygon by midpoint quadrature over a fine grid.
struct QuadratureMoments {
  double m00 = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double mu20 = 0.0;
  double mu02 = 0.0;
  double mu11 = 0.0;
};

template <typename Inside>
QuadratureMoments quadrature_moments(Inside inside, double x0, double y0, double x1, double y1, int n) {
  const double hx = (x1 - x0) / n;
  const double hy = (y1 - y0) / n;
  double s0 = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int j = 0; j < n; ++j) {
    const double y = y0 + (j + 0.5) * hy;
    for (int i = 0; i < n; ++i) {
      const double x = x0 + (i + 0.5) * hx;
      if (!inside(x, y)) continue;
      s0 += 1.0;
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
  }
  const double a = hx * hy;
  QuadratureMoments q;
  q.m00 = s0 * a;
  q.cx = sx / s0;
  q.cy = sy / s0;
  q.mu20 = (sxx - s0 * q.cx * q.cx) * a;
  q.mu02 = (syy - s0 * q.cy * q.cy) * a;
  q.mu11 = (sxy - s0 * q.cx * q.cy) * a;
  return q;
}

}  // namespace mvs::oracle
