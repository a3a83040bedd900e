#include "mvs/interaction.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mvs/errors.hpp"

namespace mvs {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double wrap_orientation(double a) {
  a = std::remainder(a, std::numbers::pi);
  if (a <= -0.5 * std::numbers::pi) a += std::numbers::pi;
  return a;
}

Vec4 feature_error(const FeatureVector& q, const FeatureVector& q_star) {
  Vec4 e = q.as_vector() - q_star.as_vector();
  e(3) = wrap_orientation(e(3));
  return e;
}

InteractionMatrix interaction_matrix(const FeatureVector& q, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCode::NonPositiveDepth, "interaction matrix needs depth > 0");
  }
  InteractionMatrix L;
  L.depth = z;
  const double inv_z = 1.0 / z;
  // clang-format off
  L.entries << inv_z, 0.0,   0.0,   q.y_n,
               0.0,   inv_z, 0.0,  -q.x_n,
               0.0,   0.0,   inv_z, 0.0,
               0.0,   0.0,   0.0,  -1.0;
  // clang-format on
  return L;
}

Vec4 feature_rate(const InteractionMatrix& L, const ControlInput& v) {
  return L.entries * v.as_vector();
}

double condition_number(const InteractionMatrix& L) {
  Eigen::JacobiSVD<Mat4> svd(L.entries);
  const auto& s = svd.singularValues();
  if (s(3) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(3);
}

ControlInput ibvs_law(const Vec4& error, const InteractionMatrix& L, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "IBVS gain must be positive");
  if (!L.entries.allFinite() || condition_number(L) > kMaxInteractionCondition) {
    throw Error(ErrorCode::SingularInteraction, "interaction matrix is numerically singular");
  }
  const Vec4 v = -lambda * L.entries.fullPivLu().solve(error);
  return ControlInput::from_vector(v);
}

ControlInput ibvs_law(const FeatureVector& q, const FeatureVector& q_star,
                      const InteractionMatrix& L, double lambda) {
  return ibvs_law(feature_error(q, q_star), L, lambda);
}

}  // namespace mvs
