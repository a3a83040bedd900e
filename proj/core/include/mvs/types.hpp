#pragma once

#include <Eigen/Dense>

namespace mvs {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Normalized moment features q = [x_n, y_n, a_n, theta].
struct FeatureVector {
  double x_n = 0.0;
  double y_n = 0.0;
  double a_n = 0.0;
  double theta = 0.0;

  [[nodiscard]] Vec4 as_vector() const { return {x_n, y_n, a_n, theta}; }
  static FeatureVector from_vector(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
};

/// Camera-frame velocity command [v_x, v_y, v_z, omega_z].
struct ControlInput {
  double v_x = 0.0;
  double v_y = 0.0;
  double v_z = 0.0;
  double omega_z = 0.0;

  [[nodiscard]] Vec4 as_vector() const { return {v_x, v_y, v_z, omega_z}; }
  static ControlInput from_vector(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Wraps an axis orientation difference into (-pi/2, pi/2]; orientations are pi-periodic.
double wrap_orientation(double a);

/// Feature error q - q_star with the orientation component wrapped.
Vec4 feature_error(const FeatureVector& q, const FeatureVector& q_star);

}  // namespace mvs
