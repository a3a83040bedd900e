#pragma once

#include "mvs/types.hpp"

namespace mvs {

/// 4x4 interaction matrix relating camera velocity to feature rates, q_dot = L v_c.
struct InteractionMatrix {
  Mat4 entries = Mat4::Identity();
  double depth = 1.0;
};

/// L = [[1/Z, 0, 0, y_n], [0, 1/Z, 0, -x_n], [0, 0, 1/Z, 0], [0, 0, 0, -1]].
/// Throws NonPositiveDepth for z <= 0.
InteractionMatrix interaction_matrix(const FeatureVector& q, double z);

/// Feature rate predicted by the moment state model.
Vec4 feature_rate(const InteractionMatrix& L, const ControlInput& v);

/// 2-norm condition number of L.
double condition_number(const InteractionMatrix& L);

/// Classical law v_c = -lambda * L^{-1} (q - q_star), solved with a pivoted LU.
/// Throws SingularInteraction when cond(L) > 1e12, InvalidArgument for lambda <= 0.
ControlInput ibvs_law(const FeatureVector& q, const FeatureVector& q_star,
                      const InteractionMatrix& L, double lambda);

/// Same law applied to a precomputed (wrapped) error vector.
ControlInput ibvs_law(const Vec4& error, const InteractionMatrix& L, double lambda);

inline constexpr double kMaxInteractionCondition = 1e12;

}  // namespace mvs
