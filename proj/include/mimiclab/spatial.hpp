#pragma once

#include "mimiclab/rotation.hpp"

namespace mimiclab {

// 6D spatial vectors ordered [angular; linear].

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Motion-vector coordinate transform A -> B, where the B frame sits at
/// position r (in A coordinates) with orientation E = B_R_A.
inline Mat6 xform_motion(const Mat3& E, const Vec3& r) {
  Mat6 X = Mat6::Zero();
  X.topLeftCorner<3, 3>() = E;
  X.bottomLeftCorner<3, 3>() = -E * skew(r);
  X.bottomRightCorner<3, 3>() = E;
  return X;
}

/// Force-vector transform paired with xform_motion (X_F = X^{-T}).
inline Mat6 xform_force(const Mat3& E, const Vec3& r) {
  Mat6 X = Mat6::Zero();
  X.topLeftCorner<3, 3>() = E;
  X.topRightCorner<3, 3>() = -E * skew(r);
  X.bottomRightCorner<3, 3>() = E;
  return X;
}

/// Spatial cross product for motion vectors (crm).
inline Mat6 cross_motion(const Vec6& v) {
  Mat6 c = Mat6::Zero();
  const Mat3 w = skew(v.head<3>());
  c.topLeftCorner<3, 3>() = w;
  c.bottomLeftCorner<3, 3>() = skew(v.tail<3>());
  c.bottomRightCorner<3, 3>() = w;
  return c;
}

/// Spatial cross product for force vectors (crf = -crm^T).
inline Mat6 cross_force(const Vec6& v) { return -cross_motion(v).transpose(); }

/// Spatial inertia at the body-frame origin from mass, com offset, and the
/// rotational inertia about the com.
inline Mat6 spatial_inertia(double mass, const Vec3& com, const Mat3& inertia_com) {
  const Mat3 c = skew(com);
  Mat6 I = Mat6::Zero();
  I.topLeftCorner<3, 3>() = inertia_com + mass * c * c.transpose();
  I.topRightCorner<3, 3>() = mass * c;
  I.bottomLeftCorner<3, 3>() = mass * c.transpose();
  I.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return I;
}

}  // namespace mimiclab
