#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace mimiclab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

/// Rotation log map: axis-angle vector of a unit quaternion, |result| <= pi.
/// Stable branches: Taylor expansion for tiny angles, axis extraction near pi.
inline Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0.0) q.coeffs() *= -1.0;  // shortest rotation
  const Vec3 v = q.vec();
  const double s = v.norm();
  const double theta = 2.0 * std::atan2(s, q.w());
  if (theta < 1e-6) {
    // log(q) ~ 2 v (1 + s^2 / (6 w^2)) for w ~ 1
    return 2.0 * v;
  }
  if (theta > M_PI - 1e-6) {
    // w ~ 0, the vector part carries the axis at nearly full magnitude
    return (v / s) * theta;
  }
  return (theta / s) * v;
}

/// Rotation exp map: unit quaternion from an axis-angle vector.
inline Quat quat_exp(const Vec3& phi) {
  const double theta = phi.norm();
  if (theta < 1e-12) {
    Quat q(1.0, 0.5 * phi.x(), 0.5 * phi.y(), 0.5 * phi.z());
    q.normalize();
    return q;
  }
  const double half = 0.5 * theta;
  const Vec3 axis = phi / theta;
  return Quat(Eigen::AngleAxisd(theta, axis));
}

/// Lie-group difference on SO(3): log(a * b^-1) as an axis-angle vector,
/// so quat_exp(boxminus(a, b)) * b == a.
inline Vec3 boxminus(const Quat& a, const Quat& b) {
  return quat_log(a * b.conjugate());
}

/// World gravity direction expressed in the body frame of orientation phi.
inline Vec3 gravity_in_frame(const Quat& phi) {
  return phi.conjugate() * Vec3(0.0, 0.0, -1.0);
}

inline Mat3 rpy_to_matrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

}  // namespace mimiclab
