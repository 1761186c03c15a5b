#include "mimiclab/curriculum.hpp"

#include <algorithm>
#include <stdexcept>

namespace mimiclab {

void CurriculumParams::validate() const {
  if (eta <= 0.0 || eta > 1.0) throw std::invalid_argument("curriculum: eta must lie in (0, 1]");
  if (beta_max < 0.0 || beta_max >= 1.0)
    throw std::invalid_argument("curriculum: beta_max must lie in [0, 1)");
  if (mass <= 0.0) throw std::invalid_argument("curriculum: mass must be > 0");
  if ((inertia - inertia.transpose()).lpNorm<Eigen::Infinity>() > 1e-9)
    throw std::invalid_argument("curriculum: inertia must be symmetric");
  if (Eigen::LLT<Mat3>(inertia).info() != Eigen::Success)
    throw std::invalid_argument("curriculum: inertia must be positive definite");
}

double assistance_scale(double failure, const CurriculumParams& p) {
  if (failure < 0.0 || failure > 1.0)
    throw std::invalid_argument("assistance_scale: failure outside [0, 1]");
  const double similarity = 1.0 - failure;
  return std::clamp(1.0 - similarity / p.eta, 0.0, p.beta_max);
}

Vec6 assistive_wrench(const RobotState& state, const RefState& ref,
                      const CurriculumParams& p, double beta) {
  if (std::abs(ref.base_quat.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("assistive_wrench: reference quaternion not unit");

  const Vec3 F = p.mass * (ref.base_lin_acc + p.kp_v * (ref.base_pos - state.base_pos) +
                           p.kd_v * (ref.base_lin_vel - state.base_lin_vel) - p.gravity);

  const Mat3 R = state.base_quat.toRotationMatrix();
  const Vec3 w_b = R.transpose() * state.base_ang_vel;
  const Vec3 phi_err_b = R.transpose() * boxminus(ref.base_quat, state.base_quat);
  const Vec3 w_err_b = R.transpose() * (ref.base_ang_vel - state.base_ang_vel);
  const Vec3 wdot_b = R.transpose() * ref.base_ang_acc;
  const Vec3 M_base = p.inertia * wdot_b + p.kp_w * (p.inertia * phi_err_b) +
                      p.kd_w * (p.inertia * w_err_b) + w_b.cross(p.inertia * w_b);
  const Vec3 M = R * M_base - (R * p.r_com).cross(p.mass * p.gravity);

  Vec6 w;
  w << F, M;
  return beta * w;
}

}  // namespace mimiclab
