#pragma once

#include "mimiclab/chain.hpp"
#include "mimiclab/trajectory.hpp"

namespace mimiclab {

using Vec6 = Eigen::Matrix<double, 6, 1>;

struct CurriculumParams {
  double eta = 0.80;       // target similarity
  double beta_max = 0.60;  // assistance cap, < 1 keeps assistance partial
  double kp_v = 0.0;       // force PD gains
  double kd_v = 10.0;
  double kp_w = 200.0;     // torque PD gains
  double kd_w = 10.0;
  double mass = 1.0;               // whole-body mass, kg
  Mat3 inertia = Mat3::Identity(); // nominal base inertia, base frame
  Vec3 r_com = Vec3::Zero();       // base -> whole-body com, base frame
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);

  void validate() const;
};

/// beta = clip(1 - S/eta, 0, beta_max) with similarity S = 1 - failure.
/// Vanishes exactly once S >= eta; held constant per episode by the runner.
double assistance_scale(double failure, const CurriculumParams& params);

/// Model-based PD + feedforward spatial wrench on the base, world frame,
/// scaled by beta:
///   F = M (v_ref_dot + kp_v (p_ref - p) + kd_v (v_ref - v) - g)
///   M = I w_ref_dot + kp_w I (q_ref [-] q) + kd_w I (w_ref - w)
///       + w x (I w) - r_com x (M g)
/// The inertia terms are evaluated in the base frame and the torque rotated
/// to world.
Vec6 assistive_wrench(const RobotState& state, const RefState& ref,
                      const CurriculumParams& params, double beta);

}  // namespace mimiclab
