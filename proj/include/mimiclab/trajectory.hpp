#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mimiclab/rotation.hpp"

#include <Eigen/Dense>

namespace mimiclab {

struct KeybodyPose {
  Vec3 pos = Vec3::Zero();           // relative to base
  Quat quat = Quat::Identity();
};

/// Reference sample used by observations, rewards, and the assistive wrench.
/// Base quantities world frame; accelerations from central differences.
struct RefState {
  Vec3 base_pos = Vec3::Zero();
  Quat base_quat = Quat::Identity();
  Vec3 base_lin_vel = Vec3::Zero();
  Vec3 base_ang_vel = Vec3::Zero();
  Vec3 base_lin_acc = Vec3::Zero();
  Vec3 base_ang_acc = Vec3::Zero();
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  std::vector<KeybodyPose> keybodies;
};

struct RefFrame {
  Vec3 base_pos = Vec3::Zero();
  Quat base_quat = Quat::Identity();
  Vec3 base_lin_vel = Vec3::Zero();
  Vec3 base_ang_vel = Vec3::Zero();
  Eigen::VectorXd q;
  Eigen::VectorXd qd;  // optional; finite-differenced from q when absent
  std::vector<KeybodyPose> keybodies;
};

struct ReferenceTrajectory {
  double dt = 0.02;  // control rate
  std::string name = "reference";
  std::vector<RefFrame> frames;

  int length() const { return static_cast<int>(frames.size()); }
  double duration() const { return length() * dt; }

  int frame_index(double t) const {
    return std::clamp(static_cast<int>(std::floor(t / dt)), 0, length() - 1);
  }

  /// Frame nearest below t, with joint velocities and base accelerations from
  /// central differences (one-sided at the ends), clamped to +-accel_clamp.
  /// Past the end the final frame is held with zero rates.
  RefState sample(double t, double accel_clamp = 50.0) const {
    const int n = length();
    const int k = frame_index(t);
    const RefFrame& f = frames[k];
    RefState r;
    r.base_pos = f.base_pos;
    r.base_quat = f.base_quat;
    r.base_lin_vel = f.base_lin_vel;
    r.base_ang_vel = f.base_ang_vel;
    r.q = f.q;
    r.keybodies = f.keybodies;
    const int lo = std::max(k - 1, 0), hi = std::min(k + 1, n - 1);
    const double span = (hi - lo) * dt;
    if (span > 0.0) {
      r.qd = f.qd.size() == f.q.size() ? f.qd
                                       : (frames[hi].q - frames[lo].q) / span;
      r.base_lin_acc = (frames[hi].base_lin_vel - frames[lo].base_lin_vel) / span;
      r.base_ang_acc = (frames[hi].base_ang_vel - frames[lo].base_ang_vel) / span;
      r.base_lin_acc = r.base_lin_acc.cwiseMax(-accel_clamp).cwiseMin(accel_clamp);
      r.base_ang_acc = r.base_ang_acc.cwiseMax(-accel_clamp).cwiseMin(accel_clamp);
    } else {
      r.qd = Eigen::VectorXd::Zero(f.q.size());
    }
    if (t >= n * dt) {  // dwell past the trajectory end
      r.base_lin_vel.setZero();
      r.base_ang_vel.setZero();
      r.base_lin_acc.setZero();
      r.base_ang_acc.setZero();
      r.qd.setZero();
    }
    return r;
  }
};

}  // namespace mimiclab
