#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mimiclab/spatial.hpp"

namespace mimiclab {

struct Link {
  std::string name;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();        // in link frame
  Mat3 inertia = Mat3::Zero();    // about com, in link frame
};

enum class JointType { Revolute, FloatingBase };

struct Joint {
  std::string name;
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();      // in child-link frame
  int parent = -1;                // parent link index, -1 = world
  Vec3 origin_xyz = Vec3::Zero(); // joint frame position in parent frame
  Vec3 origin_rpy = Vec3::Zero();
  double q_min = -1e9, q_max = 1e9;
  double tau_min = -1e9, tau_max = 1e9;
};

/// An open articulated chain. Link i is the child of joint i; a floating-base
/// joint, if present, must be joint 0 and is the only non-revolute joint.
struct ChainModel {
  std::vector<Link> links;
  std::vector<Joint> joints;
  Vec3 gravity{0.0, 0.0, -9.81};

  bool floating_base() const {
    return !joints.empty() && joints[0].type == JointType::FloatingBase;
  }
  /// Number of revolute joints (actuated coordinate count).
  int nj() const { return static_cast<int>(joints.size()) - (floating_base() ? 1 : 0); }
  /// Generalized-velocity dimension.
  int nv() const { return nj() + (floating_base() ? 6 : 0); }
  int n_links() const { return static_cast<int>(links.size()); }

  void validate() const;
};

struct RobotState {
  Vec3 base_pos = Vec3::Zero();
  Quat base_quat = Quat::Identity();
  Vec3 base_lin_vel = Vec3::Zero();   // world frame
  Vec3 base_ang_vel = Vec3::Zero();   // world frame
  Eigen::VectorXd q;                  // joint positions
  Eigen::VectorXd qd;                 // joint velocities
  Eigen::VectorXd prev_action;
};

/// World pose of every link plus world joint axes, for a given configuration.
struct ForwardKinematics {
  std::vector<Mat3> R;        // link orientation, world
  std::vector<Vec3> p;        // link-frame origin (joint location), world
  std::vector<Vec3> axis_w;   // joint axis, world (zero for floating base)

  Vec3 point_world(int link, const Vec3& local) const { return p[link] + R[link] * local; }
};

/// Coordinate index of revolute joint i within the joint position vector.
inline int joint_coordinate_index(const ChainModel& chain, int joint) {
  return joint - (chain.floating_base() ? 1 : 0);
}

ForwardKinematics forward_kinematics(const ChainModel& chain, const Vec3& base_pos,
                                     const Quat& base_quat, const Eigen::VectorXd& q);

/// Convenience for pinned chains (no floating base).
ForwardKinematics forward_kinematics(const ChainModel& chain, const Eigen::VectorXd& q);

/// Geometric Jacobian of the origin of `link`, world frame. Rows: [linear; angular],
/// columns over the generalized velocity (base [ang; lin] in base coords first
/// when floating).
Eigen::MatrixXd point_jacobian(const ChainModel& chain, const ForwardKinematics& fk,
                               int link, const Vec3& local_point);

}  // namespace mimiclab
