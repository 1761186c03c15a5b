#include "mimiclab/chain.hpp"

namespace mimiclab {

void ChainModel::validate() const {
  if (links.size() != joints.size())
    throw std::invalid_argument("ChainModel: link/joint count mismatch");
  if (links.empty()) throw std::invalid_argument("ChainModel: empty chain");
  for (size_t i = 0; i < joints.size(); ++i) {
    const Joint& j = joints[i];
    if (j.parent >= static_cast<int>(i))
      throw std::invalid_argument("ChainModel: parent indices must form a tree");
    if (j.type == JointType::FloatingBase && i != 0)
      throw std::invalid_argument("ChainModel: floating base must be joint 0");
    if (j.type == JointType::Revolute && std::abs(j.axis.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("ChainModel: joint axis must be unit norm");
    if (links[i].mass < 0.0)
      throw std::invalid_argument("ChainModel: negative link mass");
    if ((links[i].inertia - links[i].inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("ChainModel: inertia must be symmetric");
  }
}

ForwardKinematics forward_kinematics(const ChainModel& chain, const Vec3& base_pos,
                                     const Quat& base_quat, const Eigen::VectorXd& q) {
  if (q.size() != chain.nj()) throw std::invalid_argument("forward_kinematics: bad q size");
  const int n = chain.n_links();
  ForwardKinematics fk;
  fk.R.resize(n);
  fk.p.resize(n);
  fk.axis_w.resize(n, Vec3::Zero());

  int qi = 0;
  for (int i = 0; i < n; ++i) {
    const Joint& j = chain.joints[i];
    Mat3 Rp = Mat3::Identity();
    Vec3 pp = Vec3::Zero();
    if (j.parent >= 0) {
      Rp = fk.R[j.parent];
      pp = fk.p[j.parent];
    }
    if (j.type == JointType::FloatingBase) {
      fk.R[i] = base_quat.toRotationMatrix();
      fk.p[i] = base_pos;
      continue;
    }
    const Mat3 R_fixed = rpy_to_matrix(j.origin_rpy);
    const Vec3 p_joint = pp + Rp * j.origin_xyz;
    const Mat3 R_joint = Rp * R_fixed;
    fk.R[i] = R_joint * Eigen::AngleAxisd(q(qi), j.axis).toRotationMatrix();
    fk.p[i] = p_joint;
    fk.axis_w[i] = fk.R[i] * j.axis;
    ++qi;
  }
  return fk;
}

ForwardKinematics forward_kinematics(const ChainModel& chain, const Eigen::VectorXd& q) {
  return forward_kinematics(chain, Vec3::Zero(), Quat::Identity(), q);
}

Eigen::MatrixXd point_jacobian(const ChainModel& chain, const ForwardKinematics& fk,
                               int link, const Vec3& local_point) {
  const int nv = chain.nv();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, nv);  // rows: [linear; angular]
  const Vec3 pt = fk.point_world(link, local_point);
  const bool fb = chain.floating_base();

  // Walk from the link to the root, filling ancestor joint columns.
  int body = link;
  while (body >= 0) {
    const Joint& j = chain.joints[body];
    if (j.type == JointType::Revolute) {
      const int col = (fb ? 6 : 0) + joint_coordinate_index(chain, body);
      const Vec3 a = fk.axis_w[body];
      J.block<3, 1>(0, col) = a.cross(pt - fk.p[body]);
      J.block<3, 1>(3, col) = a;
    } else {
      // base columns: [ang (base coords); lin (base coords)]
      const Mat3 R = fk.R[0];
      for (int k = 0; k < 3; ++k) {
        const Vec3 e = R.col(k);
        J.block<3, 1>(0, k) = e.cross(pt - fk.p[0]);
        J.block<3, 1>(3, k) = e;
        J.block<3, 1>(0, 3 + k) = e;
      }
    }
    body = j.parent;
  }
  return J;
}

}  // namespace mimiclab
