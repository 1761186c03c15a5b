#include "mimiclab/dynamics.hpp"

namespace mimiclab {

namespace {

struct JointKinematics {
  std::vector<Mat6> X_up;                 // parent coords -> link coords
  std::vector<Eigen::MatrixXd> S;         // motion subspace, link coords
  std::vector<int> dof_start;             // first velocity index per joint
};

JointKinematics joint_kinematics(const ChainModel& chain, const Quat& base_quat,
                                 const Vec3& base_pos, const Eigen::VectorXd& q) {
  const int n = chain.n_links();
  JointKinematics jk;
  jk.X_up.resize(n);
  jk.S.resize(n);
  jk.dof_start.resize(n);

  int v = 0, qi = 0;
  for (int i = 0; i < n; ++i) {
    const Joint& j = chain.joints[i];
    jk.dof_start[i] = v;
    if (j.type == JointType::FloatingBase) {
      const Mat3 E = base_quat.toRotationMatrix().transpose();
      jk.X_up[i] = xform_motion(E, base_pos);
      jk.S[i] = Eigen::MatrixXd::Identity(6, 6);
      v += 6;
    } else {
      const Mat3 E_tree = rpy_to_matrix(j.origin_rpy).transpose();
      const Mat3 E_q =
          Eigen::AngleAxisd(q(qi), j.axis).toRotationMatrix().transpose();
      jk.X_up[i] = xform_motion(E_q, Vec3::Zero()) * xform_motion(E_tree, j.origin_xyz);
      Eigen::MatrixXd S(6, 1);
      S << j.axis, Vec3::Zero();
      jk.S[i] = S;
      v += 1;
      ++qi;
    }
  }
  return jk;
}

Mat6 body_inertia(const Link& link) {
  return spatial_inertia(link.mass, link.com, link.inertia);
}

}  // namespace

Eigen::MatrixXd mass_matrix(const ChainModel& chain, const Eigen::VectorXd& q) {
  if (q.size() != chain.nj()) throw std::invalid_argument("mass_matrix: bad q size");
  const int n = chain.n_links();
  const int nv = chain.nv();
  const JointKinematics jk = joint_kinematics(chain, Quat::Identity(), Vec3::Zero(), q);

  std::vector<Mat6> Ic(n);
  for (int i = 0; i < n; ++i) Ic[i] = body_inertia(chain.links[i]);
  for (int i = n - 1; i >= 0; --i) {
    const int p = chain.joints[i].parent;
    if (p >= 0) Ic[p] += jk.X_up[i].transpose() * Ic[i] * jk.X_up[i];
  }

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nv, nv);
  for (int i = 0; i < n; ++i) {
    const int di = static_cast<int>(jk.S[i].cols());
    Eigen::MatrixXd F = Ic[i] * jk.S[i];
    M.block(jk.dof_start[i], jk.dof_start[i], di, di) = jk.S[i].transpose() * F;
    int j = i;
    while (chain.joints[j].parent >= 0) {
      F = jk.X_up[j].transpose() * F;
      j = chain.joints[j].parent;
      const int dj = static_cast<int>(jk.S[j].cols());
      const Eigen::MatrixXd blk = jk.S[j].transpose() * F;
      M.block(jk.dof_start[j], jk.dof_start[i], dj, di) = blk;
      M.block(jk.dof_start[i], jk.dof_start[j], di, dj) = blk.transpose();
    }
  }
  return M;
}

Eigen::VectorXd generalized_velocity(const ChainModel& chain, const RobotState& state) {
  Eigen::VectorXd u(chain.nv());
  if (chain.floating_base()) {
    const Mat3 Rt = state.base_quat.toRotationMatrix().transpose();
    u.head<3>() = Rt * state.base_ang_vel;
    u.segment<3>(3) = Rt * state.base_lin_vel;
    u.tail(chain.nj()) = state.qd;
  } else {
    u = state.qd;
  }
  return u;
}

static Eigen::VectorXd rnea_bias(const ChainModel& chain, const Quat& base_quat,
                                 const Vec3& base_pos, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& u) {
  const int n = chain.n_links();
  const int nv = chain.nv();
  const JointKinematics jk = joint_kinematics(chain, base_quat, base_pos, q);

  std::vector<Vec6> v(n), a(n), f(n);
  // Gravity via the fictitious base acceleration -g, expressed in world coords.
  Vec6 a0 = Vec6::Zero();
  a0.tail<3>() = -chain.gravity;

  for (int i = 0; i < n; ++i) {
    const int p = chain.joints[i].parent;
    const Vec6 vJ = jk.S[i] * u.segment(jk.dof_start[i], jk.S[i].cols());
    if (p < 0) {
      v[i] = vJ;
      a[i] = jk.X_up[i] * a0 + cross_motion(v[i]) * vJ;
    } else {
      v[i] = jk.X_up[i] * v[p] + vJ;
      a[i] = jk.X_up[i] * a[p] + cross_motion(v[i]) * vJ;
    }
    const Mat6 I = body_inertia(chain.links[i]);
    f[i] = I * a[i] + cross_force(v[i]) * (I * v[i]);
  }

  Eigen::VectorXd h = Eigen::VectorXd::Zero(nv);
  for (int i = n - 1; i >= 0; --i) {
    h.segment(jk.dof_start[i], jk.S[i].cols()) = jk.S[i].transpose() * f[i];
    const int p = chain.joints[i].parent;
    if (p >= 0) f[p] += jk.X_up[i].transpose() * f[i];
  }
  return h;
}

Eigen::VectorXd bias_forces(const ChainModel& chain, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qd) {
  if (chain.floating_base())
    throw std::invalid_argument("bias_forces(q, qd): chain has a floating base");
  if (q.size() != chain.nj() || qd.size() != chain.nj())
    throw std::invalid_argument("bias_forces: dimension mismatch");
  return rnea_bias(chain, Quat::Identity(), Vec3::Zero(), q, qd);
}

Eigen::VectorXd bias_forces(const ChainModel& chain, const RobotState& state) {
  return rnea_bias(chain, state.base_quat, state.base_pos, state.q,
                   generalized_velocity(chain, state));
}

Eigen::VectorXd forward_dynamics(const ChainModel& chain, const RobotState& state,
                                 const Eigen::VectorXd& tau,
                                 const std::vector<BodyWrench>& wrenches) {
  if (tau.size() != chain.nv())
    throw std::invalid_argument("forward_dynamics: tau dimension mismatch");
  const Eigen::MatrixXd M = mass_matrix(chain, state.q);
  const Eigen::VectorXd h = bias_forces(chain, state);

  Eigen::VectorXd rhs = tau - h;
  if (!wrenches.empty()) {
    const ForwardKinematics fk =
        forward_kinematics(chain, state.base_pos, state.base_quat, state.q);
    for (const BodyWrench& w : wrenches) {
      const Eigen::MatrixXd J = point_jacobian(chain, fk, w.link, Vec3::Zero());
      rhs += J.topRows<3>().transpose() * w.force + J.bottomRows<3>().transpose() * w.moment;
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("forward_dynamics: mass matrix factorization failed");
  return ldlt.solve(rhs);
}

Eigen::VectorXd forward_dynamics(const ChainModel& chain, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& tau,
                                 const std::vector<BodyWrench>& wrenches) {
  RobotState s;
  s.q = q;
  s.qd = qd;
  return forward_dynamics(chain, s, tau, wrenches);
}

void integrate(const ChainModel& chain, RobotState& state, const Eigen::VectorXd& qdd,
               double dt) {
  if (dt <= 0.0) throw std::invalid_argument("integrate: dt must be positive");
  if (qdd.size() != chain.nv())
    throw std::invalid_argument("integrate: acceleration dimension mismatch");

  if (chain.floating_base()) {
    const Mat3 R = state.base_quat.toRotationMatrix();
    Vec3 w_b = R.transpose() * state.base_ang_vel + qdd.head<3>() * dt;
    Vec3 v_b = R.transpose() * state.base_lin_vel + qdd.segment<3>(3) * dt;
    state.qd += qdd.tail(chain.nj()) * dt;

    state.base_pos += R * v_b * dt;
    state.base_quat = state.base_quat * quat_exp(w_b * dt);
    state.base_quat.normalize();
    state.q += state.qd * dt;

    const Mat3 Rn = state.base_quat.toRotationMatrix();
    state.base_ang_vel = Rn * w_b;
    state.base_lin_vel = Rn * v_b;
  } else {
    state.qd += qdd * dt;
    state.q += state.qd * dt;
  }
}

double total_energy(const ChainModel& chain, const RobotState& state) {
  const Eigen::VectorXd u = generalized_velocity(chain, state);
  const double kinetic = 0.5 * u.dot(mass_matrix(chain, state.q) * u);
  const ForwardKinematics fk =
      forward_kinematics(chain, state.base_pos, state.base_quat, state.q);
  double potential = 0.0;
  for (int i = 0; i < chain.n_links(); ++i)
    potential -= chain.links[i].mass * chain.gravity.dot(fk.point_world(i, chain.links[i].com));
  return kinetic + potential;
}

}  // namespace mimiclab
