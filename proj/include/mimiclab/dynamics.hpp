#pragma once

#include "mimiclab/chain.hpp"

namespace mimiclab {

/// External wrench on a link, world frame, acting at the link-frame origin.
struct BodyWrench {
  int link = 0;
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
};

/// Joint-space mass matrix via the composite-rigid-body algorithm.
/// For floating-base chains the leading 6x6 block is the locked spatial
/// inertia in base coordinates, so M depends on joint positions only.
Eigen::MatrixXd mass_matrix(const ChainModel& chain, const Eigen::VectorXd& q);

/// Coriolis/centrifugal + gravity generalized forces via recursive
/// Newton-Euler with zero acceleration. Pinned-chain form.
Eigen::VectorXd bias_forces(const ChainModel& chain, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qd);

/// Full form: base orientation feeds gravity, base twist feeds velocity products.
Eigen::VectorXd bias_forces(const ChainModel& chain, const RobotState& state);

/// Generalized velocity [base ang (base frame); base lin (base frame); qd]
/// for floating chains, plain qd otherwise.
Eigen::VectorXd generalized_velocity(const ChainModel& chain, const RobotState& state);

/// Solves M qdd + h = tau + J^T w for the generalized acceleration.
Eigen::VectorXd forward_dynamics(const ChainModel& chain, const RobotState& state,
                                 const Eigen::VectorXd& tau,
                                 const std::vector<BodyWrench>& wrenches = {});

Eigen::VectorXd forward_dynamics(const ChainModel& chain, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& tau,
                                 const std::vector<BodyWrench>& wrenches = {});

/// Semi-implicit Euler: velocities first, then positions; quaternion
/// renormalized after the orientation update.
void integrate(const ChainModel& chain, RobotState& state, const Eigen::VectorXd& qdd,
               double dt);

/// Kinetic + potential energy of the chain at the given state.
double total_energy(const ChainModel& chain, const RobotState& state);

}  // namespace mimiclab
