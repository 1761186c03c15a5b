#pragma once

#include "mimiclab/dynamics.hpp"

namespace mimiclab {

/// One scalar block of the loop-closure constraint c(q_o, q_d, q_i) = 0.
struct ClosureEquation {
  enum class Kind {
    Coincidence,  // projection * (attachment-point difference) = 0
    RodLength,    // pushrod of fixed length between the two points
    Gear,         // q_i[act] = ratio * q_o[out] (rigid coupling, test mechanisms)
  };
  Kind kind = Kind::Coincidence;

  int support_link = -1;            // link index in the support chain
  Vec3 support_point = Vec3::Zero();
  int main_link = -1;               // link index in the main chain
  Vec3 main_point = Vec3::Zero();
  int frame_link = -1;              // main link whose frame the difference is
                                    // expressed in; -1 = world
  Eigen::Matrix<double, Eigen::Dynamic, 3> projection;  // Coincidence rows
  double rod_length = 0.0;

  int gear_actuated = 0;
  int gear_output = 0;
  double gear_ratio = 1.0;
};

/// A closed-chain transmission overlaid on a main ChainModel. The support
/// chain is a separate pinned ChainModel whose leading joints mirror the
/// main-chain parent coordinates q_p (massless duplicates), followed by the
/// linkage's own joints q_d and q_i.
struct PlaLinkage {
  ChainModel support;
  std::vector<int> parent_coords;   // q_p indices into the main-chain q
  std::vector<int> output_coords;   // q_o indices into the main-chain q
  std::vector<int> dep_coords;      // q_d indices into the support-chain q
  std::vector<int> act_coords;      // q_i indices into the support-chain q
  Eigen::VectorXd armature;         // motor armatures I_i, one per actuated joint
  std::vector<ClosureEquation> closures;

  Eigen::VectorXd q_o_nom, q_d_nom, q_i_nom;
  Eigen::VectorXd tau_i_min, tau_i_max;  // motor torque box

  int n_p() const { return static_cast<int>(parent_coords.size()); }
  int n_o() const { return static_cast<int>(output_coords.size()); }
  int n_d() const { return static_cast<int>(dep_coords.size()); }
  int n_i() const { return static_cast<int>(act_coords.size()); }
  void validate(const ChainModel& main) const;
};

struct ClosureSolution {
  Eigen::VectorXd q_d, q_i;
};

struct TransmissionMaps {
  Eigen::MatrixXd gamma_d;  // n_d x n_o
  Eigen::MatrixXd gamma_i;  // n_i x n_o
  Eigen::MatrixXd G;        // support-coordinate rows x main-coordinate columns
};

struct TransmissionRates {
  Eigen::MatrixXd gamma_d_dot;
  Eigen::MatrixXd gamma_i_dot;
};

struct ArmatureDecomposition {
  Eigen::MatrixXd M_o;  // Gamma_i^T I_i Gamma_i
  Eigen::MatrixXd D_o;  // diagonal part
  Eigen::MatrixXd O_o;  // off-diagonal part
};

struct TorquePolytope {
  Eigen::MatrixXd vertices;  // one vertex per row, counterclockwise when 2-D
  bool degenerate = false;   // transmission rank-deficient at this q_o
};

/// Closure residual; dimension equals n_d + n_i.
Eigen::VectorXd closure_residual(const ChainModel& main, const PlaLinkage& linkage,
                                 const Eigen::VectorXd& q_o, const Eigen::VectorXd& q_d,
                                 const Eigen::VectorXd& q_i);

/// Damped Newton on the closure equations, warm-started when a previous
/// solution is supplied (nominal otherwise). Throws on non-convergence.
ClosureSolution solve_loop_closure(const ChainModel& main, const PlaLinkage& linkage,
                                   const Eigen::VectorXd& q_o,
                                   const ClosureSolution* warm = nullptr);

/// Gamma_d, Gamma_i from the implicit-function theorem at the closure
/// solution, plus the stacked block map G.
TransmissionMaps transmission_jacobians(const ChainModel& main, const PlaLinkage& linkage,
                                        const Eigen::VectorXd& q_o,
                                        const ClosureSolution* warm = nullptr);

/// Directional derivative of the Gamma maps along qd_o (central difference).
TransmissionRates transmission_rates(const ChainModel& main, const PlaLinkage& linkage,
                                     const Eigen::VectorXd& q_o, const Eigen::VectorXd& qd_o,
                                     const ClosureSolution* warm = nullptr);

/// tau_o = Gamma_i^T tau_i.
Eigen::VectorXd map_actuator_torque(const Eigen::MatrixXd& gamma_i,
                                    const Eigen::VectorXd& tau_i);

/// Analytically exact projected model over the full main-chain coordinates.
/// tau_p supplies torques on the parent (and any other non-output) joints.
Eigen::VectorXd exact_projected_dynamics(const ChainModel& main, const PlaLinkage& linkage,
                                         const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                         const Eigen::VectorXd& tau_i,
                                         const Eigen::VectorXd& tau_p = Eigen::VectorXd());

/// Massless-links approximation: configuration-dependent armature
/// M_o = Gamma_i^T I_i Gamma_i and local bias h_0 = Gamma_i^T I_i Gamma_i_dot qd_o.
Eigen::VectorXd locally_projected_dynamics(const ChainModel& main, const PlaLinkage& linkage,
                                           const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                           const Eigen::VectorXd& tau_i,
                                           const Eigen::VectorXd& tau_p = Eigen::VectorXd());

/// Jacobi approximation: diagonal armature D_o plus a fictitious torque
/// O_o qdd_o_prev from the previous step's output acceleration.
Eigen::VectorXd dynamic_armature_step(const ChainModel& main, const PlaLinkage& linkage,
                                      const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                      const Eigen::VectorXd& tau_i,
                                      const Eigen::VectorXd& qdd_o_prev,
                                      const Eigen::VectorXd& tau_p = Eigen::VectorXd());

/// Armature split evaluated once at the nominal configuration.
ArmatureDecomposition nominal_armature(const ChainModel& main, const PlaLinkage& linkage);

/// Fixed-configuration armatures (D_o, O_o at q_nom), current-configuration h_0.
Eigen::VectorXd nominal_armature_dynamics(const ChainModel& main, const PlaLinkage& linkage,
                                          const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                          const Eigen::VectorXd& tau_i,
                                          const Eigen::VectorXd& qdd_o_prev,
                                          const Eigen::VectorXd& tau_p = Eigen::VectorXd());

/// Constant nominal armature, all fictitious torque dropped.
Eigen::VectorXd simplest_dynamics(const ChainModel& main, const PlaLinkage& linkage,
                                  const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                  const Eigen::VectorXd& tau_i,
                                  const Eigen::VectorXd& tau_p = Eigen::VectorXd());

/// Image of the motor torque box under Gamma_i^T; counterclockwise polygon
/// for 2-DoF outputs, raw corner images otherwise.
TorquePolytope torque_polytope(const ChainModel& main, const PlaLinkage& linkage,
                               const Eigen::VectorXd& q_o, const Eigen::VectorXd& tau_i_min,
                               const Eigen::VectorXd& tau_i_max);

struct EvalProtocol {
  double freq_hz = 5.0;
  double amplitude_fraction = 0.5;  // of the half joint-position range
  double duration_s = 2.0;
  double dt = 0.002;
  double kp = 80.0;
  double kd = 2.0;
};

struct ModelErrorRow {
  std::string model;
  int joint = 0;              // index within q_o
  double normalized_mse = 0.0;
  bool diverged = false;
};

/// Rolls out the exact model under PD tracking of a sinusoidal reference and
/// scores each approximation's acceleration along that trajectory against the
/// exact model, normalized per timestep by max(|qdd_exact|, 0.1).
std::vector<ModelErrorRow> evaluate_model_errors(const ChainModel& main,
                                                 const PlaLinkage& linkage,
                                                 const EvalProtocol& protocol);

}  // namespace mimiclab
