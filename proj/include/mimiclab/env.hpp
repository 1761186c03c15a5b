#pragma once

#include <array>
#include <functional>
#include <optional>

#include "mimiclab/curriculum.hpp"
#include "mimiclab/dynamics.hpp"
#include "mimiclab/linkage.hpp"
#include "mimiclab/sampler.hpp"
#include "mimiclab/trajectory.hpp"

namespace mimiclab {

struct PdGains {
  Eigen::VectorXd kp, kd;
};

/// Critically damped design at natural frequency omega_n from the per-joint
/// apparent inertia: Kp = I w^2, Kd = 2 I w, so Kd^2 = 4 I Kp exactly.
PdGains pd_gains(const Eigen::VectorXd& inertia, double omega_n);

/// Residual action on top of the reference posture: q_cmd = q_ref + scale * a.
Eigen::VectorXd apply_action(const Eigen::VectorXd& q_ref, const Eigen::VectorXd& action,
                             const Eigen::VectorXd& scale);

/// PD law with a per-joint box clamp on the result.
Eigen::VectorXd pd_torque(const Eigen::VectorXd& q_cmd, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qd, const PdGains& gains,
                          const Eigen::VectorXd& tau_min, const Eigen::VectorXd& tau_max);

/// Euclidean projection of a point into a convex CCW polygon (vertices one
/// per row); used to clamp 2-DoF outputs into a transmission torque polytope.
Eigen::Vector2d project_into_polygon(const Eigen::Vector2d& point,
                                     const Eigen::MatrixXd& vertices);

struct RewardWeights {
  double kappa = 0.25;
  std::array<double, 7> track_weight{1, 1, 1, 1, 1, 1, 1};
  // base pos, base orient, base ang vel, base lin vel, joint pos,
  // keybody pos, keybody orient
  std::array<double, 7> sigma{0.4, 0.5, 1.5, 0.6, 0.3, 0.2, 0.4};
  double w_action_rate = 0.15;
  double w_joint_accel = 1e-5;
  double w_pos_limit = 1.0;
  double w_torque_limit = 0.1;
  double survival = 1.0;
  double dt_scale = 0.02;  // every weight is multiplied by the control dt
};

/// Fills the dimension-dependent sigmas (0.3 sqrt(n_j), 0.2 sqrt(n_kb),
/// 0.4 sqrt(n_kb)) and the dt scale.
RewardWeights make_reward_weights(int n_j, int n_kb, double control_dt);

/// Keybody poses relative to the base, from forward kinematics.
std::vector<KeybodyPose> keybody_rel_poses(const ChainModel& chain, const RobotState& state,
                                           const std::vector<int>& keybody_links);

struct TrackingReward {
  Eigen::Matrix<double, 7, 1> terms;
  double total = 0.0;
};

/// Sum of exponential kernels c dt exp(-kappa ||e||^2 / sigma^2) over the
/// seven tracking errors. Keybody poses are taken relative to the base.
TrackingReward tracking_reward(const ChainModel& chain, const RobotState& state,
                               const RefState& ref, const std::vector<int>& keybody_links,
                               const RewardWeights& w);

/// Nonpositive penalty: action rate (norm), joint acceleration (squared
/// norm), joint position limit overshoot, torque limit overshoot.
double regularization_penalty(const Eigen::VectorXd& action, const Eigen::VectorXd& prev_action,
                              const Eigen::VectorXd& qdd_j, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& tau, const ChainModel& chain,
                              const RewardWeights& w);

enum class Termination { Running, Failed, Timeout };

struct TerminationThresholds {
  double d_max = 0.5;      // base position deviation, m
  double theta_max = 0.8;  // base orientation deviation, rad
};

struct TerminationState {
  Termination status = Termination::Running;
  std::string reason;
};

TerminationState check_termination(const RobotState& state, const RefState& ref,
                                   const TerminationThresholds& thr, int step, int last_step);

struct DomainRandomizationRanges {
  bool enabled = false;
  double static_friction_min = 0.6, static_friction_max = 1.0;
  double dynamic_friction_min = 0.5, dynamic_friction_max = 0.9;
  double restitution_min = 0.0, restitution_max = 0.2;
  double mass_scale_min = 0.9, mass_scale_max = 1.1;
  double push_interval_max_s = 10.0;
  double push_speed = 0.5;  // planar, m/s
  double noise_ang_vel = 0.10;
  double noise_gravity = 0.015;
  double noise_q = 0.005;
  double noise_qd = 0.25;
};

struct PushEvent {
  double time_s = 0.0;
  Vec3 delta_v = Vec3::Zero();
};

struct DomainParams {
  double static_friction = 0.8;
  double dynamic_friction = 0.7;
  double restitution = 0.0;
  double mass_scale = 1.0;
  std::vector<PushEvent> pushes;
};

DomainParams randomize_domain(const DomainRandomizationRanges& ranges, double horizon_s,
                              std::mt19937_64& rng);

/// Actor observation, fixed slot order:
/// [w_T(3), g_T(3), q_j, qd_j, a_prev, r_z(1), v_ref(3), w_ref(3), g_ref(3),
/// q_ref]; base-frame angular velocity and gravity direction, reference
/// twists in the reference base frame. Noise (when rng given) touches only
/// the proprioceptive block.
Eigen::VectorXd build_actor_obs(const RobotState& state, const RefState& ref,
                                const DomainRandomizationRanges& noise,
                                std::mt19937_64* rng = nullptr);

struct CriticExtras {
  Vec3 base_contact_force = Vec3::Zero();       // zero in the contact-free harness
  std::vector<Vec3> keybody_contact_forces;
  Vec6 applied_wrench = Vec6::Zero();
  double beta = 0.0;
  Eigen::Matrix<double, 7, 1> tracking_terms = Eigen::Matrix<double, 7, 1>::Zero();
  double phase = 0.0;
};

/// Privileged tail appended after the actor vector: base lin vel (base
/// frame), base height, contact forces, keybody positions/velocities
/// relative to base, fictitious wrench, beta, 7 tracking terms, phase.
Eigen::VectorXd build_critic_obs(const ChainModel& chain, const RobotState& state,
                                 const RefState& ref, const std::vector<int>& keybody_links,
                                 const DomainRandomizationRanges& noise,
                                 const CriticExtras& extras);

struct EnvConfig {
  double sim_dt = 0.004;
  int decimation = 5;
  double omega_n = 30.0;  // PD natural frequency, rad/s
  Eigen::VectorXd action_scale;
  double episode_length_s = 10.0;
  double dwell_s = 0.5;  // held final frame before the timeout reset
  double accel_clamp = 50.0;
  TerminationThresholds termination;
  DomainRandomizationRanges randomization;

  double control_dt() const { return sim_dt * decimation; }
};

struct Environment {
  ChainModel chain;                 // floating-base plant
  std::vector<int> keybody_links;   // end links of each branch
  Eigen::VectorXd joint_inertia;    // apparent per-joint inertia for PD design
  EnvConfig config;
  CurriculumParams curriculum;
  RewardWeights rewards;
};

/// Floating-base toy plant: torso plus two 2-joint branches, keybodies at
/// the branch tips.
Environment make_toy_environment();

struct StepRecord {
  double t = 0.0;
  double r_track = 0.0;
  double r_reg = 0.0;
  double r_survival = 0.0;
  double s_k = 0.0;
  Eigen::Matrix<double, 7, 1> track_terms = Eigen::Matrix<double, 7, 1>::Zero();
};

struct EpisodeLog {
  int traj = 0, bin = 0;
  double t_init = 0.0, phase0 = 0.0, beta = 0.0;
  int L_real = 0, L_max = 0;
  double sbar = 0.0;
  double total_reward = 0.0;
  Termination termination = Termination::Running;
  std::string reason;
  std::vector<StepRecord> steps;
};

using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd& obs)>;

/// Scripted stand-ins for a learned policy: "zero-residual", "noisy-expert",
/// or "proportional-corrector".
Policy make_scripted_policy(const std::string& name, const Environment& env, unsigned seed);

/// One RSI episode: reset from sample_start (trajectory 0, t = 0 without a
/// sampler), beta captured at reset, PD stepping at the decimated rate, and
/// the similarity fed back into the sampler on completion.
EpisodeLog run_episode(const Environment& env,
                       const std::vector<ReferenceTrajectory>& library, const Policy& policy,
                       BinTable* sampler, std::mt19937_64& rng);

}  // namespace mimiclab
