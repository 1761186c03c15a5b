#include "mimiclab/env.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace mimiclab {

PdGains pd_gains(const Eigen::VectorXd& inertia, double omega_n) {
  if (omega_n <= 0.0) throw std::invalid_argument("pd_gains: omega_n must be > 0");
  if ((inertia.array() <= 0.0).any())
    throw std::invalid_argument("pd_gains: inertias must be > 0");
  PdGains g;
  g.kp = inertia * omega_n * omega_n;
  g.kd = 2.0 * inertia * omega_n;
  return g;
}

Eigen::VectorXd apply_action(const Eigen::VectorXd& q_ref, const Eigen::VectorXd& action,
                             const Eigen::VectorXd& scale) {
  if (q_ref.size() != action.size() || q_ref.size() != scale.size())
    throw std::invalid_argument("apply_action: dimension mismatch");
  return q_ref + scale.cwiseProduct(action);
}

Eigen::VectorXd pd_torque(const Eigen::VectorXd& q_cmd, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qd, const PdGains& gains,
                          const Eigen::VectorXd& tau_min, const Eigen::VectorXd& tau_max) {
  Eigen::VectorXd tau =
      gains.kp.cwiseProduct(q_cmd - q) - gains.kd.cwiseProduct(qd);
  return tau.cwiseMax(tau_min).cwiseMin(tau_max);
}

Eigen::Vector2d project_into_polygon(const Eigen::Vector2d& point,
                                     const Eigen::MatrixXd& vertices) {
  const int n = static_cast<int>(vertices.rows());
  if (n < 3 || vertices.cols() != 2)
    throw std::invalid_argument("project_into_polygon: need a CCW polygon");
  bool inside = true;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d a = vertices.row(i), b = vertices.row((i + 1) % n);
    const Eigen::Vector2d e = b - a, d = point - a;
    if (e.x() * d.y() - e.y() * d.x() < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return point;
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d proj = vertices.row(0);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d a = vertices.row(i), b = vertices.row((i + 1) % n);
    const Eigen::Vector2d e = b - a;
    const double t = std::clamp(e.dot(point - a) / std::max(e.squaredNorm(), 1e-300), 0.0, 1.0);
    const Eigen::Vector2d c = a + t * e;
    const double d2 = (point - c).squaredNorm();
    if (d2 < best) {
      best = d2;
      proj = c;
    }
  }
  return proj;
}

RewardWeights make_reward_weights(int n_j, int n_kb, double control_dt) {
  RewardWeights w;
  w.sigma = {0.4, 0.5, 1.5, 0.6, 0.3 * std::sqrt(double(n_j)),
             0.2 * std::sqrt(double(n_kb)), 0.4 * std::sqrt(double(n_kb))};
  w.dt_scale = control_dt;
  return w;
}

std::vector<KeybodyPose> keybody_rel_poses(const ChainModel& chain, const RobotState& state,
                                           const std::vector<int>& keybody_links) {
  const ForwardKinematics fk =
      forward_kinematics(chain, state.base_pos, state.base_quat, state.q);
  const Mat3 Rb_t = state.base_quat.toRotationMatrix().transpose();
  std::vector<KeybodyPose> out;
  for (int link : keybody_links) {
    KeybodyPose kb;
    kb.pos = Rb_t * (fk.p[link] - state.base_pos);
    kb.quat = state.base_quat.conjugate() * Quat(fk.R[link]);
    out.push_back(kb);
  }
  return out;
}

TrackingReward tracking_reward(const ChainModel& chain, const RobotState& state,
                               const RefState& ref, const std::vector<int>& keybody_links,
                               const RewardWeights& w) {
  const int n_kb = static_cast<int>(keybody_links.size());
  Eigen::Matrix<double, 7, 1> err2;
  err2(0) = (ref.base_pos - state.base_pos).squaredNorm();
  err2(1) = boxminus(ref.base_quat, state.base_quat).squaredNorm();
  err2(2) = (ref.base_ang_vel - state.base_ang_vel).squaredNorm();
  err2(3) = (ref.base_lin_vel - state.base_lin_vel).squaredNorm();
  err2(4) = (ref.q - state.q).squaredNorm();
  err2(5) = err2(6) = 0.0;
  if (n_kb > 0) {
    if (static_cast<int>(ref.keybodies.size()) != n_kb)
      throw std::invalid_argument("tracking_reward: keybody count mismatch");
    const std::vector<KeybodyPose> kb = keybody_rel_poses(chain, state, keybody_links);
    for (int i = 0; i < n_kb; ++i) {
      err2(5) += (ref.keybodies[i].pos - kb[i].pos).squaredNorm();
      err2(6) += boxminus(ref.keybodies[i].quat, kb[i].quat).squaredNorm();
    }
  }
  TrackingReward r;
  for (int i = 0; i < 7; ++i) {
    r.terms(i) = w.track_weight[i] * w.dt_scale *
                 std::exp(-w.kappa * err2(i) / (w.sigma[i] * w.sigma[i]));
  }
  r.total = r.terms.sum();
  return r;
}

double regularization_penalty(const Eigen::VectorXd& action, const Eigen::VectorXd& prev_action,
                              const Eigen::VectorXd& qdd_j, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& tau, const ChainModel& chain,
                              const RewardWeights& w) {
  double pos_over = 0.0, tau_over = 0.0;
  const int off = chain.floating_base() ? 1 : 0;
  for (int j = 0; j < chain.nj(); ++j) {
    const Joint& jt = chain.joints[j + off];
    pos_over += std::max(0.0, jt.q_min - q(j)) + std::max(0.0, q(j) - jt.q_max);
    tau_over += std::max(0.0, jt.tau_min - tau(j)) + std::max(0.0, tau(j) - jt.tau_max);
  }
  return -w.dt_scale * (w.w_action_rate * (action - prev_action).norm() +
                        w.w_joint_accel * qdd_j.squaredNorm() +
                        w.w_pos_limit * pos_over + w.w_torque_limit * tau_over);
}

TerminationState check_termination(const RobotState& state, const RefState& ref,
                                   const TerminationThresholds& thr, int step, int last_step) {
  TerminationState t;
  if ((state.base_pos - ref.base_pos).norm() > thr.d_max) {
    t.status = Termination::Failed;
    t.reason = "deviation";
  } else if (boxminus(ref.base_quat, state.base_quat).norm() > thr.theta_max) {
    t.status = Termination::Failed;
    t.reason = "orientation";
  } else if (step >= last_step) {
    t.status = Termination::Timeout;
    t.reason = "timeout";
  }
  return t;
}

DomainParams randomize_domain(const DomainRandomizationRanges& r, double horizon_s,
                              std::mt19937_64& rng) {
  DomainParams p;
  if (!r.enabled) return p;
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  p.static_friction = uni(r.static_friction_min, r.static_friction_max);
  p.dynamic_friction = uni(r.dynamic_friction_min, r.dynamic_friction_max);
  p.restitution = uni(r.restitution_min, r.restitution_max);
  p.mass_scale = uni(r.mass_scale_min, r.mass_scale_max);
  double t = uni(0.0, r.push_interval_max_s);
  while (t < horizon_s) {
    const double theta = uni(0.0, 2.0 * M_PI);
    p.pushes.push_back({t, r.push_speed * Vec3(std::cos(theta), std::sin(theta), 0.0)});
    t += uni(0.0, r.push_interval_max_s);
  }
  return p;
}

Eigen::VectorXd build_actor_obs(const RobotState& state, const RefState& ref,
                                const DomainRandomizationRanges& noise,
                                std::mt19937_64* rng) {
  const int n_j = static_cast<int>(state.q.size());
  const int n_a = static_cast<int>(state.prev_action.size());
  Eigen::VectorXd obs(16 + 3 * n_j + n_a);
  const Mat3 Rt = state.base_quat.toRotationMatrix().transpose();
  const Mat3 Rt_ref = ref.base_quat.toRotationMatrix().transpose();
  int at = 0;
  obs.segment<3>(at) = Rt * state.base_ang_vel;
  at += 3;
  obs.segment<3>(at) = gravity_in_frame(state.base_quat);
  at += 3;
  obs.segment(at, n_j) = state.q;
  at += n_j;
  obs.segment(at, n_j) = state.qd;
  at += n_j;
  obs.segment(at, n_a) = state.prev_action;
  at += n_a;
  obs(at++) = ref.base_pos.z();
  obs.segment<3>(at) = Rt_ref * ref.base_lin_vel;
  at += 3;
  obs.segment<3>(at) = Rt_ref * ref.base_ang_vel;
  at += 3;
  obs.segment<3>(at) = gravity_in_frame(ref.base_quat);
  at += 3;
  obs.segment(at, n_j) = ref.q;

  if (rng != nullptr) {  // only the proprioceptive block carries noise
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < 3; ++i) obs(i) += noise.noise_ang_vel * n01(*rng);
    for (int i = 3; i < 6; ++i) obs(i) += noise.noise_gravity * n01(*rng);
    for (int i = 0; i < n_j; ++i) obs(6 + i) += noise.noise_q * n01(*rng);
    for (int i = 0; i < n_j; ++i) obs(6 + n_j + i) += noise.noise_qd * n01(*rng);
  }
  return obs;
}

Eigen::VectorXd build_critic_obs(const ChainModel& chain, const RobotState& state,
                                 const RefState& ref, const std::vector<int>& keybody_links,
                                 const DomainRandomizationRanges& noise,
                                 const CriticExtras& extras) {
  const Eigen::VectorXd actor = build_actor_obs(state, ref, noise, nullptr);
  const int n_kb = static_cast<int>(keybody_links.size());
  Eigen::VectorXd obs(actor.size() + 3 + 1 + 3 + 3 * n_kb + 6 * n_kb + 6 + 1 + 7 + 1);
  obs.head(actor.size()) = actor;
  int at = static_cast<int>(actor.size());
  const Mat3 Rt = state.base_quat.toRotationMatrix().transpose();
  obs.segment<3>(at) = Rt * state.base_lin_vel;
  at += 3;
  obs(at++) = state.base_pos.z();
  obs.segment<3>(at) = extras.base_contact_force;
  at += 3;
  for (int i = 0; i < n_kb; ++i) {
    obs.segment<3>(at) = i < static_cast<int>(extras.keybody_contact_forces.size())
                             ? extras.keybody_contact_forces[i]
                             : Vec3::Zero();
    at += 3;
  }
  const ForwardKinematics fk =
      forward_kinematics(chain, state.base_pos, state.base_quat, state.q);
  const Eigen::VectorXd gv = generalized_velocity(chain, state);
  for (int i = 0; i < n_kb; ++i) {
    obs.segment<3>(at) = Rt * (fk.p[keybody_links[i]] - state.base_pos);
    at += 3;
    const Eigen::MatrixXd J = point_jacobian(chain, fk, keybody_links[i], Vec3::Zero());
    obs.segment<3>(at) = Rt * (J.topRows<3>() * gv);
    at += 3;
  }
  obs.segment<6>(at) = extras.applied_wrench;
  at += 6;
  obs(at++) = extras.beta;
  obs.segment<7>(at) = extras.tracking_terms;
  at += 7;
  obs(at++) = extras.phase;
  return obs;
}

Environment make_toy_environment() {
  Environment env;
  ChainModel& c = env.chain;

  Link torso;
  torso.name = "torso";
  torso.mass = 8.0;
  torso.com = Vec3(0.0, 0.0, 0.05);
  torso.inertia = Vec3(0.12, 0.10, 0.08).asDiagonal();
  Joint base;
  base.name = "float";
  base.type = JointType::FloatingBase;
  base.parent = -1;
  c.links.push_back(torso);
  c.joints.push_back(base);

  for (int side = 0; side < 2; ++side) {
    const double y = side == 0 ? 0.15 : -0.15;
    Link upper;
    upper.name = side == 0 ? "l_upper" : "r_upper";
    upper.mass = 1.2;
    upper.com = Vec3(0.0, 0.0, -0.12);
    upper.inertia = Vec3(0.012, 0.012, 0.002).asDiagonal();
    Joint shoulder;
    shoulder.name = side == 0 ? "l_shoulder" : "r_shoulder";
    shoulder.axis = Vec3::UnitY();
    shoulder.parent = 0;
    shoulder.origin_xyz = Vec3(0.0, y, 0.2);
    shoulder.q_min = -2.0;
    shoulder.q_max = 2.0;
    shoulder.tau_min = -60.0;
    shoulder.tau_max = 60.0;
    c.links.push_back(upper);
    c.joints.push_back(shoulder);

    Link lower;
    lower.name = side == 0 ? "l_lower" : "r_lower";
    lower.mass = 0.8;
    lower.com = Vec3(0.0, 0.0, -0.10);
    lower.inertia = Vec3(0.008, 0.008, 0.001).asDiagonal();
    Joint elbow;
    elbow.name = side == 0 ? "l_elbow" : "r_elbow";
    elbow.axis = Vec3::UnitY();
    elbow.parent = static_cast<int>(c.links.size()) - 1;
    elbow.origin_xyz = Vec3(0.0, 0.0, -0.25);
    elbow.q_min = -2.0;
    elbow.q_max = 2.0;
    elbow.tau_min = -60.0;
    elbow.tau_max = 60.0;
    c.links.push_back(lower);
    c.joints.push_back(elbow);
    env.keybody_links.push_back(static_cast<int>(c.links.size()) - 1);
  }
  c.validate();

  // apparent per-joint inertia for the PD design, from the mass matrix at
  // the default posture
  const Eigen::MatrixXd M = mass_matrix(c, Eigen::VectorXd::Zero(c.nj()));
  env.joint_inertia = M.diagonal().tail(c.nj());

  env.config.action_scale = Eigen::VectorXd(c.nj());
  env.config.action_scale << 0.10, 0.20, 0.10, 0.20;

  double total_mass = 0.0;
  for (const Link& l : c.links) total_mass += l.mass;
  env.curriculum.mass = total_mass;
  env.curriculum.inertia = torso.inertia;
  env.curriculum.gravity = c.gravity;

  env.rewards =
      make_reward_weights(c.nj(), static_cast<int>(env.keybody_links.size()),
                          env.config.control_dt());
  return env;
}

Policy make_scripted_policy(const std::string& name, const Environment& env, unsigned seed) {
  const int n_j = env.chain.nj();
  if (name == "zero-residual") {
    return [n_j](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(n_j).eval(); };
  }
  if (name == "noisy-expert") {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [n_j, rng](const Eigen::VectorXd&) {
      std::normal_distribution<double> n01(0.0, 0.05);
      Eigen::VectorXd a(n_j);
      for (int i = 0; i < n_j; ++i) a(i) = n01(*rng);
      return a;
    };
  }
  if (name == "proportional-corrector") {
    const Eigen::VectorXd scale = env.config.action_scale;
    return [n_j, scale](const Eigen::VectorXd& obs) {
      const Eigen::VectorXd q = obs.segment(6, n_j);
      const Eigen::VectorXd q_ref = obs.tail(n_j);
      Eigen::VectorXd a = 0.5 * (q_ref - q).cwiseQuotient(scale);
      return a.cwiseMax(-1.0).cwiseMin(1.0).eval();
    };
  }
  throw std::invalid_argument("unknown scripted policy: " + name);
}

EpisodeLog run_episode(const Environment& env,
                       const std::vector<ReferenceTrajectory>& library, const Policy& policy,
                       BinTable* sampler, std::mt19937_64& rng) {
  if (library.empty()) throw std::invalid_argument("run_episode: empty trajectory library");
  const EnvConfig& cfg = env.config;
  const double ctrl_dt = cfg.control_dt();

  EpisodeLog log;
  if (sampler != nullptr) {
    const StartSample st = sample_start(*sampler, rng);
    log.traj = st.traj;
    log.bin = st.bin;
    log.t_init = st.t_init;
    log.phase0 = st.phase;
    log.beta = assistance_scale(sampler->failure(st.traj, st.bin), env.curriculum);
  }
  const ReferenceTrajectory& traj = library.at(log.traj);
  const int k0 = traj.frame_index(log.t_init);

  const int cap = static_cast<int>(std::lround(cfg.episode_length_s / ctrl_dt));
  const int remaining = traj.length() - k0;
  log.L_max = std::min(cap, remaining);
  const int dwell = log.L_max < cap
                        ? static_cast<int>(std::lround(cfg.dwell_s / ctrl_dt))
                        : 0;
  const int last_step = log.L_max + dwell;

  const DomainParams domain = randomize_domain(cfg.randomization, last_step * ctrl_dt, rng);
  ChainModel chain = env.chain;
  for (Link& l : chain.links) {
    l.mass *= domain.mass_scale;
    l.inertia *= domain.mass_scale;
  }
  const PdGains gains = pd_gains(env.joint_inertia, cfg.omega_n);
  Eigen::VectorXd tau_min(chain.nj()), tau_max(chain.nj());
  const int off = chain.floating_base() ? 1 : 0;
  for (int j = 0; j < chain.nj(); ++j) {
    tau_min(j) = chain.joints[j + off].tau_min;
    tau_max(j) = chain.joints[j + off].tau_max;
  }

  const RefState start = traj.sample(k0 * traj.dt, cfg.accel_clamp);
  RobotState state;
  state.base_pos = start.base_pos;
  state.base_quat = start.base_quat;
  state.base_lin_vel = start.base_lin_vel;
  state.base_ang_vel = start.base_ang_vel;
  state.q = start.q;
  state.qd = start.qd;
  state.prev_action = Eigen::VectorXd::Zero(chain.nj());

  std::vector<double> scores;
  size_t next_push = 0;
  log.termination = Termination::Running;

  for (int k = 0; k < last_step; ++k) {
    const RefState ref = traj.sample((k0 + k) * traj.dt, cfg.accel_clamp);
    const Eigen::VectorXd obs =
        build_actor_obs(state, ref, cfg.randomization,
                        cfg.randomization.enabled ? &rng : nullptr);
    const Eigen::VectorXd action = policy(obs);
    const Eigen::VectorXd q_cmd = apply_action(ref.q, action, cfg.action_scale);

    std::vector<BodyWrench> wrenches;
    if (log.beta > 0.0) {
      const Vec6 w = assistive_wrench(state, ref, env.curriculum, log.beta);
      wrenches.push_back({0, w.head<3>(), w.tail<3>()});
    }

    Eigen::VectorXd qdd_j = Eigen::VectorXd::Zero(chain.nj());
    Eigen::VectorXd tau_j = Eigen::VectorXd::Zero(chain.nj());
    bool numerical_failure = false;
    for (int d = 0; d < cfg.decimation; ++d) {
      const double t_sim = (k * cfg.decimation + d) * cfg.sim_dt;
      while (next_push < domain.pushes.size() &&
             domain.pushes[next_push].time_s < t_sim + cfg.sim_dt) {
        state.base_lin_vel += domain.pushes[next_push].delta_v;
        ++next_push;
      }
      tau_j = pd_torque(q_cmd, state.q, state.qd, gains, tau_min, tau_max);
      Eigen::VectorXd tau = Eigen::VectorXd::Zero(chain.nv());
      tau.tail(chain.nj()) = tau_j;
      const Eigen::VectorXd qdd = forward_dynamics(chain, state, tau, wrenches);
      if (!qdd.allFinite()) {
        numerical_failure = true;
        break;
      }
      integrate(chain, state, qdd, cfg.sim_dt);
      qdd_j = qdd.tail(chain.nj());
    }
    if (numerical_failure || !state.q.allFinite()) {
      log.termination = Termination::Failed;
      log.reason = "numerical";
      break;
    }

    const int ref_idx = std::min(k0 + k + 1, traj.length() - 1);
    const RefState ref_next = traj.sample(ref_idx * traj.dt, cfg.accel_clamp);
    const TrackingReward tr =
        tracking_reward(chain, state, ref_next, env.keybody_links, env.rewards);
    const double reg = regularization_penalty(action, state.prev_action, qdd_j, state.q,
                                              tau_j, chain, env.rewards);
    const double surv = env.rewards.survival * env.rewards.dt_scale;

    StepRecord rec;
    rec.t = (k + 1) * ctrl_dt;
    rec.r_track = tr.total;
    rec.r_reg = reg;
    rec.r_survival = surv;
    rec.track_terms = tr.terms;
    const bool in_track = k < log.L_max;
    if (in_track) {
      // joint-tracking kernel, weight and dt scale stripped
      const double e2 = (ref_next.q - state.q).squaredNorm();
      const double sig = env.rewards.sigma[4];
      rec.s_k = std::exp(-env.rewards.kappa * e2 / (sig * sig));
      scores.push_back(rec.s_k);
      log.L_real = k + 1;
    }
    log.total_reward += tr.total + reg + surv;
    log.steps.push_back(rec);
    state.prev_action = action;

    // failure checks stop once the reference is exhausted (ref_next clamps to
    // the final frame); from there the dwell only waits for the timeout
    if (in_track && k0 + k + 1 < traj.length()) {
      const TerminationState term =
          check_termination(state, ref_next, cfg.termination, k + 1, last_step);
      if (term.status == Termination::Failed) {
        log.termination = term.status;
        log.reason = term.reason;
        break;
      }
    }
    if (k + 1 >= last_step) {
      log.termination = Termination::Timeout;
      log.reason = "timeout";
    }
  }
  if (log.termination == Termination::Running) {
    log.termination = Termination::Timeout;
    log.reason = "timeout";
  }

  log.sbar = episode_similarity(scores, log.L_max);
  if (sampler != nullptr) update_failure(*sampler, log.traj, log.bin, log.sbar);
  return log;
}

}  // namespace mimiclab
