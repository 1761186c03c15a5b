#include "mimiclab/commands.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <iostream>
#include <sstream>
#include <thread>

namespace mimiclab {

namespace {

namespace fs = std::filesystem;

fs::path out_path(const ExperimentConfig& cfg, const std::string& file) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / file;
}

std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace

void cmd_eval_pla(const ExperimentConfig& cfg) {
  CsvWriter csv("mimiclab.eval-pla.v1",
                {"mechanism", "model", "joint", "normalized_mse", "diverged"});
  const std::pair<std::string, Mechanism> mechs[] = {
      {"four_bar_knee", make_four_bar_knee()},
      {"coupled_ankle", make_coupled_ankle()},
  };
  for (const auto& [name, mech] : mechs) {
    const std::vector<ModelErrorRow> rows =
        evaluate_model_errors(mech.main, mech.linkage, cfg.pla.protocol);
    for (const ModelErrorRow& r : rows)
      csv.row({name, r.model, CsvWriter::num(static_cast<long long>(r.joint)),
               CsvWriter::num(r.normalized_mse), flag(r.diverged)});
  }
  csv.write(out_path(cfg, "eval_pla.csv"));
}

void cmd_torque_polytope(const ExperimentConfig& cfg) {
  const Mechanism mech = make_coupled_ankle();
  const int n = cfg.pla.sweep_points;
  CsvWriter csv("mimiclab.torque-polytope.v1",
                {"q_pitch", "q_roll", "vertex", "tau_pitch", "tau_roll", "degenerate"});
  const Joint& jp = mech.main.joints[mech.linkage.output_coords[0]];
  const Joint& jr = mech.main.joints[mech.linkage.output_coords[1]];
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      Eigen::VectorXd q_o(2);
      q_o << jp.q_min + (jp.q_max - jp.q_min) * a / (n - 1),
          jr.q_min + (jr.q_max - jr.q_min) * b / (n - 1);
      const TorquePolytope poly = torque_polytope(mech.main, mech.linkage, q_o,
                                                  mech.linkage.tau_i_min,
                                                  mech.linkage.tau_i_max);
      for (int v = 0; v < poly.vertices.rows(); ++v)
        csv.row({CsvWriter::num(q_o(0)), CsvWriter::num(q_o(1)),
                 CsvWriter::num(static_cast<long long>(v)),
                 CsvWriter::num(poly.vertices(v, 0)), CsvWriter::num(poly.vertices(v, 1)),
                 flag(poly.degenerate)});
    }
  }
  csv.write(out_path(cfg, "torque_polytope.csv"));
}

void cmd_sampler_demo(const ExperimentConfig& cfg) {
  // three synthetic trajectories; bin (0, last) is persistently hard
  const double ctrl_dt = cfg.env.control_dt();
  std::vector<TrajectoryMeta> metas;
  const double durations[] = {2.0 * cfg.sampler.bin_width, 2.0 * cfg.sampler.bin_width,
                              cfg.sampler.bin_width};
  for (int i = 0; i < 3; ++i)
    metas.push_back({i, durations[i], static_cast<int>(std::lround(durations[i] / ctrl_dt)),
                     "synthetic-" + std::to_string(i)});
  BinTable table = build_bins(metas, cfg.sampler);
  const int hard_traj = 0, hard_bin = 1;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  CsvWriter csv("mimiclab.sampler-demo.v1",
                {"iter", "traj", "bin", "failure", "prob", "visits", "beta"});
  auto snapshot = [&](int iter) {
    const Eigen::MatrixXd p = sampling_distribution(table);
    for (const auto& [i, b] : table.omega)
      csv.row({CsvWriter::num(static_cast<long long>(iter)),
               CsvWriter::num(static_cast<long long>(i)),
               CsvWriter::num(static_cast<long long>(b)),
               CsvWriter::num(table.failure(i, b)), CsvWriter::num(p(i, b)),
               CsvWriter::num(static_cast<long long>(table.visits(i, b))),
               CsvWriter::num(assistance_scale(table.failure(i, b), cfg.curriculum))});
  };
  snapshot(0);
  for (int it = 1; it <= cfg.sampler_demo.iterations; ++it) {
    const StartSample st = sample_start(table, rng);
    const bool hard = st.traj == hard_traj && st.bin == hard_bin;
    const double base = hard ? cfg.sampler_demo.hard_similarity : cfg.sampler_demo.easy_similarity;
    const double sbar = std::clamp(base + cfg.sampler_demo.score_noise * n01(rng), 0.0, 1.0);
    update_failure(table, st.traj, st.bin, sbar);
    if (it % cfg.sampler_demo.snapshot_every == 0) snapshot(it);
  }
  csv.write(out_path(cfg, "sampler_demo.csv"));
}

void cmd_rollout(const ExperimentConfig& cfg) {
  if (cfg.rollout.trajectory_file.empty())
    throw ConfigError("rollout.trajectory_file is required");
  const ReferenceTrajectory traj = load_trajectory(cfg.rollout.trajectory_file);
  Environment env = make_toy_environment();
  env.config = cfg.env;
  if (env.config.action_scale.size() == 0)
    env.config.action_scale = make_toy_environment().config.action_scale;
  if (env.config.action_scale.size() != env.chain.nj())
    throw ConfigError("env.action_scale: expected one entry per joint");
  env.curriculum.eta = cfg.curriculum.eta;
  env.curriculum.beta_max = cfg.curriculum.beta_max;
  env.curriculum.kp_v = cfg.curriculum.kp_v;
  env.curriculum.kd_v = cfg.curriculum.kd_v;
  env.curriculum.kp_w = cfg.curriculum.kp_w;
  env.curriculum.kd_w = cfg.curriculum.kd_w;
  env.rewards = make_reward_weights(env.chain.nj(),
                                    static_cast<int>(env.keybody_links.size()),
                                    env.config.control_dt());
  if (static_cast<int>(traj.frames.front().q.size()) != env.chain.nj())
    throw ConfigError("trajectory joint dimension does not match the plant");
  if (std::abs(traj.dt - env.config.control_dt()) > 1e-12)
    throw ConfigError("trajectory dt does not match the control rate");

  std::vector<TrajectoryMeta> metas{{0, traj.duration(), traj.length(), traj.name}};
  const BinTable master = build_bins(metas, cfg.sampler);
  const std::vector<ReferenceTrajectory> library{traj};

  const int n_streams = std::min(cfg.streams, cfg.rollout.episodes);
  std::vector<std::vector<EpisodeLog>> per_stream(n_streams);
  auto worker = [&](int s) {
    std::mt19937_64 rng(cfg.seed + s);
    BinTable table = master;  // stream-local snapshot; folded after the join
    const Policy policy = make_scripted_policy(cfg.rollout.policy, env,
                                               static_cast<unsigned>(cfg.seed + 1000 + s));
    for (int e = s; e < cfg.rollout.episodes; e += n_streams)
      per_stream[s].push_back(run_episode(env, library, policy, &table, rng));
  };
  std::vector<std::thread> threads;
  for (int s = 0; s < n_streams; ++s) threads.emplace_back(worker, s);
  for (std::thread& t : threads) t.join();

  // orchestrator-side writes and sampler fold, in deterministic episode order
  std::vector<EpisodeLog> logs;
  for (int s = 0; s < n_streams; ++s)
    for (size_t k = 0; k < per_stream[s].size(); ++k) logs.push_back(per_stream[s][k]);
  std::vector<std::pair<int, int>> order;  // (episode index, position in logs)
  {
    std::vector<size_t> cursor(n_streams, 0);
    int pos = 0;
    for (int s = 0; s < n_streams; ++s)
      for (int e = s; e < cfg.rollout.episodes; e += n_streams) order.push_back({e, pos++});
    std::sort(order.begin(), order.end());
  }
  BinTable folded = master;
  std::vector<EpisodeResult> results;
  for (const auto& [e, pos] : order)
    results.push_back({logs[pos].traj, logs[pos].bin, logs[pos].sbar});
  update_failure_batch(folded, results);

  CsvWriter episodes("mimiclab.rollout-episodes.v1",
                     {"episode", "stream", "traj", "bin", "t_init", "phase", "beta", "L_real",
                      "L_max", "sbar", "total_reward", "termination", "reason"});
  CsvWriter steps("mimiclab.rollout-steps.v1",
                  {"episode", "step", "t", "r_track", "r_reg", "r_survival", "s_k"});
  std::vector<double> sbars;
  int failures = 0;
  double reward_sum = 0.0;
  for (const auto& [e, pos] : order) {
    const EpisodeLog& log = logs[pos];
    const char* term = log.termination == Termination::Failed ? "failed" : "timeout";
    episodes.row({CsvWriter::num(static_cast<long long>(e)),
                  CsvWriter::num(static_cast<long long>(e % n_streams)),
                  CsvWriter::num(static_cast<long long>(log.traj)),
                  CsvWriter::num(static_cast<long long>(log.bin)), CsvWriter::num(log.t_init),
                  CsvWriter::num(log.phase0), CsvWriter::num(log.beta),
                  CsvWriter::num(static_cast<long long>(log.L_real)),
                  CsvWriter::num(static_cast<long long>(log.L_max)), CsvWriter::num(log.sbar),
                  CsvWriter::num(log.total_reward), term, log.reason});
    for (size_t k = 0; k < log.steps.size(); ++k) {
      const StepRecord& r = log.steps[k];
      steps.row({CsvWriter::num(static_cast<long long>(e)),
                 CsvWriter::num(static_cast<long long>(k)), CsvWriter::num(r.t),
                 CsvWriter::num(r.r_track), CsvWriter::num(r.r_reg),
                 CsvWriter::num(r.r_survival), CsvWriter::num(r.s_k)});
    }
    sbars.push_back(log.sbar);
    reward_sum += log.total_reward;
    if (log.termination == Termination::Failed) ++failures;
  }
  std::vector<double> sorted = sbars;
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sbars.begin(), sbars.end(), 0.0) / sbars.size();
  const double p10 = sorted[static_cast<size_t>(0.1 * (sorted.size() - 1))];

  CsvWriter summary("mimiclab.rollout-summary.v1",
                    {"episodes", "mean_sbar", "min_sbar", "p10_sbar", "mean_reward", "failures"});
  summary.row({CsvWriter::num(static_cast<long long>(cfg.rollout.episodes)),
               CsvWriter::num(mean), CsvWriter::num(sorted.front()), CsvWriter::num(p10),
               CsvWriter::num(reward_sum / sbars.size()),
               CsvWriter::num(static_cast<long long>(failures))});

  episodes.write(out_path(cfg, "episodes.csv"));
  steps.write(out_path(cfg, "steps.csv"));
  summary.write(out_path(cfg, "summary.csv"));
}

std::vector<ActuatorLogSample> load_actuator_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open actuator log: " + path.string());
  std::vector<ActuatorLogSample> log;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // header row
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    ActuatorLogSample s;
    char c;
    if (!(row >> s.t >> c >> s.tau_in >> c >> s.omega >> c >> s.alpha >> c >> s.tau_out))
      throw ConfigError("actuator log: malformed row \"" + line + "\"");
    log.push_back(s);
  }
  if (log.empty()) throw ConfigError("actuator log: no samples in " + path.string());
  return log;
}

void cmd_fit_spot(const ExperimentConfig& cfg, const std::string& log_path) {
  const std::string path = log_path.empty() ? cfg.actuator.fit_log : log_path;
  if (path.empty()) throw ConfigError("fit-spot: no log file given (flag or actuator.fit_log)");
  const std::vector<ActuatorLogSample> log = load_actuator_log(path);
  EfficiencyFit fit;
  try {
    fit = fit_efficiency(log, cfg.actuator.params);
  } catch (const std::runtime_error& e) {
    throw NumericalError(e.what());
  }
  nlohmann::json j{{"eta_plus", fit.eta_plus},
                   {"eta_minus", fit.eta_minus},
                   {"plus_fitted", fit.plus_fitted},
                   {"minus_fitted", fit.minus_fitted},
                   {"residual_rms", fit.residual_rms}};
  std::ofstream out(out_path(cfg, "spot_fit.json"));
  out << j.dump(2) << "\n";
  std::cout << "fit residual rms: " << fit.residual_rms << "\n";
}

ReferenceTrajectory generate_reference(const ExperimentConfig& cfg) {
  const Environment env = make_toy_environment();
  EnvConfig ec = env.config;
  ec.sim_dt = cfg.env.sim_dt;
  ec.decimation = cfg.env.decimation;
  ec.omega_n = cfg.env.omega_n;
  const int n_j = env.chain.nj();
  const int frames = static_cast<int>(std::lround(cfg.gen_reference.duration_s / ec.control_dt()));
  if (frames < 2) throw ConfigError("gen_reference: duration too short for the control rate");

  RobotState state;
  state.base_pos = Vec3(0.0, 0.0, 1.0);
  state.q = Eigen::VectorXd::Zero(n_j);
  state.qd = Eigen::VectorXd::Zero(n_j);
  state.prev_action = Eigen::VectorXd::Zero(n_j);

  // per-joint sinusoidal targets tracked with the environment's own PD loop;
  // the recorded joint track is the command, so a zero-residual replay from
  // the start reproduces the rollout exactly
  auto target = [&](double t) {
    Eigen::VectorXd q_des(n_j);
    for (int j = 0; j < n_j; ++j)
      q_des(j) = cfg.gen_reference.target_amplitude *
                 std::sin(2.0 * M_PI * (0.25 + 0.1 * j) * t);
    return q_des;
  };
  const PdGains gains = pd_gains(env.joint_inertia, ec.omega_n);
  Eigen::VectorXd tau_min(n_j), tau_max(n_j);
  for (int j = 0; j < n_j; ++j) {
    tau_min(j) = env.chain.joints[j + 1].tau_min;
    tau_max(j) = env.chain.joints[j + 1].tau_max;
  }

  ReferenceTrajectory traj;
  traj.dt = ec.control_dt();
  traj.name = cfg.gen_reference.name;
  auto record = [&](int k) {
    RefFrame f;
    f.base_pos = state.base_pos;
    f.base_quat = state.base_quat;
    f.base_lin_vel = state.base_lin_vel;
    f.base_ang_vel = state.base_ang_vel;
    f.q = target(k * ec.control_dt());
    f.qd = state.qd;  // realized rates: resets then inject no spurious momentum
    f.keybodies = keybody_rel_poses(env.chain, state, env.keybody_links);
    traj.frames.push_back(std::move(f));
  };
  record(0);
  for (int k = 1; k < frames; ++k) {
    const Eigen::VectorXd q_cmd = target((k - 1) * ec.control_dt());
    for (int d = 0; d < ec.decimation; ++d) {
      Eigen::VectorXd tau = Eigen::VectorXd::Zero(env.chain.nv());
      tau.tail(n_j) = pd_torque(q_cmd, state.q, state.qd, gains, tau_min, tau_max);
      const Eigen::VectorXd qdd = forward_dynamics(env.chain, state, tau);
      if (!qdd.allFinite()) throw NumericalError("gen_reference: dynamics diverged");
      integrate(env.chain, state, qdd, ec.sim_dt);
    }
    record(k);
  }
  return traj;
}

void cmd_gen_reference(const ExperimentConfig& cfg) {
  const ReferenceTrajectory traj = generate_reference(cfg);
  save_trajectory(traj, out_path(cfg, cfg.gen_reference.name + ".json"));
}

}  // namespace mimiclab
