#include "mimiclab/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mimiclab {

namespace {

using nlohmann::json;

/// Tracks which keys of an object were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j.is_object()) throw ConfigError(context_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(context_ + ": missing key \"" + key + "\"");
    return j_.at(key);
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(context_ + ": unknown key \"" + key + "\"");
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from_json(const json& a, const std::string& ctx, int expected = -1) {
  if (!a.is_array()) throw ConfigError(ctx + ": expected an array");
  if (expected >= 0 && static_cast<int>(a.size()) != expected)
    throw ConfigError(ctx + ": expected " + std::to_string(expected) + " entries");
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

Vec3 vec3_from_json(const json& a, const std::string& ctx) {
  return Vec3(vec_from_json(a, ctx, 3));
}

json quat_to_json(const Quat& q) {
  return json::array({q.w(), q.x(), q.y(), q.z()});
}

Quat quat_from_json(const json& a, const std::string& ctx) {
  const Eigen::VectorXd v = vec_from_json(a, ctx, 4);
  Quat q(v(0), v(1), v(2), v(3));
  if (std::abs(q.norm() - 1.0) > 1e-6) throw ConfigError(ctx + ": quaternion not unit");
  return q;  // kept verbatim so save/load round-trips bit-exactly
}

json mat3_to_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

Mat3 mat3_from_json(const json& a, const std::string& ctx) {
  const Eigen::VectorXd v = vec_from_json(a, ctx, 9);
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v(3 * r + c);
  return m;
}

json default_ppo() {
  return json{{"actor_hidden", {512, 256, 128}},
              {"critic_hidden", {512, 512, 256}},
              {"activation", "elu"},
              {"empirical_normalization", true},
              {"learning_rate", 1e-3},
              {"lr_schedule", "adaptive_kl"},
              {"discount", 0.99},
              {"gae_lambda", 0.95},
              {"desired_kl", 0.01},
              {"clip_range", 0.2},
              {"entropy_coef", 0.001},
              {"value_loss_coef", 0.5},
              {"epochs", 5},
              {"num_envs", 4096},
              {"batch_size", 245760},
              {"minibatch_size", 61440}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (streams < 1) throw ConfigError("streams must be >= 1");
  if (pla.sweep_points < 2) throw ConfigError("pla.sweep_points must be >= 2");
  if (pla.protocol.dt <= 0.0 || pla.protocol.duration_s <= 0.0 || pla.protocol.freq_hz <= 0.0)
    throw ConfigError("pla.protocol: dt, duration, and frequency must be > 0");
  try {
    actuator.params.validate();
    curriculum.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (actuator.power_budget_w <= 0.0) throw ConfigError("actuator.power_budget_w must be > 0");
  if (sampler.bin_width <= 0.0) throw ConfigError("sampler.bin_width must be > 0");
  if (sampler.alpha <= 0.0 || sampler.alpha > 1.0) throw ConfigError("sampler.alpha must lie in (0, 1]");
  if (sampler.epsilon < 0.0 || sampler.epsilon > 1.0)
    throw ConfigError("sampler.epsilon must lie in [0, 1]");
  if (sampler.tau_base <= 0.0) throw ConfigError("sampler.tau_base must be > 0");
  if (sampler_demo.iterations < 1 || sampler_demo.snapshot_every < 1)
    throw ConfigError("sampler_demo: iterations and snapshot_every must be >= 1");
  if (env.sim_dt <= 0.0 || env.decimation < 1) throw ConfigError("env: bad timestep settings");
  if (env.omega_n <= 0.0) throw ConfigError("env.omega_n must be > 0");
  if (env.episode_length_s <= 0.0) throw ConfigError("env.episode_length_s must be > 0");
  if (rollout.episodes < 1) throw ConfigError("rollout.episodes must be >= 1");
  if (gen_reference.duration_s <= 0.0) throw ConfigError("gen_reference.duration_s must be > 0");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["streams"] = c.streams;
  j["out_dir"] = c.out_dir;
  j["pla"] = {{"sweep_points", c.pla.sweep_points},
              {"protocol",
               {{"freq_hz", c.pla.protocol.freq_hz},
                {"amplitude_fraction", c.pla.protocol.amplitude_fraction},
                {"duration_s", c.pla.protocol.duration_s},
                {"dt", c.pla.protocol.dt},
                {"kp", c.pla.protocol.kp},
                {"kd", c.pla.protocol.kd}}}};
  j["actuator"] = {{"k", c.actuator.params.k},
                   {"rotor_inertia", c.actuator.params.rotor_inertia},
                   {"K_c", c.actuator.params.K_c},
                   {"s", c.actuator.params.s},
                   {"K_v", c.actuator.params.K_v},
                   {"eta_plus", c.actuator.params.eta_plus},
                   {"eta_minus", c.actuator.params.eta_minus},
                   {"filter_cutoff_hz", c.actuator.params.filter_cutoff_hz},
                   {"work_hysteresis", c.actuator.params.work_hysteresis},
                   {"eta_plus_range", {c.actuator.eta_plus_min, c.actuator.eta_plus_max}},
                   {"eta_minus_range", {c.actuator.eta_minus_min, c.actuator.eta_minus_max}},
                   {"power_budget_w", c.actuator.power_budget_w},
                   {"resistive_coeff", c.actuator.resistive_coeff},
                   {"idle_power_w", c.actuator.idle_power_w},
                   {"fit_log", c.actuator.fit_log}};
  j["sampler"] = {{"bin_width", c.sampler.bin_width},
                  {"alpha", c.sampler.alpha},
                  {"tau_base", c.sampler.tau_base},
                  {"epsilon", c.sampler.epsilon}};
  j["sampler_demo"] = {{"iterations", c.sampler_demo.iterations},
                       {"snapshot_every", c.sampler_demo.snapshot_every},
                       {"hard_similarity", c.sampler_demo.hard_similarity},
                       {"easy_similarity", c.sampler_demo.easy_similarity},
                       {"score_noise", c.sampler_demo.score_noise}};
  j["curriculum"] = {{"eta", c.curriculum.eta},
                     {"beta_max", c.curriculum.beta_max},
                     {"kp_v", c.curriculum.kp_v},
                     {"kd_v", c.curriculum.kd_v},
                     {"kp_w", c.curriculum.kp_w},
                     {"kd_w", c.curriculum.kd_w},
                     {"mass", c.curriculum.mass},
                     {"inertia", mat3_to_json(c.curriculum.inertia)},
                     {"r_com", vec_to_json(c.curriculum.r_com)},
                     {"gravity", vec_to_json(c.curriculum.gravity)}};
  j["env"] = {{"sim_dt", c.env.sim_dt},
              {"decimation", c.env.decimation},
              {"omega_n", c.env.omega_n},
              {"action_scale", vec_to_json(c.env.action_scale)},
              {"episode_length_s", c.env.episode_length_s},
              {"dwell_s", c.env.dwell_s},
              {"accel_clamp", c.env.accel_clamp},
              {"termination",
               {{"d_max", c.env.termination.d_max}, {"theta_max", c.env.termination.theta_max}}},
              {"randomization",
               {{"enabled", c.env.randomization.enabled},
                {"static_friction", {c.env.randomization.static_friction_min,
                                     c.env.randomization.static_friction_max}},
                {"dynamic_friction", {c.env.randomization.dynamic_friction_min,
                                      c.env.randomization.dynamic_friction_max}},
                {"restitution",
                 {c.env.randomization.restitution_min, c.env.randomization.restitution_max}},
                {"mass_scale",
                 {c.env.randomization.mass_scale_min, c.env.randomization.mass_scale_max}},
                {"push_interval_max_s", c.env.randomization.push_interval_max_s},
                {"push_speed", c.env.randomization.push_speed},
                {"noise_ang_vel", c.env.randomization.noise_ang_vel},
                {"noise_gravity", c.env.randomization.noise_gravity},
                {"noise_q", c.env.randomization.noise_q},
                {"noise_qd", c.env.randomization.noise_qd}}}};
  j["rollout"] = {{"episodes", c.rollout.episodes},
                  {"policy", c.rollout.policy},
                  {"trajectory_file", c.rollout.trajectory_file}};
  j["gen_reference"] = {{"duration_s", c.gen_reference.duration_s},
                        {"target_amplitude", c.gen_reference.target_amplitude},
                        {"name", c.gen_reference.name}};
  j["ppo"] = c.ppo.is_null() ? default_ppo() : c.ppo;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.ppo = default_ppo();
  Reader top(j, "config");
  top.get("seed", c.seed);
  top.get("streams", c.streams);
  top.get("out_dir", c.out_dir);
  if (top.has("pla")) {
    Reader r(top.sub("pla"), "pla");
    r.get("sweep_points", c.pla.sweep_points);
    if (r.has("protocol")) {
      Reader pr(r.sub("protocol"), "pla.protocol");
      pr.get("freq_hz", c.pla.protocol.freq_hz);
      pr.get("amplitude_fraction", c.pla.protocol.amplitude_fraction);
      pr.get("duration_s", c.pla.protocol.duration_s);
      pr.get("dt", c.pla.protocol.dt);
      pr.get("kp", c.pla.protocol.kp);
      pr.get("kd", c.pla.protocol.kd);
    }
  }
  if (top.has("actuator")) {
    Reader r(top.sub("actuator"), "actuator");
    r.get("k", c.actuator.params.k);
    r.get("rotor_inertia", c.actuator.params.rotor_inertia);
    r.get("K_c", c.actuator.params.K_c);
    r.get("s", c.actuator.params.s);
    r.get("K_v", c.actuator.params.K_v);
    r.get("eta_plus", c.actuator.params.eta_plus);
    r.get("eta_minus", c.actuator.params.eta_minus);
    r.get("filter_cutoff_hz", c.actuator.params.filter_cutoff_hz);
    r.get("work_hysteresis", c.actuator.params.work_hysteresis);
    if (r.has("eta_plus_range")) {
      const Eigen::VectorXd v =
          vec_from_json(r.sub("eta_plus_range"), "actuator.eta_plus_range", 2);
      c.actuator.eta_plus_min = v(0);
      c.actuator.eta_plus_max = v(1);
    }
    if (r.has("eta_minus_range")) {
      const Eigen::VectorXd v =
          vec_from_json(r.sub("eta_minus_range"), "actuator.eta_minus_range", 2);
      c.actuator.eta_minus_min = v(0);
      c.actuator.eta_minus_max = v(1);
    }
    r.get("power_budget_w", c.actuator.power_budget_w);
    r.get("resistive_coeff", c.actuator.resistive_coeff);
    r.get("idle_power_w", c.actuator.idle_power_w);
    r.get("fit_log", c.actuator.fit_log);
  }
  if (top.has("sampler")) {
    Reader r(top.sub("sampler"), "sampler");
    r.get("bin_width", c.sampler.bin_width);
    r.get("alpha", c.sampler.alpha);
    r.get("tau_base", c.sampler.tau_base);
    r.get("epsilon", c.sampler.epsilon);
  }
  if (top.has("sampler_demo")) {
    Reader r(top.sub("sampler_demo"), "sampler_demo");
    r.get("iterations", c.sampler_demo.iterations);
    r.get("snapshot_every", c.sampler_demo.snapshot_every);
    r.get("hard_similarity", c.sampler_demo.hard_similarity);
    r.get("easy_similarity", c.sampler_demo.easy_similarity);
    r.get("score_noise", c.sampler_demo.score_noise);
  }
  if (top.has("curriculum")) {
    Reader r(top.sub("curriculum"), "curriculum");
    r.get("eta", c.curriculum.eta);
    r.get("beta_max", c.curriculum.beta_max);
    r.get("kp_v", c.curriculum.kp_v);
    r.get("kd_v", c.curriculum.kd_v);
    r.get("kp_w", c.curriculum.kp_w);
    r.get("kd_w", c.curriculum.kd_w);
    r.get("mass", c.curriculum.mass);
    if (r.has("inertia")) c.curriculum.inertia = mat3_from_json(r.sub("inertia"), "curriculum.inertia");
    if (r.has("r_com")) c.curriculum.r_com = vec3_from_json(r.sub("r_com"), "curriculum.r_com");
    if (r.has("gravity")) c.curriculum.gravity = vec3_from_json(r.sub("gravity"), "curriculum.gravity");
  }
  if (top.has("env")) {
    Reader r(top.sub("env"), "env");
    r.get("sim_dt", c.env.sim_dt);
    r.get("decimation", c.env.decimation);
    r.get("omega_n", c.env.omega_n);
    if (r.has("action_scale"))
      c.env.action_scale = vec_from_json(r.sub("action_scale"), "env.action_scale");
    r.get("episode_length_s", c.env.episode_length_s);
    r.get("dwell_s", c.env.dwell_s);
    r.get("accel_clamp", c.env.accel_clamp);
    if (r.has("termination")) {
      Reader tr(r.sub("termination"), "env.termination");
      tr.get("d_max", c.env.termination.d_max);
      tr.get("theta_max", c.env.termination.theta_max);
    }
    if (r.has("randomization")) {
      Reader dr(r.sub("randomization"), "env.randomization");
      DomainRandomizationRanges& d = c.env.randomization;
      dr.get("enabled", d.enabled);
      auto range = [&](const char* key, double& lo, double& hi) {
        if (!dr.has(key)) return;
        const Eigen::VectorXd v =
            vec_from_json(dr.sub(key), std::string("env.randomization.") + key, 2);
        lo = v(0);
        hi = v(1);
      };
      range("static_friction", d.static_friction_min, d.static_friction_max);
      range("dynamic_friction", d.dynamic_friction_min, d.dynamic_friction_max);
      range("restitution", d.restitution_min, d.restitution_max);
      range("mass_scale", d.mass_scale_min, d.mass_scale_max);
      dr.get("push_interval_max_s", d.push_interval_max_s);
      dr.get("push_speed", d.push_speed);
      dr.get("noise_ang_vel", d.noise_ang_vel);
      dr.get("noise_gravity", d.noise_gravity);
      dr.get("noise_q", d.noise_q);
      dr.get("noise_qd", d.noise_qd);
    }
  }
  if (top.has("rollout")) {
    Reader r(top.sub("rollout"), "rollout");
    r.get("episodes", c.rollout.episodes);
    r.get("policy", c.rollout.policy);
    r.get("trajectory_file", c.rollout.trajectory_file);
  }
  if (top.has("gen_reference")) {
    Reader r(top.sub("gen_reference"), "gen_reference");
    r.get("duration_s", c.gen_reference.duration_s);
    r.get("target_amplitude", c.gen_reference.target_amplitude);
    r.get("name", c.gen_reference.name);
  }
  if (top.has("ppo")) {
    const json& p = top.sub("ppo");
    if (!p.is_object()) throw ConfigError("ppo: expected a JSON object");
    for (const auto& [key, value] : p.items())
      if (!c.ppo.contains(key)) throw ConfigError("ppo: unknown key \"" + key + "\"");
    c.ppo.update(p);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(cfg).dump(2) << "\n";
}

json trajectory_to_json(const ReferenceTrajectory& traj) {
  json j;
  j["dt"] = traj.dt;
  j["name"] = traj.name;
  json frames = json::array();
  for (const RefFrame& f : traj.frames) {
    json kb = json::array();
    for (const KeybodyPose& k : f.keybodies)
      kb.push_back({{"pos", vec_to_json(k.pos)}, {"quat", quat_to_json(k.quat)}});
    json frame = {{"base_pos", vec_to_json(f.base_pos)},
                  {"base_quat", quat_to_json(f.base_quat)},
                  {"base_linvel", vec_to_json(f.base_lin_vel)},
                  {"base_angvel", vec_to_json(f.base_ang_vel)},
                  {"q", vec_to_json(f.q)},
                  {"keybodies", kb}};
    if (f.qd.size() == f.q.size()) frame["qd"] = vec_to_json(f.qd);
    frames.push_back(std::move(frame));
  }
  j["frames"] = std::move(frames);
  return j;
}

ReferenceTrajectory trajectory_from_json(const json& j) {
  ReferenceTrajectory traj;
  Reader top(j, "trajectory");
  top.get("dt", traj.dt);
  top.get("name", traj.name);
  if (traj.dt <= 0.0) throw ConfigError("trajectory: dt must be > 0");
  if (!top.has("frames")) throw ConfigError("trajectory: missing frames");
  const json& frames = top.sub("frames");
  if (!frames.is_array() || frames.empty()) throw ConfigError("trajectory: frames must be a non-empty array");
  for (const json& fj : frames) {
    Reader fr(fj, "trajectory.frame");
    RefFrame f;
    f.base_pos = vec3_from_json(fr.sub("base_pos"), "frame.base_pos");
    f.base_quat = quat_from_json(fr.sub("base_quat"), "frame.base_quat");
    f.base_lin_vel = vec3_from_json(fr.sub("base_linvel"), "frame.base_linvel");
    f.base_ang_vel = vec3_from_json(fr.sub("base_angvel"), "frame.base_angvel");
    f.q = vec_from_json(fr.sub("q"), "frame.q");
    if (fr.has("qd")) {
      f.qd = vec_from_json(fr.sub("qd"), "frame.qd");
      if (f.qd.size() != f.q.size())
        throw ConfigError("trajectory: frame qd/q size mismatch");
    }
    if (fr.has("keybodies")) {
      for (const json& kj : fr.sub("keybodies")) {
        Reader kr(kj, "frame.keybody");
        KeybodyPose k;
        k.pos = vec3_from_json(kr.sub("pos"), "keybody.pos");
        k.quat = quat_from_json(kr.sub("quat"), "keybody.quat");
        f.keybodies.push_back(k);
      }
    }
    if (!traj.frames.empty() &&
        (f.q.size() != traj.frames.front().q.size() ||
         f.keybodies.size() != traj.frames.front().keybodies.size()))
      throw ConfigError("trajectory: inconsistent frame dimensions");
    traj.frames.push_back(std::move(f));
  }
  return traj;
}

ReferenceTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("trajectory parse error: " + std::string(e.what()));
  }
  return trajectory_from_json(j);
}

void save_trajectory(const ReferenceTrajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << trajectory_to_json(traj).dump() << "\n";
}

CsvWriter::CsvWriter(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("CsvWriter: row width mismatch");
  rows_.push_back(cells);
}

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string CsvWriter::num(long long v) {
  return std::to_string(v);
}

std::string CsvWriter::str() const {
  std::ostringstream out;
  out << "# schema: " << schema_ << "\n";
  for (size_t i = 0; i < columns_.size(); ++i)
    out << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
  for (const auto& r : rows_)
    for (size_t i = 0; i < r.size(); ++i) out << r[i] << (i + 1 < r.size() ? "," : "\n");
  return out.str();
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
}

}  // namespace mimiclab
