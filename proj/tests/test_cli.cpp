#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "mimiclab/commands.hpp"

using namespace mimiclab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("mimiclab-cli-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig fast_config(const std::string& tag) {
  ExperimentConfig cfg;
  cfg.out_dir = temp_dir(tag).string();
  cfg.pla.protocol.duration_s = 0.1;  // keep the CLI tests quick
  cfg.pla.sweep_points = 5;
  cfg.sampler_demo.iterations = 1000;
  cfg.sampler_demo.snapshot_every = 100;
  return cfg;
}

}  // namespace

TEST_CASE("csv writer emits the versioned schema header") {
  CsvWriter csv("mimiclab.example.v1", {"a", "b"});
  csv.row({"1", "2"});
  CHECK(csv.str() == "# schema: mimiclab.example.v1\na,b\n1,2\n");
  // round-trip double formatting
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng);
    CHECK(std::stod(CsvWriter::num(v)) == v);
  }
}

TEST_CASE("config round-trips through json") {
  ExperimentConfig cfg;
  cfg.seed = 17;
  cfg.streams = 4;
  cfg.rollout.trajectory_file = "ref.json";
  cfg.actuator.params.K_c = 0.37;
  const nlohmann::json j = to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  CHECK(to_json(back) == j);

  const fs::path dir = temp_dir("cfg");
  save_config(cfg, dir / "cfg.json");
  CHECK(to_json(load_config(dir / "cfg.json")) == j);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
  nlohmann::json j = to_json(ExperimentConfig{});
  j["bogus"] = 1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  nlohmann::json j2 = to_json(ExperimentConfig{});
  j2["env"]["bogus"] = true;
  CHECK_THROWS_AS(config_from_json(j2), ConfigError);
  nlohmann::json j3 = to_json(ExperimentConfig{});
  j3["actuator"]["eta_plus_range"] = {0.8};  // wrong arity
  CHECK_THROWS_AS(config_from_json(j3), ConfigError);
  nlohmann::json j4 = to_json(ExperimentConfig{});
  j4["ppo"]["bogus"] = 1;
  CHECK_THROWS_AS(config_from_json(j4), ConfigError);
}

TEST_CASE("eval-pla writes the pinned header and reruns byte-identically") {
  ExperimentConfig cfg = fast_config("pla-a");
  cmd_eval_pla(cfg);
  const std::string text = slurp(fs::path(cfg.out_dir) / "eval_pla.csv");
  CHECK(text.rfind("# schema: mimiclab.eval-pla.v1\nmechanism,model,joint,normalized_mse,diverged\n",
                   0) == 0);
  const auto rows = parse_csv(text);
  CHECK(rows.size() == 1 + 5 + 2 * 5);  // header + four_bar (1 joint) + ankle (2 joints)

  ExperimentConfig cfg2 = fast_config("pla-b");
  cmd_eval_pla(cfg2);
  CHECK(slurp(fs::path(cfg2.out_dir) / "eval_pla.csv") == text);
}

TEST_CASE("torque-polytope sweep covers the grid deterministically") {
  ExperimentConfig cfg = fast_config("poly-a");
  cmd_torque_polytope(cfg);
  const std::string text = slurp(fs::path(cfg.out_dir) / "torque_polytope.csv");
  CHECK(text.rfind("# schema: mimiclab.torque-polytope.v1\n"
                   "q_pitch,q_roll,vertex,tau_pitch,tau_roll,degenerate\n",
                   0) == 0);
  CHECK(parse_csv(text).size() == 1 + 5 * 5 * 4);  // header + 4 vertices per grid point

  ExperimentConfig cfg2 = fast_config("poly-b");
  cmd_torque_polytope(cfg2);
  CHECK(slurp(fs::path(cfg2.out_dir) / "torque_polytope.csv") == text);
}

TEST_CASE("sampler-demo: pinned header, floor, hard-bin dominance, determinism") {
  ExperimentConfig cfg = fast_config("demo-a");
  cfg.sampler_demo.iterations = 4000;
  cmd_sampler_demo(cfg);
  const std::string text = slurp(fs::path(cfg.out_dir) / "sampler_demo.csv");
  CHECK(text.rfind("# schema: mimiclab.sampler-demo.v1\niter,traj,bin,failure,prob,visits,beta\n",
                   0) == 0);

  const auto rows = parse_csv(text);
  // trailing snapshot: the persistently hard bin (traj 0, bin 1) dominates
  long long last_iter = std::stoll(rows.back()[0]);
  double hard_prob = 0.0, max_prob = 0.0, min_prob = 1.0;
  long long hard_visits = 0, total_visits = 0;
  int omega = 0;
  for (size_t k = 1; k < rows.size(); ++k) {
    if (std::stoll(rows[k][0]) != last_iter) continue;
    ++omega;
    const double p = std::stod(rows[k][4]);
    max_prob = std::max(max_prob, p);
    min_prob = std::min(min_prob, p);
    total_visits += std::stoll(rows[k][5]);
    if (rows[k][1] == "0" && rows[k][2] == "1") {
      hard_prob = p;
      hard_visits = std::stoll(rows[k][5]);
    }
  }
  CHECK(omega == 5);  // durations 2W, 2W, W with bin width W
  CHECK(hard_prob == max_prob);
  CHECK(hard_prob > 1.0 / omega);
  CHECK(hard_visits * omega > total_visits);  // visitation above the uniform share
  CHECK(min_prob >= 0.15 / omega - 1e-12);

  ExperimentConfig cfg2 = fast_config("demo-b");
  cfg2.sampler_demo.iterations = 4000;
  cmd_sampler_demo(cfg2);
  CHECK(slurp(fs::path(cfg2.out_dir) / "sampler_demo.csv") == text);
}

TEST_CASE("gen-reference round-trips bit-exactly and replays") {
  ExperimentConfig cfg = fast_config("ref-a");
  cfg.gen_reference.duration_s = 1.0;
  cmd_gen_reference(cfg);
  const fs::path file = fs::path(cfg.out_dir) / "toy-swing.json";
  const ReferenceTrajectory loaded = load_trajectory(file);
  CHECK(loaded.length() == static_cast<int>(std::lround(1.0 / loaded.dt)));

  // loader round-trip is bit-exact
  save_trajectory(loaded, fs::path(cfg.out_dir) / "again.json");
  CHECK(slurp(fs::path(cfg.out_dir) / "again.json") == slurp(file));

  // replaying the generating rollout reproduces the trajectory
  const ReferenceTrajectory replay = generate_reference(cfg);
  REQUIRE(replay.length() == loaded.length());
  for (int k = 0; k < loaded.length(); ++k) {
    CHECK((replay.frames[k].base_pos - loaded.frames[k].base_pos).norm() < 1e-8);
    CHECK((replay.frames[k].q - loaded.frames[k].q).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("rollout: config checks, tracking quality, multi-stream determinism") {
  ExperimentConfig cfg = fast_config("roll-a");
  CHECK_THROWS_AS(cmd_rollout(cfg), ConfigError);  // missing trajectory file

  cmd_gen_reference(cfg);
  cfg.rollout.trajectory_file = (fs::path(cfg.out_dir) / "toy-swing.json").string();
  cfg.rollout.episodes = 4;
  cfg.streams = 2;

  ExperimentConfig bad = cfg;
  bad.env.sim_dt = 0.005;  // trajectory dt no longer matches the control rate
  CHECK_THROWS_AS(cmd_rollout(bad), ConfigError);

  cmd_rollout(cfg);
  for (const char* f : {"episodes.csv", "steps.csv", "summary.csv"})
    CHECK(fs::exists(fs::path(cfg.out_dir) / f));
  const std::string summary = slurp(fs::path(cfg.out_dir) / "summary.csv");
  CHECK(summary.rfind("# schema: mimiclab.rollout-summary.v1\n"
                      "episodes,mean_sbar,min_sbar,p10_sbar,mean_reward,failures\n",
                      0) == 0);
  const auto rows = parse_csv(summary);
  REQUIRE(rows.size() == 2);
  CHECK(std::stod(rows[1][1]) > 0.99);  // zero-residual mean similarity
  CHECK(rows[1][5] == "0");
  const std::string episodes_text = slurp(fs::path(cfg.out_dir) / "episodes.csv");
  CHECK(episodes_text.rfind("# schema: mimiclab.rollout-episodes.v1\n"
                            "episode,stream,traj,bin,t_init,phase,beta,L_real,L_max,sbar,"
                            "total_reward,termination,reason\n",
                            0) == 0);
  CHECK(slurp(fs::path(cfg.out_dir) / "steps.csv")
            .rfind("# schema: mimiclab.rollout-steps.v1\n"
                   "episode,step,t,r_track,r_reg,r_survival,s_k\n",
                   0) == 0);

  // byte-identical rerun under the same seed, including across streams
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = temp_dir("roll-b").string();
  cmd_rollout(cfg2);
  for (const char* f : {"episodes.csv", "steps.csv", "summary.csv"})
    CHECK(slurp(fs::path(cfg2.out_dir) / f) == slurp(fs::path(cfg.out_dir) / f));

  // a different seed actually changes the sampled starts
  ExperimentConfig cfg3 = cfg;
  cfg3.out_dir = temp_dir("roll-c").string();
  cfg3.seed = cfg.seed + 1;
  cmd_rollout(cfg3);
  CHECK(slurp(fs::path(cfg3.out_dir) / "episodes.csv") != episodes_text);
}

TEST_CASE("fit-spot reads a csv log and writes the identified parameters") {
  ExperimentConfig cfg = fast_config("fit-a");
  CHECK_THROWS_AS(cmd_fit_spot(cfg, ""), ConfigError);  // no log anywhere

  // synthesize a log with the configured model and known efficiencies
  ActuatorParams p = cfg.actuator.params;
  p.eta_plus = 0.87;
  p.eta_minus = 0.72;
  CsvWriter log("mimiclab.actuator-log.v1", {"t", "tau_in", "omega", "alpha", "tau_out"});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double work_sign = 1.0;
  for (int i = 0; i < 400; ++i) {
    const double tau_in = 30.0 * u(rng), omega = 5.0 * u(rng), alpha = 20.0 * u(rng);
    const double tau_out = actuator_torque(tau_in, omega, alpha, p, work_sign);
    log.row({CsvWriter::num(0.01 * i), CsvWriter::num(tau_in), CsvWriter::num(omega),
             CsvWriter::num(alpha), CsvWriter::num(tau_out)});
  }
  const fs::path log_path = fs::path(cfg.out_dir) / "log.csv";
  log.write(log_path);

  cmd_fit_spot(cfg, log_path.string());
  nlohmann::json fit;
  std::ifstream(fs::path(cfg.out_dir) / "spot_fit.json") >> fit;
  CHECK(fit["plus_fitted"].get<bool>());
  CHECK(fit["minus_fitted"].get<bool>());
  CHECK(fit["eta_plus"].get<double>() == doctest::Approx(0.87).epsilon(1e-9));
  CHECK(fit["eta_minus"].get<double>() == doctest::Approx(0.72).epsilon(1e-9));
  CHECK(fit["residual_rms"].get<double>() < 1e-9);

  // degenerate log maps to a numerical failure
  CsvWriter zeros("mimiclab.actuator-log.v1", {"t", "tau_in", "omega", "alpha", "tau_out"});
  for (int i = 0; i < 10; ++i) zeros.row({"0", "0", "0", "0", "0"});
  const fs::path zero_path = fs::path(cfg.out_dir) / "zeros.csv";
  zeros.write(zero_path);
  CHECK_THROWS_AS(cmd_fit_spot(cfg, zero_path.string()), NumericalError);
}

TEST_CASE("config validation catches out-of-range values") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.streams = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.env.decimation = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.pla.sweep_points = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
