#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimiclab/actuator.hpp"
#include "mimiclab/curriculum.hpp"
#include "mimiclab/env.hpp"
#include "mimiclab/linkage.hpp"
#include "mimiclab/sampler.hpp"
#include "mimiclab/trajectory.hpp"

namespace mimiclab {

/// Bad or inconsistent configuration input; maps to process exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Diverged or non-finite numerics; maps to process exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlaConfig {
  EvalProtocol protocol;
  int sweep_points = 21;  // per axis in the polytope sweep
};

struct ActuatorConfig {
  ActuatorParams params;
  double eta_plus_min = 0.80, eta_plus_max = 0.95;    // training randomization range
  double eta_minus_min = 0.65, eta_minus_max = 0.85;
  double power_budget_w = 1000.0;
  double resistive_coeff = -1.0;  // < 0: derived from K_v
  double idle_power_w = 0.0;
  std::string fit_log;            // CSV: t, tau_in, omega, alpha, tau_out
};

struct SamplerDemoConfig {
  int iterations = 4000;
  int snapshot_every = 200;
  double hard_similarity = 0.30;  // persistent score of the hard bin
  double easy_similarity = 0.95;
  double score_noise = 0.02;
};

struct RolloutConfig {
  int episodes = 8;
  std::string policy = "zero-residual";
  std::string trajectory_file;
};

struct GenRefConfig {
  double duration_s = 4.0;
  double target_amplitude = 0.15;  // rad, scripted sinusoidal joint targets
  std::string name = "toy-swing";
};

struct ExperimentConfig {
  unsigned long long seed = 0;
  int streams = 1;
  std::string out_dir = "out";
  PlaConfig pla;
  ActuatorConfig actuator;
  SamplerParams sampler;
  SamplerDemoConfig sampler_demo;
  CurriculumParams curriculum;
  EnvConfig env;
  RolloutConfig rollout;
  GenRefConfig gen_reference;
  nlohmann::json ppo;  // stored optimizer constants; nothing here consumes them

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Rejects unknown keys at any nesting level; round-trips through to_json.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

nlohmann::json trajectory_to_json(const ReferenceTrajectory& traj);
ReferenceTrajectory trajectory_from_json(const nlohmann::json& j);
ReferenceTrajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const ReferenceTrajectory& traj, const std::filesystem::path& path);

/// Versioned-schema CSV: a `# schema: <name>` comment line, the header row,
/// then data rows with round-trip double formatting.
class CsvWriter {
 public:
  CsvWriter(std::string schema, std::vector<std::string> columns);
  void row(const std::vector<std::string>& cells);
  void write(const std::filesystem::path& path) const;
  std::string str() const;

  static std::string num(double v);
  static std::string num(long long v);

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace mimiclab
