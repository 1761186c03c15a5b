#pragma once

#include "mimiclab/io.hpp"
#include "mimiclab/mechanisms.hpp"

namespace mimiclab {

/// Table-S2-style protocol over the shipped mechanisms -> eval_pla.csv.
void cmd_eval_pla(const ExperimentConfig& cfg);

/// Polytope vertices over the ankle pitch-roll workspace -> torque_polytope.csv.
void cmd_torque_polytope(const ExperimentConfig& cfg);

/// Adaptive-sampler time series under a synthetic difficulty profile
/// (one persistently hard bin) -> sampler_demo.csv.
void cmd_sampler_demo(const ExperimentConfig& cfg);

/// N scripted-policy episodes over parallel streams -> episodes.csv,
/// steps.csv, summary.csv. All writes happen after the streams join.
void cmd_rollout(const ExperimentConfig& cfg);

/// Efficiency identification from a CSV log -> spot_fit.json.
void cmd_fit_spot(const ExperimentConfig& cfg, const std::string& log_path);

/// Self-consistent reference from a scripted torque rollout -> <name>.json.
void cmd_gen_reference(const ExperimentConfig& cfg);

/// The gen-reference rollout as a pure function (also drives its tests):
/// forward-simulates the toy plant under deterministic sinusoidal torques.
ReferenceTrajectory generate_reference(const ExperimentConfig& cfg);

/// Parses an actuator log CSV with columns t, tau_in, omega, alpha, tau_out.
std::vector<ActuatorLogSample> load_actuator_log(const std::filesystem::path& path);

}  // namespace mimiclab
