#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mimiclab {

struct ActuatorParams {
  double k = 0.01;              // saturation derating, 1/(N*m)
  double rotor_inertia = 0.0;   // reflected, kg*m^2
  double K_c = 0.0;             // Coulomb constant, N*m
  double s = 10.0;              // tanh smoothing, s/rad
  double K_v = 0.0;             // viscous constant, N*m*s/rad
  double eta_plus = 0.9;        // positive-work efficiency
  double eta_minus = 0.75;      // negative-work efficiency
  double filter_cutoff_hz = 100.0;
  double work_hysteresis = 0.01;  // rad/s band where the work sign is held

  void validate() const;
};

/// Magnet-saturation derating: tau / (1 + k |tau|). Odd, monotone, bounded
/// by 1/k.
double saturate(double tau_in, double k);

/// Per-actuator mutable state: the output low-pass and the work-sign
/// hysteresis memory. An instance belongs to a single simulation stream.
struct ActuatorState {
  double filtered = 0.0;
  bool primed = false;
  double work_sign = 1.0;
};

/// Unfiltered model torque. work_sign carries the hysteresis memory across
/// calls; at |omega| below the band the previous sign is kept.
double actuator_torque(double tau_in, double omega, double alpha,
                       const ActuatorParams& params, double& work_sign);

/// Full output: model torque followed by a first-order low-pass at the
/// configured cutoff. The filter primes to the first sample.
double actuator_output(double tau_in, double omega, double alpha,
                       const ActuatorParams& params, ActuatorState& state, double dt);

struct PowerLimitResult {
  Eigen::VectorXd tau;
  double scale = 1.0;
  bool infeasible = false;
};

/// Caps total mechanical power plus resistive losses,
/// sum max(tau_j w_j, 0) + sum r tau_j^2 + idle <= budget, by scaling all
/// torques with one bisection scalar. Under-budget requests pass through
/// untouched, so the operation is idempotent.
PowerLimitResult power_limit(const Eigen::VectorXd& tau, const Eigen::VectorXd& omega,
                             double budget, double r, double idle_power = 0.0);

struct ActuatorLogSample {
  double t = 0.0;
  double tau_in = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double tau_out = 0.0;
};

struct EfficiencyFit {
  double eta_plus = 0.0;
  double eta_minus = 0.0;
  bool plus_fitted = false;
  bool minus_fitted = false;
  double residual_rms = 0.0;
};

/// Per-work-sign least squares on tau_out + friction = eta * (sat(tau_in) -
/// I alpha). Throws when the regression is degenerate (no informative
/// samples at all); a single missing sign class yields a partial fit.
EfficiencyFit fit_efficiency(const std::vector<ActuatorLogSample>& log,
                             const ActuatorParams& params);

}  // namespace mimiclab
