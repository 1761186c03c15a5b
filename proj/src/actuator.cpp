#include "mimiclab/actuator.hpp"

#include <cmath>
#include <stdexcept>

namespace mimiclab {

void ActuatorParams::validate() const {
  if (k < 0.0) throw std::invalid_argument("actuator: k must be >= 0");
  if (rotor_inertia < 0.0) throw std::invalid_argument("actuator: rotor inertia must be >= 0");
  if (K_c < 0.0 || K_v < 0.0) throw std::invalid_argument("actuator: friction constants must be >= 0");
  if (eta_plus <= 0.0 || eta_plus > 1.0 || eta_minus <= 0.0 || eta_minus > 1.0)
    throw std::invalid_argument("actuator: efficiencies must lie in (0, 1]");
  if (filter_cutoff_hz <= 0.0) throw std::invalid_argument("actuator: filter cutoff must be > 0");
}

double saturate(double tau_in, double k) {
  return tau_in / (1.0 + k * std::abs(tau_in));
}

double actuator_torque(double tau_in, double omega, double alpha,
                       const ActuatorParams& p, double& work_sign) {
  const double pre_loss = saturate(tau_in, p.k) - p.rotor_inertia * alpha;
  if (std::abs(omega) >= p.work_hysteresis && pre_loss * omega != 0.0)
    work_sign = pre_loss * omega > 0.0 ? 1.0 : -1.0;
  const double eta = work_sign > 0.0 ? p.eta_plus : p.eta_minus;
  return eta * pre_loss - p.K_c * std::tanh(p.s * omega) - p.K_v * omega;
}

double actuator_output(double tau_in, double omega, double alpha,
                       const ActuatorParams& p, ActuatorState& st, double dt) {
  const double raw = actuator_torque(tau_in, omega, alpha, p, st.work_sign);
  if (!st.primed) {
    st.filtered = raw;
    st.primed = true;
  } else {
    const double rc = 1.0 / (2.0 * M_PI * p.filter_cutoff_hz);
    st.filtered += dt / (dt + rc) * (raw - st.filtered);
  }
  return st.filtered;
}

PowerLimitResult power_limit(const Eigen::VectorXd& tau, const Eigen::VectorXd& omega,
                             double budget, double r, double idle_power) {
  if (budget <= 0.0) throw std::invalid_argument("power_limit: budget must be > 0");
  if (tau.size() != omega.size())
    throw std::invalid_argument("power_limit: dimension mismatch");

  PowerLimitResult out;
  if (idle_power >= budget) {
    out.tau = Eigen::VectorXd::Zero(tau.size());
    out.scale = 0.0;
    out.infeasible = true;
    return out;
  }
  // evaluated on the realized torque vector so that rescaling an already
  // clamped input reproduces it bitwise (idempotence)
  auto power_of = [&](const Eigen::VectorXd& t) {
    double P = idle_power;
    for (int j = 0; j < t.size(); ++j) {
      P += std::max(t(j) * omega(j), 0.0);
      P += r * t(j) * t(j);
    }
    return P;
  };
  if (power_of(tau) <= budget) {
    out.tau = tau;
    return out;
  }
  double lo = 0.0, hi = 1.0;  // power_of(lo * tau) <= budget holds throughout
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (power_of(mid * tau) <= budget ? lo : hi) = mid;
  }
  out.tau = lo * tau;
  out.scale = lo;
  return out;
}

EfficiencyFit fit_efficiency(const std::vector<ActuatorLogSample>& log,
                             const ActuatorParams& p) {
  if (log.empty()) throw std::invalid_argument("fit_efficiency: empty log");

  double sxx[2] = {0.0, 0.0}, sxy[2] = {0.0, 0.0};  // [minus, plus]
  double work_sign = 1.0;
  std::vector<int> cls(log.size());
  std::vector<double> x(log.size()), y(log.size());
  for (size_t n = 0; n < log.size(); ++n) {
    const ActuatorLogSample& d = log[n];
    x[n] = saturate(d.tau_in, p.k) - p.rotor_inertia * d.alpha;
    y[n] = d.tau_out + p.K_c * std::tanh(p.s * d.omega) + p.K_v * d.omega;
    if (std::abs(d.omega) >= p.work_hysteresis && x[n] * d.omega != 0.0)
      work_sign = x[n] * d.omega > 0.0 ? 1.0 : -1.0;
    cls[n] = work_sign > 0.0 ? 1 : 0;
    sxx[cls[n]] += x[n] * x[n];
    sxy[cls[n]] += x[n] * y[n];
  }
  if (sxx[0] == 0.0 && sxx[1] == 0.0)
    throw std::runtime_error("fit_efficiency: degenerate regression (no informative samples)");

  EfficiencyFit fit;
  if (sxx[1] > 0.0) {
    fit.eta_plus = sxy[1] / sxx[1];
    fit.plus_fitted = true;
  }
  if (sxx[0] > 0.0) {
    fit.eta_minus = sxy[0] / sxx[0];
    fit.minus_fitted = true;
  }
  double ss = 0.0;
  int n_used = 0;
  for (size_t n = 0; n < log.size(); ++n) {
    const bool fitted = cls[n] == 1 ? fit.plus_fitted : fit.minus_fitted;
    if (!fitted) continue;
    const double eta = cls[n] == 1 ? fit.eta_plus : fit.eta_minus;
    const double e = eta * x[n] - y[n];
    ss += e * e;
    ++n_used;
  }
  fit.residual_rms = n_used > 0 ? std::sqrt(ss / n_used) : 0.0;
  return fit;
}

}  // namespace mimiclab
