#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mimiclab/commands.hpp"
#include "mimiclab/env.hpp"
#include "mimiclab/mechanisms.hpp"

namespace py = pybind11;
using namespace mimiclab;

namespace {

/// BinTable plus an owned RNG, so python callers get stateful sampling.
struct PySampler {
  BinTable table;
  std::mt19937_64 rng;

  PySampler(const std::vector<double>& durations, const std::vector<int>& lengths,
            double bin_width, double alpha, double tau_base, double epsilon, unsigned seed)
      : rng(seed) {
    if (durations.size() != lengths.size())
      throw std::invalid_argument("durations and lengths must have equal size");
    std::vector<TrajectoryMeta> metas;
    for (size_t i = 0; i < durations.size(); ++i)
      metas.push_back({static_cast<int>(i), durations[i], lengths[i],
                       "traj-" + std::to_string(i)});
    table = build_bins(metas, SamplerParams{bin_width, alpha, tau_base, epsilon});
  }
};

}  // namespace

PYBIND11_MODULE(_mimiclab, m) {
  m.doc() = "desk-scale motion-imitation training infrastructure";

  // --- actuator ---
  m.def("saturate", &saturate, py::arg("tau_in"), py::arg("k"));
  m.def(
      "power_limit",
      [](const Eigen::VectorXd& tau, const Eigen::VectorXd& omega, double budget, double r,
         double idle) {
        const PowerLimitResult res = power_limit(tau, omega, budget, r, idle);
        return py::make_tuple(res.tau, res.scale, res.infeasible);
      },
      py::arg("tau"), py::arg("omega"), py::arg("budget"), py::arg("r"),
      py::arg("idle_power") = 0.0);
  m.def(
      "fit_efficiency",
      [](const Eigen::VectorXd& tau_in, const Eigen::VectorXd& omega,
         const Eigen::VectorXd& alpha, const Eigen::VectorXd& tau_out, double k,
         double rotor_inertia, double K_c, double s, double K_v) {
        std::vector<ActuatorLogSample> log;
        for (int i = 0; i < tau_in.size(); ++i)
          log.push_back({0.0, tau_in(i), omega(i), alpha(i), tau_out(i)});
        ActuatorParams p;
        p.k = k;
        p.rotor_inertia = rotor_inertia;
        p.K_c = K_c;
        p.s = s;
        p.K_v = K_v;
        const EfficiencyFit fit = fit_efficiency(log, p);
        return py::make_tuple(fit.eta_plus, fit.eta_minus, fit.residual_rms);
      },
      py::arg("tau_in"), py::arg("omega"), py::arg("alpha"), py::arg("tau_out"),
      py::arg("k") = 0.0, py::arg("rotor_inertia") = 0.0, py::arg("K_c") = 0.0,
      py::arg("s") = 10.0, py::arg("K_v") = 0.0);

  // --- mechanisms / PLA models ---
  py::class_<Mechanism>(m, "Mechanism")
      .def("transmission",
           [](const Mechanism& mech, const Eigen::VectorXd& q_o) {
             const TransmissionMaps maps =
                 transmission_jacobians(mech.main, mech.linkage, q_o);
             return py::make_tuple(maps.gamma_d, maps.gamma_i);
           })
      .def("torque_polytope",
           [](const Mechanism& mech, const Eigen::VectorXd& q_o) {
             return torque_polytope(mech.main, mech.linkage, q_o, mech.linkage.tau_i_min,
                                    mech.linkage.tau_i_max)
                 .vertices;
           })
      .def("exact_accel",
           [](const Mechanism& mech, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
              const Eigen::VectorXd& tau_i) {
             return exact_projected_dynamics(mech.main, mech.linkage, q, qd, tau_i);
           })
      .def("evaluate_model_errors", [](const Mechanism& mech) {
        std::vector<py::tuple> rows;
        for (const ModelErrorRow& r :
             evaluate_model_errors(mech.main, mech.linkage, EvalProtocol{}))
          rows.push_back(py::make_tuple(r.model, r.joint, r.normalized_mse, r.diverged));
        return rows;
      });
  m.def("make_gear_linkage", &make_gear_linkage, py::arg("ratio") = 1.0,
        py::arg("armature") = 0.1);
  m.def("make_four_bar_knee", &make_four_bar_knee, py::arg("support_mass") = 0.08);
  m.def("make_coupled_ankle", &make_coupled_ankle, py::arg("support_mass") = 0.33);

  // --- sampler ---
  py::class_<PySampler>(m, "Sampler")
      .def(py::init<const std::vector<double>&, const std::vector<int>&, double, double,
                    double, double, unsigned>(),
           py::arg("durations"), py::arg("lengths"), py::arg("bin_width") = 4.0,
           py::arg("alpha") = 0.005, py::arg("tau_base") = 1.0, py::arg("epsilon") = 0.15,
           py::arg("seed") = 0)
      .def_property_readonly("failure", [](const PySampler& s) { return s.table.failure; })
      .def_property_readonly("visits", [](const PySampler& s) { return s.table.visits; })
      .def_property_readonly("bins", [](const PySampler& s) { return s.table.bins; })
      .def("probabilities", [](const PySampler& s) { return sampling_distribution(s.table); })
      .def("update",
           [](PySampler& s, int i, int b, double sbar) { update_failure(s.table, i, b, sbar); })
      .def("sample", [](PySampler& s) {
        const StartSample st = sample_start(s.table, s.rng);
        return py::make_tuple(st.traj, st.bin, st.t_init, st.phase);
      });
  m.def("episode_similarity", &episode_similarity, py::arg("step_scores"), py::arg("L_max"));

  // --- curriculum ---
  m.def(
      "assistance_scale",
      [](double failure, double eta, double beta_max) {
        CurriculumParams p;
        p.eta = eta;
        p.beta_max = beta_max;
        return assistance_scale(failure, p);
      },
      py::arg("failure"), py::arg("eta") = 0.80, py::arg("beta_max") = 0.60);

  // --- env ---
  m.def(
      "pd_gains",
      [](const Eigen::VectorXd& inertia, double omega_n) {
        const PdGains g = pd_gains(inertia, omega_n);
        return py::make_tuple(g.kp, g.kd);
      },
      py::arg("inertia"), py::arg("omega_n"));
  m.def("apply_action", &apply_action, py::arg("q_ref"), py::arg("action"), py::arg("scale"));
  m.def("project_into_polygon", &project_into_polygon, py::arg("point"), py::arg("vertices"));
}
