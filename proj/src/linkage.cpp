#include "mimiclab/linkage.hpp"

#include <algorithm>
#include <functional>

namespace mimiclab {

namespace {

// Support coordinates that mirror the main-chain parent joints: everything
// not claimed by q_d or q_i, in tree order.
std::vector<int> prefix_coords(const PlaLinkage& lk) {
  std::vector<int> out;
  for (int c = 0; c < lk.support.nj(); ++c) {
    const bool taken =
        std::find(lk.dep_coords.begin(), lk.dep_coords.end(), c) != lk.dep_coords.end() ||
        std::find(lk.act_coords.begin(), lk.act_coords.end(), c) != lk.act_coords.end();
    if (!taken) out.push_back(c);
  }
  return out;
}

Eigen::VectorXd scatter(const Eigen::VectorXd& base, const std::vector<int>& idx,
                        const Eigen::VectorXd& vals) {
  Eigen::VectorXd out = base;
  for (size_t k = 0; k < idx.size(); ++k) out(idx[k]) = vals(k);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (size_t k = 0; k < idx.size(); ++k) out(k) = v(idx[k]);
  return out;
}

Eigen::VectorXd residual_at(const ChainModel& main, const PlaLinkage& lk,
                            const Eigen::VectorXd& q_o, const Eigen::VectorXd& u) {
  return closure_residual(main, lk, q_o, u.head(lk.n_d()), u.tail(lk.n_i()));
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double eps) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (int k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += eps;
    xm(k) -= eps;
    // divide by the step actually realized in floating point
    J.col(k) = (f(xp) - f(xm)) / (xp(k) - xm(k));
  }
  return J;
}

struct SolvedMaps {
  ClosureSolution sol;
  TransmissionMaps maps;
};

SolvedMaps jacobians_at(const ChainModel& main, const PlaLinkage& lk,
                        const Eigen::VectorXd& q_o, const ClosureSolution* warm) {
  SolvedMaps out;
  out.sol = solve_loop_closure(main, lk, q_o, warm);
  Eigen::VectorXd u(lk.n_d() + lk.n_i());
  u << out.sol.q_d, out.sol.q_i;

  const double eps = 1e-4;  // balances truncation against roundoff in the residual
  const Eigen::MatrixXd Cu = fd_jacobian(
      [&](const Eigen::VectorXd& uu) { return residual_at(main, lk, q_o, uu); }, u, eps);
  const Eigen::MatrixXd Co = fd_jacobian(
      [&](const Eigen::VectorXd& qq) { return residual_at(main, lk, qq, u); }, q_o, eps);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(Cu);
  if (!lu.isInvertible())
    throw std::runtime_error("transmission_jacobians: transmission singularity");
  const Eigen::MatrixXd X = lu.solve(-Co);  // rows: [q_d; q_i] sensitivities

  out.maps.gamma_d = X.topRows(lk.n_d());
  out.maps.gamma_i = X.bottomRows(lk.n_i());

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(lk.support.nj(), main.nj());
  const std::vector<int> prefix = prefix_coords(lk);
  for (size_t k = 0; k < prefix.size(); ++k) G(prefix[k], lk.parent_coords[k]) = 1.0;
  for (int j = 0; j < lk.n_d(); ++j)
    for (int c = 0; c < lk.n_o(); ++c)
      G(lk.dep_coords[j], lk.output_coords[c]) = out.maps.gamma_d(j, c);
  for (int j = 0; j < lk.n_i(); ++j)
    for (int c = 0; c < lk.n_o(); ++c)
      G(lk.act_coords[j], lk.output_coords[c]) = out.maps.gamma_i(j, c);
  out.maps.G = G;
  return out;
}

Eigen::MatrixXd armature_diag(const PlaLinkage& lk) {
  return lk.armature.asDiagonal();
}

// Shared scaffolding of the approximate models: main-chain M and h plus the
// torque vector with tau_o = Gamma_i^T tau_i at the output coordinates.
struct LadderTerms {
  Eigen::MatrixXd M;
  Eigen::VectorXd rhs;  // tau - h so far
  TransmissionMaps maps;
  ClosureSolution sol;
};

LadderTerms ladder_terms(const ChainModel& main, const PlaLinkage& lk,
                         const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                         const Eigen::VectorXd& tau_i, const Eigen::VectorXd& tau_p) {
  if (main.floating_base())
    throw std::invalid_argument("pla dynamics: pinned main chains only");
  if (q.size() != main.nj() || qd.size() != main.nj())
    throw std::invalid_argument("pla dynamics: state dimension mismatch");
  if (tau_i.size() != lk.n_i())
    throw std::invalid_argument("pla dynamics: tau_i dimension mismatch");
  if (tau_p.size() != 0 && tau_p.size() != lk.n_p())
    throw std::invalid_argument("pla dynamics: tau_p dimension mismatch");

  LadderTerms t;
  const Eigen::VectorXd q_o = gather(q, lk.output_coords);
  SolvedMaps sm = jacobians_at(main, lk, q_o, nullptr);
  t.maps = std::move(sm.maps);
  t.sol = std::move(sm.sol);

  t.M = mass_matrix(main, q);
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(main.nj());
  const Eigen::VectorXd tau_o = map_actuator_torque(t.maps.gamma_i, tau_i);
  for (int c = 0; c < lk.n_o(); ++c) tau(lk.output_coords[c]) += tau_o(c);
  if (tau_p.size() > 0)
    for (int c = 0; c < lk.n_p(); ++c) tau(lk.parent_coords[c]) += tau_p(c);
  t.rhs = tau - bias_forces(main, q, qd);
  return t;
}

Eigen::VectorXd local_bias_h0(const ChainModel& main, const PlaLinkage& lk,
                              const Eigen::VectorXd& q_o, const Eigen::VectorXd& qd_o,
                              const TransmissionMaps& maps, const ClosureSolution& sol) {
  const TransmissionRates rates = transmission_rates(main, lk, q_o, qd_o, &sol);
  return maps.gamma_i.transpose() * (armature_diag(lk) * (rates.gamma_i_dot * qd_o));
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("pla dynamics: mass matrix factorization failed");
  return ldlt.solve(rhs);
}

}  // namespace

void PlaLinkage::validate(const ChainModel& main) const {
  main.validate();
  support.validate();
  if (main.floating_base() || support.floating_base())
    throw std::invalid_argument("PlaLinkage: floating bases are not supported");
  if (static_cast<int>(armature.size()) != n_i())
    throw std::invalid_argument("PlaLinkage: armature size must match q_i");
  if ((armature.array() <= 0.0).any())
    throw std::invalid_argument("PlaLinkage: armature entries must be positive");
  if (static_cast<int>(prefix_coords(*this).size()) != n_p())
    throw std::invalid_argument("PlaLinkage: support prefix must mirror parent coords");
  int rows = 0;
  for (const ClosureEquation& c : closures)
    rows += c.kind == ClosureEquation::Kind::Coincidence
                ? static_cast<int>(c.projection.rows())
                : 1;
  if (rows != n_d() + n_i())
    throw std::invalid_argument("PlaLinkage: closure equation count != dim(q_d)+dim(q_i)");
  if (q_o_nom.size() != n_o() || q_d_nom.size() != n_d() || q_i_nom.size() != n_i())
    throw std::invalid_argument("PlaLinkage: nominal configuration dimension mismatch");
  const Eigen::VectorXd c0 = closure_residual(main, *this, q_o_nom, q_d_nom, q_i_nom);
  if (c0.cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("PlaLinkage: closure not satisfied at q_nom");
}

Eigen::VectorXd closure_residual(const ChainModel& main, const PlaLinkage& lk,
                                 const Eigen::VectorXd& q_o, const Eigen::VectorXd& q_d,
                                 const Eigen::VectorXd& q_i) {
  if (q_o.size() != lk.n_o() || q_d.size() != lk.n_d() || q_i.size() != lk.n_i())
    throw std::invalid_argument("closure_residual: dimension mismatch");

  // Parent joints drop out of the residual (rigid motion of both attachment
  // sides), so they are held at zero here.
  const Eigen::VectorXd qm =
      scatter(Eigen::VectorXd::Zero(main.nj()), lk.output_coords, q_o);
  Eigen::VectorXd qs = Eigen::VectorXd::Zero(lk.support.nj());
  qs = scatter(qs, lk.dep_coords, q_d);
  qs = scatter(qs, lk.act_coords, q_i);

  const ForwardKinematics fkm = forward_kinematics(main, qm);
  const ForwardKinematics fks = forward_kinematics(lk.support, qs);

  Eigen::VectorXd c(lk.n_d() + lk.n_i());
  int row = 0;
  for (const ClosureEquation& eq : lk.closures) {
    if (eq.kind == ClosureEquation::Kind::Gear) {
      c(row++) = q_i(eq.gear_actuated) - eq.gear_ratio * q_o(eq.gear_output);
      continue;
    }
    Vec3 d = fks.point_world(eq.support_link, eq.support_point) -
             fkm.point_world(eq.main_link, eq.main_point);
    if (eq.frame_link >= 0) d = fkm.R[eq.frame_link].transpose() * d;
    if (eq.kind == ClosureEquation::Kind::Coincidence) {
      c.segment(row, eq.projection.rows()) = eq.projection * d;
      row += static_cast<int>(eq.projection.rows());
    } else {
      c(row++) = (d.squaredNorm() - eq.rod_length * eq.rod_length) / (2.0 * eq.rod_length);
    }
  }
  return c;
}

ClosureSolution solve_loop_closure(const ChainModel& main, const PlaLinkage& lk,
                                   const Eigen::VectorXd& q_o, const ClosureSolution* warm) {
  const int m = lk.n_d() + lk.n_i();
  Eigen::VectorXd u(m);
  if (warm)
    u << warm->q_d, warm->q_i;
  else
    u << lk.q_d_nom, lk.q_i_nom;

  Eigen::VectorXd c = residual_at(main, lk, q_o, u);
  for (int iter = 0; iter < 50; ++iter) {
    if (c.cwiseAbs().maxCoeff() < 1e-10)
      return {u.head(lk.n_d()), u.tail(lk.n_i())};
    const Eigen::MatrixXd J = fd_jacobian(
        [&](const Eigen::VectorXd& uu) { return residual_at(main, lk, q_o, uu); }, u, 1e-7);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible())
      throw std::runtime_error("solve_loop_closure: singular closure Jacobian");
    const Eigen::VectorXd step = lu.solve(-c);

    double t = 1.0;
    Eigen::VectorXd u_new, c_new;
    while (true) {
      u_new = u + t * step;
      c_new = residual_at(main, lk, q_o, u_new);
      if (c_new.norm() <= (1.0 - 1e-4 * t) * c.norm() || t < 1e-4) break;
      t *= 0.5;
    }
    u = u_new;
    c = c_new;
  }
  throw std::runtime_error("solve_loop_closure: no convergence (workspace violation)");
}

TransmissionMaps transmission_jacobians(const ChainModel& main, const PlaLinkage& lk,
                                        const Eigen::VectorXd& q_o,
                                        const ClosureSolution* warm) {
  return jacobians_at(main, lk, q_o, warm).maps;
}

TransmissionRates transmission_rates(const ChainModel& main, const PlaLinkage& lk,
                                     const Eigen::VectorXd& q_o, const Eigen::VectorXd& qd_o,
                                     const ClosureSolution* warm) {
  TransmissionRates r;
  if (qd_o.norm() == 0.0) {
    r.gamma_d_dot = Eigen::MatrixXd::Zero(lk.n_d(), lk.n_o());
    r.gamma_i_dot = Eigen::MatrixXd::Zero(lk.n_i(), lk.n_o());
    return r;
  }
  const double eps = 1e-6;
  const ClosureSolution center = warm ? *warm : solve_loop_closure(main, lk, q_o, nullptr);
  const SolvedMaps plus = jacobians_at(main, lk, q_o + eps * qd_o, &center);
  const SolvedMaps minus = jacobians_at(main, lk, q_o - eps * qd_o, &center);
  r.gamma_d_dot = (plus.maps.gamma_d - minus.maps.gamma_d) / (2.0 * eps);
  r.gamma_i_dot = (plus.maps.gamma_i - minus.maps.gamma_i) / (2.0 * eps);
  return r;
}

Eigen::VectorXd map_actuator_torque(const Eigen::MatrixXd& gamma_i,
                                    const Eigen::VectorXd& tau_i) {
  if (gamma_i.rows() != tau_i.size())
    throw std::invalid_argument("map_actuator_torque: dimension mismatch");
  return gamma_i.transpose() * tau_i;
}

Eigen::VectorXd exact_projected_dynamics(const ChainModel& main, const PlaLinkage& lk,
                                         const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                         const Eigen::VectorXd& tau_i,
                                         const Eigen::VectorXd& tau_p) {
  LadderTerms t = ladder_terms(main, lk, q, qd, tau_i, tau_p);
  const Eigen::VectorXd q_o = gather(q, lk.output_coords);
  const Eigen::VectorXd qd_o = gather(qd, lk.output_coords);

  Eigen::VectorXd qs = Eigen::VectorXd::Zero(lk.support.nj());
  const std::vector<int> prefix = prefix_coords(lk);
  for (size_t k = 0; k < prefix.size(); ++k) qs(prefix[k]) = q(lk.parent_coords[k]);
  qs = scatter(qs, lk.dep_coords, t.sol.q_d);
  qs = scatter(qs, lk.act_coords, t.sol.q_i);
  const Eigen::VectorXd qds = t.maps.G * qd;

  Eigen::MatrixXd M_S = mass_matrix(lk.support, qs);
  for (int j = 0; j < lk.n_i(); ++j)
    M_S(lk.act_coords[j], lk.act_coords[j]) += lk.armature(j);
  const Eigen::VectorXd h_S = bias_forces(lk.support, qs, qds);

  const TransmissionRates rates = transmission_rates(main, lk, q_o, qd_o, &t.sol);
  Eigen::VectorXd gdot_u = Eigen::VectorXd::Zero(lk.support.nj());
  const Eigen::VectorXd gd = rates.gamma_d_dot * qd_o;
  const Eigen::VectorXd gi = rates.gamma_i_dot * qd_o;
  for (int j = 0; j < lk.n_d(); ++j) gdot_u(lk.dep_coords[j]) = gd(j);
  for (int j = 0; j < lk.n_i(); ++j) gdot_u(lk.act_coords[j]) = gi(j);

  const Eigen::MatrixXd M = t.M + t.maps.G.transpose() * M_S * t.maps.G;
  const Eigen::VectorXd rhs =
      t.rhs - t.maps.G.transpose() * (h_S + M_S * gdot_u);
  return solve_spd(M, rhs);
}

Eigen::VectorXd locally_projected_dynamics(const ChainModel& main, const PlaLinkage& lk,
                                           const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                           const Eigen::VectorXd& tau_i,
                                           const Eigen::VectorXd& tau_p) {
  LadderTerms t = ladder_terms(main, lk, q, qd, tau_i, tau_p);
  const Eigen::VectorXd q_o = gather(q, lk.output_coords);
  const Eigen::VectorXd qd_o = gather(qd, lk.output_coords);
  const Eigen::MatrixXd M_o =
      t.maps.gamma_i.transpose() * armature_diag(lk) * t.maps.gamma_i;
  const Eigen::VectorXd h_0 = local_bias_h0(main, lk, q_o, qd_o, t.maps, t.sol);

  Eigen::MatrixXd M = t.M;
  Eigen::VectorXd rhs = t.rhs;
  for (int a = 0; a < lk.n_o(); ++a) {
    rhs(lk.output_coords[a]) -= h_0(a);
    for (int b = 0; b < lk.n_o(); ++b)
      M(lk.output_coords[a], lk.output_coords[b]) += M_o(a, b);
  }
  return solve_spd(M, rhs);
}

Eigen::VectorXd dynamic_armature_step(const ChainModel& main, const PlaLinkage& lk,
                                      const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                      const Eigen::VectorXd& tau_i,
                                      const Eigen::VectorXd& qdd_o_prev,
                                      const Eigen::VectorXd& tau_p) {
  if (qdd_o_prev.size() != lk.n_o())
    throw std::invalid_argument("dynamic_armature_step: qdd_o_prev dimension mismatch");
  LadderTerms t = ladder_terms(main, lk, q, qd, tau_i, tau_p);
  const Eigen::VectorXd q_o = gather(q, lk.output_coords);
  const Eigen::VectorXd qd_o = gather(qd, lk.output_coords);
  const Eigen::MatrixXd M_o =
      t.maps.gamma_i.transpose() * armature_diag(lk) * t.maps.gamma_i;
  const Eigen::MatrixXd D_o = M_o.diagonal().asDiagonal();
  const Eigen::MatrixXd O_o = M_o - D_o;
  const Eigen::VectorXd h_0 = local_bias_h0(main, lk, q_o, qd_o, t.maps, t.sol);
  const Eigen::VectorXd fict = h_0 + O_o * qdd_o_prev;

  Eigen::MatrixXd M = t.M;
  Eigen::VectorXd rhs = t.rhs;
  for (int a = 0; a < lk.n_o(); ++a) {
    rhs(lk.output_coords[a]) -= fict(a);
    M(lk.output_coords[a], lk.output_coords[a]) += D_o(a, a);
  }
  return solve_spd(M, rhs);
}

ArmatureDecomposition nominal_armature(const ChainModel& main, const PlaLinkage& lk) {
  const TransmissionMaps maps = transmission_jacobians(main, lk, lk.q_o_nom);
  ArmatureDecomposition d;
  d.M_o = maps.gamma_i.transpose() * armature_diag(lk) * maps.gamma_i;
  d.D_o = d.M_o.diagonal().asDiagonal();
  d.O_o = d.M_o - d.D_o;
  return d;
}

Eigen::VectorXd nominal_armature_dynamics(const ChainModel& main, const PlaLinkage& lk,
                                          const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                          const Eigen::VectorXd& tau_i,
                                          const Eigen::VectorXd& qdd_o_prev,
                                          const Eigen::VectorXd& tau_p) {
  if (qdd_o_prev.size() != lk.n_o())
    throw std::invalid_argument("nominal_armature_dynamics: qdd_o_prev dimension mismatch");
  LadderTerms t = ladder_terms(main, lk, q, qd, tau_i, tau_p);
  const Eigen::VectorXd q_o = gather(q, lk.output_coords);
  const Eigen::VectorXd qd_o = gather(qd, lk.output_coords);
  const ArmatureDecomposition nom = nominal_armature(main, lk);
  const Eigen::VectorXd h_0 = local_bias_h0(main, lk, q_o, qd_o, t.maps, t.sol);
  const Eigen::VectorXd fict = h_0 + nom.O_o * qdd_o_prev;

  Eigen::MatrixXd M = t.M;
  Eigen::VectorXd rhs = t.rhs;
  for (int a = 0; a < lk.n_o(); ++a) {
    rhs(lk.output_coords[a]) -= fict(a);
    M(lk.output_coords[a], lk.output_coords[a]) += nom.D_o(a, a);
  }
  return solve_spd(M, rhs);
}

Eigen::VectorXd simplest_dynamics(const ChainModel& main, const PlaLinkage& lk,
                                  const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                  const Eigen::VectorXd& tau_i, const Eigen::VectorXd& tau_p) {
  LadderTerms t = ladder_terms(main, lk, q, qd, tau_i, tau_p);
  const ArmatureDecomposition nom = nominal_armature(main, lk);
  Eigen::MatrixXd M = t.M;
  for (int a = 0; a < lk.n_o(); ++a)
    M(lk.output_coords[a], lk.output_coords[a]) += nom.D_o(a, a);
  return solve_spd(M, t.rhs);
}

TorquePolytope torque_polytope(const ChainModel& main, const PlaLinkage& lk,
                               const Eigen::VectorXd& q_o, const Eigen::VectorXd& tau_i_min,
                               const Eigen::VectorXd& tau_i_max) {
  const int n = lk.n_i();
  if (tau_i_min.size() != n || tau_i_max.size() != n)
    throw std::invalid_argument("torque_polytope: box dimension mismatch");
  const TransmissionMaps maps = transmission_jacobians(main, lk, q_o);

  TorquePolytope poly;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(maps.gamma_i);
  poly.degenerate = svd.singularValues().minCoeff() < 1e-9;

  const int corners = 1 << n;
  poly.vertices.resize(corners, lk.n_o());
  for (int mask = 0; mask < corners; ++mask) {
    Eigen::VectorXd corner(n);
    for (int j = 0; j < n; ++j) corner(j) = (mask >> j) & 1 ? tau_i_max(j) : tau_i_min(j);
    poly.vertices.row(mask) = map_actuator_torque(maps.gamma_i, corner).transpose();
  }

  if (lk.n_o() == 2) {
    const Eigen::RowVector2d centroid = poly.vertices.colwise().mean();
    std::vector<int> order(corners);
    for (int k = 0; k < corners; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto da = poly.vertices.row(a) - centroid;
      const auto db = poly.vertices.row(b) - centroid;
      return std::atan2(da(1), da(0)) < std::atan2(db(1), db(0));
    });
    Eigen::MatrixXd sorted(corners, 2);
    for (int k = 0; k < corners; ++k) sorted.row(k) = poly.vertices.row(order[k]);
    poly.vertices = sorted;
  }
  return poly;
}

std::vector<ModelErrorRow> evaluate_model_errors(const ChainModel& main,
                                                 const PlaLinkage& lk,
                                                 const EvalProtocol& protocol) {
  const int n = main.nj();
  const int no = lk.n_o();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < no; ++c) q(lk.output_coords[c]) = lk.q_o_nom(c);
  Eigen::VectorXd qd = Eigen::VectorXd::Zero(n);

  Eigen::VectorXd amplitude(no), center(no);
  for (int c = 0; c < no; ++c) {
    const Joint& j = main.joints[lk.output_coords[c]];
    amplitude(c) = protocol.amplitude_fraction * 0.5 * (j.q_max - j.q_min);
    center(c) = lk.q_o_nom(c);
  }

  const std::vector<std::string> names = {"exact", "lpm", "dam", "nam", "simplest"};
  const int n_models = static_cast<int>(names.size());
  std::vector<Eigen::VectorXd> qdd_prev(n_models, Eigen::VectorXd::Zero(no));
  Eigen::MatrixXd sq_err = Eigen::MatrixXd::Zero(n_models, no);
  std::vector<bool> diverged(n_models, false);

  const int steps = static_cast<int>(std::round(protocol.duration_s / protocol.dt));
  int counted = 0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * protocol.dt;
    Eigen::VectorXd q_ref(no);
    for (int c = 0; c < no; ++c)
      q_ref(c) = center(c) +
                 amplitude(c) * std::sin(2.0 * M_PI * protocol.freq_hz * t + c * M_PI / 2.0);

    const Eigen::VectorXd q_o = gather(q, lk.output_coords);
    const Eigen::VectorXd qd_o = gather(qd, lk.output_coords);
    const Eigen::VectorXd tau_o = protocol.kp * (q_ref - q_o) - protocol.kd * qd_o;
    const TransmissionMaps maps = transmission_jacobians(main, lk, q_o);
    const Eigen::VectorXd tau_i =
        maps.gamma_i.transpose().completeOrthogonalDecomposition().solve(tau_o);

    const Eigen::VectorXd qdd_exact = exact_projected_dynamics(main, lk, q, qd, tau_i);
    if (!qdd_exact.allFinite()) {
      for (int m = 0; m < n_models; ++m) diverged[m] = true;
      break;
    }
    const Eigen::VectorXd qdd_exact_o = gather(qdd_exact, lk.output_coords);
    const double nrm = std::max(qdd_exact_o.norm(), 0.1);

    for (int m = 0; m < n_models; ++m) {
      if (diverged[m]) continue;
      Eigen::VectorXd qdd;
      try {
        if (names[m] == "exact")
          qdd = qdd_exact;
        else if (names[m] == "lpm")
          qdd = locally_projected_dynamics(main, lk, q, qd, tau_i);
        else if (names[m] == "dam")
          qdd = dynamic_armature_step(main, lk, q, qd, tau_i, qdd_prev[m]);
        else if (names[m] == "nam")
          qdd = nominal_armature_dynamics(main, lk, q, qd, tau_i, qdd_prev[m]);
        else
          qdd = simplest_dynamics(main, lk, q, qd, tau_i);
      } catch (const std::exception&) {
        diverged[m] = true;
        continue;
      }
      if (!qdd.allFinite()) {
        diverged[m] = true;
        continue;
      }
      const Eigen::VectorXd qdd_o = gather(qdd, lk.output_coords);
      qdd_prev[m] = qdd_o;
      for (int c = 0; c < no; ++c)
        sq_err(m, c) += std::pow((qdd_o(c) - qdd_exact_o(c)) / nrm, 2.0);
    }
    ++counted;

    // advance the exact plant, semi-implicit
    qd += qdd_exact * protocol.dt;
    q += qd * protocol.dt;
  }

  std::vector<ModelErrorRow> rows;
  for (int m = 0; m < n_models; ++m)
    for (int c = 0; c < no; ++c) {
      ModelErrorRow r;
      r.model = names[m];
      r.joint = c;
      r.normalized_mse = counted > 0 ? sq_err(m, c) / counted : 0.0;
      r.diverged = diverged[m];
      rows.push_back(r);
    }
  return rows;
}

}  // namespace mimiclab
