#include "mimiclab/mechanisms.hpp"

namespace mimiclab {

namespace {

Link make_link(const std::string& name, double mass, const Vec3& com, const Vec3& inertia_diag) {
  Link l;
  l.name = name;
  l.mass = mass;
  l.com = com;
  l.inertia = inertia_diag.asDiagonal();
  return l;
}

Joint make_joint(const std::string& name, const Vec3& axis, int parent, const Vec3& xyz,
                 double q_min, double q_max, double tau_lim) {
  Joint j;
  j.name = name;
  j.axis = axis;
  j.parent = parent;
  j.origin_xyz = xyz;
  j.q_min = q_min;
  j.q_max = q_max;
  j.tau_min = -tau_lim;
  j.tau_max = tau_lim;
  return j;
}

Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }

}  // namespace

Mechanism make_gear_linkage(double ratio, double armature) {
  Mechanism m;
  m.main.links = {make_link("shank", 1.0, Vec3(0, 0, -0.2), Vec3(0.01, 0.01, 0.002))};
  m.main.joints = {make_joint("knee", Vec3::UnitY(), -1, Vec3::Zero(), -1.5, 1.5, 40.0)};

  m.linkage.support.gravity = m.main.gravity;
  m.linkage.support.links = {make_link("rotor", 0.0, Vec3::Zero(), Vec3::Zero())};
  m.linkage.support.joints = {
      make_joint("motor", Vec3::UnitY(), -1, Vec3::Zero(), -1e9, 1e9, 20.0)};
  m.linkage.output_coords = {0};
  m.linkage.act_coords = {0};
  m.linkage.armature = Eigen::VectorXd::Constant(1, armature);

  ClosureEquation eq;
  eq.kind = ClosureEquation::Kind::Gear;
  eq.gear_actuated = 0;
  eq.gear_output = 0;
  eq.gear_ratio = ratio;
  m.linkage.closures = {eq};

  m.linkage.q_o_nom = Eigen::VectorXd::Zero(1);
  m.linkage.q_d_nom = Eigen::VectorXd::Zero(0);
  m.linkage.q_i_nom = Eigen::VectorXd::Zero(1);
  m.linkage.tau_i_min = Eigen::VectorXd::Constant(1, -20.0);
  m.linkage.tau_i_max = Eigen::VectorXd::Constant(1, 20.0);
  m.linkage.validate(m.main);
  return m;
}

Mechanism make_four_bar_knee(double support_mass) {
  Mechanism m;
  m.main.links = {
      make_link("thigh", 2.0, Vec3(0.01, 0, -0.2), Vec3(0.02, 0.02, 0.004)),
      make_link("shank", 1.2, Vec3(0.0, 0, -0.18), Vec3(0.012, 0.012, 0.002)),
  };
  m.main.joints = {
      make_joint("hip", Vec3::UnitY(), -1, Vec3::Zero(), -1.5, 1.5, 60.0),
      make_joint("knee", Vec3::UnitY(), 0, Vec3(0, 0, -0.4), -1.1, 0.2, 50.0),
  };
  m.linkage.parent_coords = {0};
  m.linkage.output_coords = {1};

  // crank pivot on the thigh; coupler geometry derived from the nominal pose
  const Vec3 crank_pivot(0.03, 0, -0.24);
  const double crank_len = 0.14;
  const Vec3 shank_attach(0.08, 0, -0.04);  // shank frame
  const double q_o_nom = -0.2, q_i_nom = 0.4;

  const Vec3 crank_tip = crank_pivot + rot_y(q_i_nom) * Vec3(0, 0, -crank_len);
  const Vec3 attach_thigh = Vec3(0, 0, -0.4) + rot_y(q_o_nom) * shank_attach;
  const Vec3 d_crank = rot_y(q_i_nom).transpose() * (attach_thigh - crank_tip);
  const double coupler_len = d_crank.norm();
  const double q_d_nom = std::atan2(-d_crank.x(), -d_crank.z());

  m.linkage.support.gravity = m.main.gravity;
  m.linkage.support.links = {
      make_link("thigh_s", 0.0, Vec3::Zero(), Vec3::Zero()),
      make_link("crank", support_mass, Vec3(0, 0, -crank_len / 2),
                Vec3::Constant(support_mass * crank_len * crank_len / 12.0)),
      make_link("coupler", support_mass, Vec3(0, 0, -coupler_len / 2),
                Vec3::Constant(support_mass * coupler_len * coupler_len / 12.0)),
  };
  m.linkage.support.joints = {
      make_joint("hip_s", Vec3::UnitY(), -1, Vec3::Zero(), -1.5, 1.5, 0.0),
      make_joint("crank", Vec3::UnitY(), 0, crank_pivot, -1e9, 1e9, 16.0),
      make_joint("coupler", Vec3::UnitY(), 1, Vec3(0, 0, -crank_len), -1e9, 1e9, 0.0),
  };
  m.linkage.act_coords = {1};
  m.linkage.dep_coords = {2};
  m.linkage.armature = Eigen::VectorXd::Constant(1, 0.12);

  ClosureEquation eq;
  eq.kind = ClosureEquation::Kind::Coincidence;
  eq.support_link = 2;
  eq.support_point = Vec3(0, 0, -coupler_len);
  eq.main_link = 1;
  eq.main_point = shank_attach;
  eq.frame_link = 0;
  eq.projection.resize(2, 3);
  eq.projection << 1, 0, 0, 0, 0, 1;
  m.linkage.closures = {eq};

  m.linkage.q_o_nom = Eigen::VectorXd::Constant(1, q_o_nom);
  m.linkage.q_d_nom = Eigen::VectorXd::Constant(1, q_d_nom);
  m.linkage.q_i_nom = Eigen::VectorXd::Constant(1, q_i_nom);
  m.linkage.tau_i_min = Eigen::VectorXd::Constant(1, -16.0);
  m.linkage.tau_i_max = Eigen::VectorXd::Constant(1, 16.0);
  m.linkage.validate(m.main);
  return m;
}

Mechanism make_coupled_ankle(double support_mass) {
  // Geometry tuned so the Table-S2-style model ladder is well ordered while
  // M_o stays diagonally dominant over the whole workspace.
  Mechanism m;
  m.main.links = {
      make_link("ankle_cross", 0.1, Vec3::Zero(), Vec3::Constant(1e-4)),
      make_link("foot", 0.8, Vec3(0.05, 0, -0.03), Vec3(0.002, 0.004, 0.004)),
  };
  m.main.joints = {
      make_joint("ankle_pitch", Vec3::UnitY(), -1, Vec3::Zero(), -0.105, 0.105, 45.0),
      make_joint("ankle_roll", Vec3::UnitX(), 0, Vec3::Zero(), -0.26, 0.26, 45.0),
  };
  m.linkage.output_coords = {0, 1};

  // Two motor levers on the shin (world frame), pushrods down to the foot.
  // Left/right asymmetry keeps the projected armature coupled.
  const Vec3 pivot[2] = {Vec3(-0.088, 0.05, 0.211), Vec3(-0.108, -0.05, 0.156)};
  const double lever_len[2] = {0.073, 0.140};
  const Vec3 foot_attach[2] = {Vec3(-0.007, 0.05, -0.0067), Vec3(-0.061, -0.05, -0.0072)};
  const double q_i_nom[2] = {-0.27, -0.29};

  m.linkage.support.gravity = m.main.gravity;
  m.linkage.q_o_nom = Eigen::VectorXd::Zero(2);
  m.linkage.q_d_nom = Eigen::VectorXd::Zero(0);
  m.linkage.q_i_nom = Eigen::VectorXd(2);

  for (int s = 0; s < 2; ++s) {
    m.linkage.support.links.push_back(make_link(
        s == 0 ? "lever_l" : "lever_r", support_mass, Vec3(lever_len[s] / 2, 0, 0),
        Vec3::Constant(support_mass * lever_len[s] * lever_len[s] / 12.0)));
    m.linkage.support.joints.push_back(make_joint(
        s == 0 ? "motor_l" : "motor_r", Vec3::UnitY(), -1, pivot[s], -1e9, 1e9, 14.0));
    m.linkage.act_coords.push_back(s);
    m.linkage.q_i_nom(s) = q_i_nom[s];

    const Vec3 tip = pivot[s] + rot_y(q_i_nom[s]) * Vec3(lever_len[s], 0, 0);
    ClosureEquation eq;
    eq.kind = ClosureEquation::Kind::RodLength;
    eq.support_link = s;
    eq.support_point = Vec3(lever_len[s], 0, 0);
    eq.main_link = 1;
    eq.main_point = foot_attach[s];
    eq.frame_link = -1;
    eq.rod_length = (tip - foot_attach[s]).norm();  // q_o_nom = 0: foot frame = world
    m.linkage.closures.push_back(eq);
  }
  m.linkage.armature = Eigen::VectorXd(2);
  m.linkage.armature << 0.023, 0.047;
  m.linkage.tau_i_min = Eigen::VectorXd::Constant(2, -14.0);
  m.linkage.tau_i_max = Eigen::VectorXd::Constant(2, 14.0);
  m.linkage.validate(m.main);
  return m;
}

}  // namespace mimiclab
