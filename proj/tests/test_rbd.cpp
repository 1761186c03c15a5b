#include "doctest.h"
#include "oracles.hpp"

using namespace mimiclab;
using namespace mimiclab::test;

TEST_CASE("pendulum mass matrix is m*l^2") {
  const ChainModel c = make_pendulum(1.0, 1.0);
  const Eigen::MatrixXd M = mass_matrix(c, Eigen::VectorXd::Zero(1));
  CHECK(M(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mass matrix symmetric and positive definite") {
  const ChainModel c = make_two_link();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd q(2);
    q << u(rng), u(rng);
    const Eigen::MatrixXd M = mass_matrix(c, q);
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("mass matrix matches Lagrangian energy oracle") {
  const ChainModel c = make_two_link();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd q(2);
    q << u(rng), u(rng);
    const Eigen::MatrixXd M = mass_matrix(c, q);
    const Eigen::MatrixXd M_ref = lagrangian_mass(c, q);
    CHECK((M - M_ref).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("bias forces: trivial cases") {
  ChainModel c = make_two_link(Vec3::Zero());
  CHECK(bias_forces(c, Eigen::VectorXd::Constant(2, 0.4), Eigen::VectorXd::Zero(2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const ChainModel pend = make_pendulum();
  Eigen::VectorXd q(1), qd(1);
  q << M_PI / 2.0;
  qd << 0.0;
  CHECK(bias_forces(pend, q, qd)(0) == doctest::Approx(9.81).epsilon(1e-9));
}

TEST_CASE("bias forces match finite-difference Lagrangian oracle") {
  const ChainModel c = make_two_link();
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd q(2), qd(2);
    q << u(rng), u(rng);
    qd << u(rng), u(rng);
    const Eigen::VectorXd h = bias_forces(c, q, qd);
    const Eigen::VectorXd h_ref = lagrangian_bias(c, q, qd);
    // oracle accuracy is limited by the nested finite differences
    CHECK((h - h_ref).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("forward dynamics residual and trivial cases") {
  const ChainModel c = make_two_link();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd q(2), qd(2), tau(2);
    q << u(rng), u(rng);
    qd << u(rng), u(rng);
    tau << u(rng), u(rng);
    BodyWrench w;
    w.link = 1;
    w.force = Vec3(u(rng), u(rng), u(rng));
    w.moment = Vec3(u(rng), u(rng), u(rng));
    const Eigen::VectorXd qdd = forward_dynamics(c, q, qd, tau, {w});

    const ForwardKinematics fk = forward_kinematics(c, q);
    const Eigen::MatrixXd J = point_jacobian(c, fk, w.link, Vec3::Zero());
    const Eigen::VectorXd res = mass_matrix(c, q) * qdd + bias_forces(c, q, qd) - tau -
                                J.topRows<3>().transpose() * w.force -
                                J.bottomRows<3>().transpose() * w.moment;
    CHECK(res.cwiseAbs().maxCoeff() < 1e-8);

    // tau = h, no wrench -> zero acceleration
    const Eigen::VectorXd qdd0 = forward_dynamics(c, q, qd, bias_forces(c, q, qd));
    CHECK(qdd0.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("pendulum at rest with unit torque") {
  const ChainModel c = make_pendulum(1.0, 1.0, Vec3::Zero());
  Eigen::VectorXd q(1), qd(1), tau(1);
  q << 0.0;
  qd << 0.0;
  tau << 1.0;
  CHECK(forward_dynamics(c, q, qd, tau)(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("semi-implicit Euler: velocity then position") {
  const ChainModel c = make_pendulum();
  RobotState s;
  s.q = Eigen::VectorXd::Zero(1);
  s.qd = Eigen::VectorXd::Ones(1);
  integrate(c, s, Eigen::VectorXd::Zero(1), 0.004);
  CHECK(s.q(0) == doctest::Approx(0.004).epsilon(1e-12));

  RobotState z;
  z.q = Eigen::VectorXd::Zero(1);
  z.qd = Eigen::VectorXd::Zero(1);
  integrate(c, z, Eigen::VectorXd::Zero(1), 0.004);
  CHECK(z.q(0) == 0.0);
  CHECK(z.qd(0) == 0.0);
}

TEST_CASE("unforced pendulum energy drift bounded by fine-step reference") {
  const ChainModel c = make_pendulum();
  auto rollout = [&](double dt) {
    RobotState s;
    s.q = Eigen::VectorXd::Constant(1, 1.0);
    s.qd = Eigen::VectorXd::Zero(1);
    const double E0 = total_energy(c, s);
    double max_drift = 0.0;
    const int steps = static_cast<int>(std::round(10.0 / dt));
    for (int k = 0; k < steps; ++k) {
      integrate(c, s, forward_dynamics(c, s.q, s.qd, Eigen::VectorXd::Zero(1)), dt);
      max_drift = std::max(max_drift, std::abs(total_energy(c, s) - E0));
    }
    return max_drift;
  };
  const double drift_coarse = rollout(0.004);
  const double drift_ref = rollout(1e-5);
  CHECK(drift_ref < 1e-3);
  // symplectic Euler stays bounded; envelope measured against the fine run
  CHECK(drift_coarse < 1000.0 * drift_ref + 0.05);
  CHECK(drift_coarse < 0.2);  // absolute envelope, joules
}

TEST_CASE("passivity: dE/dt equals applied power") {
  const ChainModel c = make_two_link();
  RobotState s;
  s.q = Eigen::VectorXd::Constant(2, 0.3);
  s.qd = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::VectorXd tau(2);
  tau << 0.7, -0.4;
  const double dt = 1e-5;
  double E = total_energy(c, s);
  double work = 0.0;
  for (int k = 0; k < 2000; ++k) {
    integrate(c, s, forward_dynamics(c, s.q, s.qd, tau), dt);
    work += tau.dot(s.qd) * dt;
  }
  CHECK(total_energy(c, s) - E == doctest::Approx(work).epsilon(1e-3));
}

TEST_CASE("boxminus basics") {
  std::mt19937 rng(99);
  const Quat a = random_quat(rng);
  CHECK(boxminus(a, a).norm() == 0.0);

  const Quat rz = quat_exp(Vec3(0, 0, 0.3));
  const Vec3 d = boxminus(rz, Quat::Identity());
  CHECK(d.x() == doctest::Approx(0.0));
  CHECK(d.y() == doctest::Approx(0.0));
  CHECK(d.z() == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("boxminus round-trip and bounds") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const Quat a = random_quat(rng);
    const Quat b = random_quat(rng);
    const Vec3 e = boxminus(a, b);
    CHECK(e.norm() <= M_PI + 1e-12);
    const Quat rec = quat_exp(e) * b;
    CHECK(std::abs(std::abs(rec.dot(a)) - 1.0) < 1e-9);
  }
  // antisymmetric under argument swap
  const Quat a = random_quat(rng), b = random_quat(rng);
  CHECK((boxminus(a, b) + boxminus(b, a)).norm() < 1e-9);
}

TEST_CASE("boxminus near pi is stable") {
  const Quat near_pi = quat_exp(Vec3(0, 0, M_PI - 1e-9));
  const Vec3 e = boxminus(near_pi, Quat::Identity());
  CHECK(e.norm() == doctest::Approx(M_PI - 1e-9).epsilon(1e-9));
  CHECK(e.z() > 0.0);
}

TEST_CASE("gravity direction in body frame") {
  CHECK((gravity_in_frame(Quat::Identity()) - Vec3(0, 0, -1)).norm() < 1e-15);

  // 90 deg pitch (about +y): world -z maps to body +x
  const Quat pitch = quat_exp(Vec3(0, M_PI / 2.0, 0));
  CHECK((gravity_in_frame(pitch) - Vec3(1, 0, 0)).norm() < 1e-12);

  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial)
    CHECK(std::abs(gravity_in_frame(random_quat(rng)).norm() - 1.0) < 1e-12);
}

TEST_CASE("quaternion norm preserved by integrate") {
  ChainModel c = make_pendulum();
  Joint fb;
  fb.name = "base";
  fb.type = JointType::FloatingBase;
  fb.parent = -1;
  Link body;
  body.name = "torso";
  body.mass = 5.0;
  body.com = Vec3::Zero();
  body.inertia = 0.1 * Mat3::Identity();
  ChainModel fbc;
  fbc.gravity = Vec3::Zero();
  fbc.links = {body, c.links[0]};
  fbc.joints = {fb, c.joints[0]};
  fbc.joints[1].parent = 0;
  fbc.validate();

  RobotState s;
  s.q = Eigen::VectorXd::Zero(1);
  s.qd = Eigen::VectorXd::Constant(1, 0.3);
  s.base_ang_vel = Vec3(0.5, -0.2, 0.9);
  s.base_lin_vel = Vec3(0.1, 0.0, -0.3);
  for (int k = 0; k < 2500; ++k) {
    const Eigen::VectorXd tau = Eigen::VectorXd::Zero(fbc.nv());
    integrate(fbc, s, forward_dynamics(fbc, s, tau), 0.004);
    CHECK(std::abs(s.base_quat.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("dimension mismatch raises") {
  const ChainModel c = make_two_link();
  CHECK_THROWS(mass_matrix(c, Eigen::VectorXd::Zero(3)));
  CHECK_THROWS(bias_forces(c, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)));
  CHECK_THROWS(
      forward_dynamics(c, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2),
                       Eigen::VectorXd::Zero(1)));
}
