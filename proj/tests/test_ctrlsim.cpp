#include "cascadegp/ctrlsim.hpp"
#include "cascadegp/datasets.hpp"
#include "cascadegp/error.hpp"
#include "support/planar_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace cascadegp;

namespace {

sim::DesiredTrajectory hold(const Eigen::VectorXd& q, double duration) {
  sim::DesiredTrajectory d;
  d.dof = static_cast<int>(q.size());
  d.duration = duration;
  d.at = [q](double) { return kin::JointState{q, Eigen::VectorXd::Zero(q.size()), Eigen::VectorXd::Zero(q.size())}; };
  return d;
}

sim::ControllerConfig gains(int n, double kp, double kd) {
  sim::ControllerConfig c;
  c.kp = Eigen::VectorXd::Constant(n, kp);
  c.kd = Eigen::VectorXd::Constant(n, kd);
  return c;
}

}  // namespace

TEST_SUITE("ctrlsim") {

TEST_CASE("suggested gains use the effective joint inertia") {
  const oracle::Planar2R arm{1.3, 0.8, 0.7, 0.31, 0.22, 0.021, 0.012, 9.81};
  const auto chain = data::planar_two_link(arm.m1, arm.m2, arm.l1, arm.lc1, arm.lc2, arm.izz1, arm.izz2, arm.g);
  const Eigen::Vector2d q(0.2, 0.9);
  const Eigen::Matrix2d h = arm.mass(q);
  const double det = h.determinant();
  const Eigen::Vector2d effective(det / h(1, 1), det / h(0, 0));
  Eigen::VectorXd kp, kd;
  const double w = 2.0 * M_PI * 1.5;
  sim::suggested_gains(chain, q, 1.5, 0.7, kp, kd);
  for (int i = 0; i < 2; ++i) {
    CHECK(kp[i] == doctest::Approx(w * w * effective[i]).epsilon(1e-10));
    CHECK(kd[i] == doctest::Approx(2.0 * 0.7 * w * effective[i]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(sim::suggested_gains(chain, q, 0.0, 1.0, kp, kd), Error);
}

TEST_CASE("control law") {
  const auto chain = std::make_shared<const kin::KinematicChain>(data::synthetic_arm(3));
  feat::Sample d;
  d.q = Eigen::Vector3d(0.1, 0.2, 0.3);
  d.qd = Eigen::Vector3d(-0.5, 0.4, 0.0);
  d.qdd = Eigen::Vector3d(1.0, -1.0, 2.0);
  auto c = gains(3, 50.0, 5.0);
  c.feedforward = sim::FeedforwardKind::kRbd;
  c.rbd_chain = chain;
  CHECK((sim::control_torque(c, d, d.q, d.qd) - kin::rnea(*chain, d.q, d.qd, d.qdd)).norm() < 1e-14);

  c.feedforward = sim::FeedforwardKind::kNone;
  const Eigen::Vector3d q(0.0, 0.2, 0.5), qd(0.0, 0.0, 1.0);
  const Eigen::Vector3d expected = 50.0 * (d.q - q) + 5.0 * (d.qd - qd);
  CHECK((sim::control_torque(c, d, q, qd) - expected).norm() < 1e-14);

  c.kp[1] = -1.0;
  CHECK_THROWS_AS(c.validate(3), Error);
  c = gains(3, 1.0, 1.0);
  c.feedforward = sim::FeedforwardKind::kLearned;
  CHECK_THROWS_AS(c.validate(3), Error);
  CHECK(sim::feedforward_from_string("model") == sim::FeedforwardKind::kLearned);
  CHECK_THROWS_AS(sim::feedforward_from_string("magic"), Error);
}

TEST_CASE("exact feedforward without feedback tracks open loop") {
  const kin::KinematicChain plant = data::synthetic_arm(3);
  sim::SineTrajectorySpec spec;
  spec.duration = 0.1;
  spec.seed = 3;
  const auto desired = sim::sine_trajectory(3, spec);
  auto c = gains(3, 0.0, 0.0);
  c.feedforward = sim::FeedforwardKind::kRbd;
  c.rbd_chain = std::make_shared<const kin::KinematicChain>(plant);
  sim::SimOptions o;
  o.dt = 1e-4;
  o.control_period = 1e-4;
  const auto trace = sim::simulate(plant, c, desired, o);
  CHECK(!trace.diverged);
  CHECK(trace.error().cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("gravity feedforward holds a static posture") {
  const kin::KinematicChain plant = data::synthetic_arm(6);
  const Eigen::VectorXd q0 = (Eigen::VectorXd(6) << 0.2, 0.6, -0.4, 0.3, 0.5, -0.2).finished();
  Eigen::VectorXd kp, kd;
  sim::suggested_gains(plant, q0, 2.0, 1.0, kp, kd);
  sim::ControllerConfig c;
  c.kp = kp;
  c.kd = kd;
  c.feedforward = sim::FeedforwardKind::kRbd;
  c.rbd_chain = std::make_shared<const kin::KinematicChain>(plant);
  const auto trace = sim::simulate(plant, c, hold(q0, 10.0));
  CHECK(trace.rows() == 10001);
  CHECK(trace.error().cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rk4 energy drift shrinks with the fourth power of dt") {
  const double m = 1.5, lc = 0.4, izz = 0.02, g = 9.81;
  kin::RigidLink link{m, Eigen::Vector3d(lc, 0, 0), Eigen::Vector3d(0, izz, izz).asDiagonal()};
  const kin::KinematicChain pendulum({link}, {kin::JointSpec{}}, Eigen::Vector3d(0, -g, 0));
  auto energy = [&](double q, double qd) { return 0.5 * (izz + m * lc * lc) * qd * qd + m * g * lc * std::sin(q); };
  auto drift = [&](double dt) {
    sim::SimOptions o;
    o.dt = dt;
    o.control_period = dt;
    const auto trace = sim::simulate(pendulum, gains(1, 0.0, 0.0), hold(Eigen::VectorXd::Constant(1, 1.0), 3.0), o);
    const double e0 = energy(trace.q(0, 0), trace.qd(0, 0));
    const double e1 = energy(trace.q(trace.rows() - 1, 0), trace.qd(trace.rows() - 1, 0));
    return std::abs(e1 - e0);
  };
  const double coarse = drift(0.02), fine = drift(0.01);
  CHECK(coarse > 0.0);
  CHECK(coarse / fine > 10.0);
  CHECK(coarse / fine < 40.0);
}

TEST_CASE("simulation is deterministic and flags divergence") {
  const kin::KinematicChain plant = data::synthetic_arm(2);
  sim::SineTrajectorySpec spec;
  spec.duration = 2.0;
  const auto desired = sim::sine_trajectory(2, spec);
  const auto a = sim::simulate(plant, gains(2, 20.0, 2.0), desired);
  const auto b = sim::simulate(plant, gains(2, 20.0, 2.0), desired);
  CHECK(a.q == b.q);
  CHECK(a.tau == b.tau);
  CHECK(a.rows() == 2001);
  CHECK(a.t[1] == doctest::Approx(1e-3));
  // The torque is held for 25 steps between controller ticks.
  CHECK(a.tau.row(1) == a.tau.row(24));
  CHECK(a.tau.row(25) != a.tau.row(24));

  const auto unstable = sim::simulate(plant, gains(2, 1e6, 1e4), desired);
  CHECK(unstable.diverged);
  CHECK(unstable.rows() < 2001);
  CHECK(unstable.q.allFinite());
}

TEST_CASE("derivative-free feedforward falls back until the history fills") {
  const kin::KinematicChain plant = data::synthetic_arm(2);
  data::SineExcitationSpec data_spec;
  data_spec.duration = 10.0;
  learn::LearnerConfig lc;
  lc.gp.restarts = 1;
  const auto model = learn::train(learn::variant_from_name("NP-DF"),
                                  learn::TrainingSet::from_trajectory(data::generate_sine_dataset(plant, data_spec), 2),
                                  nullptr, lc);
  auto c = gains(2, 20.0, 2.0);
  c.feedforward = sim::FeedforwardKind::kLearned;
  c.model = std::make_shared<const learn::InverseDynamicsModel>(model);
  sim::SineTrajectorySpec spec;
  spec.duration = 1.0;
  const auto desired = sim::sine_trajectory(2, spec);
  CHECK_THROWS_AS(sim::simulate(plant, c, desired), Error);
  c.rbd_chain = std::make_shared<const kin::KinematicChain>(plant);
  const auto trace = sim::simulate(plant, c, desired);
  CHECK(trace.fallback_count == 8);  // ticks at 0, 0.025, ..., 0.175 s
  CHECK(!trace.diverged);
}

TEST_CASE("trajectory generators") {
  sim::SineTrajectorySpec spec;
  spec.q0 = Eigen::Vector3d(0.1, -0.2, 0.3);
  const auto sine = sim::sine_trajectory(3, spec);
  CHECK((sine.at(0.0).q - spec.q0).norm() < 1e-15);
  const double h = 1e-5;
  const auto s = sine.at(1.3);
  CHECK(((sine.at(1.3 + h).q - sine.at(1.3 - h).q) / (2 * h) - s.qd).norm() < 1e-7);
  CHECK(((sine.at(1.3 + h).qd - sine.at(1.3 - h).qd) / (2 * h) - s.qdd).norm() < 1e-6);

  sim::PickTiltSpec pt;
  pt.home = Eigen::Vector3d::Zero();
  pt.pick = Eigen::Vector3d(0.5, 0.4, 0.0);
  const auto task = sim::pick_tilt_return(pt);
  CHECK(task.duration == doctest::Approx(4 * 1.5 + 3 * 0.5));
  CHECK(task.at(0.0).q.norm() == 0.0);
  CHECK((task.at(1.5).q - pt.pick).norm() < 1e-12);
  CHECK(task.at(1.5 + 0.5 + 1.5).q[2] == doctest::Approx(1.2));
  CHECK(task.at(task.duration).q.norm() < 1e-12);
  CHECK(task.at(task.duration).qd.norm() == 0.0);
  CHECK(task.at(0.75).qd.norm() > 0.0);

  const auto early = sim::desired_sample(sine, 0.05, 0.1, 2);
  CHECK(!early.has_history(2));
  const auto later = sim::desired_sample(sine, 0.25, 0.1, 2);
  REQUIRE(later.has_history(2));
  CHECK((later.q_history.col(2) - sine.at(0.05).q).norm() < 1e-15);
}

}
