#include "cascadegp/datasets.hpp"
#include "cascadegp/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

using namespace cascadegp;

namespace {

std::string sarcos_rows(int rows) {
  std::ostringstream out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < 28; ++c) out << (c ? "," : "") << 0.01 * (r + 1) * (c % 7 + 1) * (c >= 21 ? 10 * (7 - c % 7) : 1);
    out << "\n";
  }
  return out.str();
}

data::RawTrajectory ramp(int rows, double rate) {
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(rows, 0.0, (rows - 1) / rate);
  Eigen::MatrixXd q(rows, 2);
  q.col(0) = t;
  q.col(1) = -t;
  return data::make_trajectory(t, q, q, q, q, rate, "ramp");
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("sarcos rows map onto the state and torque blocks") {
  const auto traj = data::parse_sarcos(sarcos_rows(4));
  CHECK(traj.rows() == 4);
  CHECK(traj.dof() == 7);
  CHECK(traj.rate == 50.0);
  CHECK(traj.column("q_2")[0] == doctest::Approx(0.02));
  CHECK(traj.column("qd_1")[1] == doctest::Approx(0.02));
  CHECK(traj.column("tau_7")[0] == doctest::Approx(0.07 * 10));
  CHECK(traj.column("t")[3] == doctest::Approx(3.0 / 50.0));
  // Whitespace-separated files load the same.
  std::string spaced = sarcos_rows(2);
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  CHECK(data::parse_sarcos(spaced).values == data::parse_sarcos(sarcos_rows(2)).values);
}

TEST_CASE("sarcos errors name the line and column") {
  std::string text = sarcos_rows(3);
  text += "1,2,3\n";
  try {
    data::parse_sarcos(text, "train.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  std::string bad = sarcos_rows(2);
  const auto first = bad.find(',');
  bad.replace(first + 1, bad.find(',', first + 1) - first - 1, "abc");
  try {
    data::parse_sarcos(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
  CHECK_THROWS_AS(data::load_sarcos("/nonexistent/sarcos.txt"), Error);
}

TEST_CASE("subsampling keeps every k-th row") {
  const auto traj = ramp(50, 50.0);
  const auto sub = data::subsample(traj, 10.0);
  CHECK(sub.rows() == 10);
  CHECK(sub.rate == 10.0);
  CHECK(sub.column("t")[1] == doctest::Approx(5.0 / 50.0));
  CHECK(data::subsample(traj, 50.0).values == traj.values);
  CHECK_THROWS_AS(data::subsample(traj, 100.0), Error);
}

TEST_CASE("contiguous splits") {
  const auto traj = ramp(6000, 10.0);
  const auto parts = data::split(traj, {10, 0.0});
  REQUIRE(parts.subsets.size() == 10);
  for (const auto& s : parts.subsets) CHECK(s.rows() == 600);
  CHECK(parts.test.rows() == 0);

  const auto cut = data::split(traj, {3, 0.1});
  CHECK(cut.test.rows() == 600);
  CHECK(cut.test.column("t")[0] == doctest::Approx(540.0));
  int covered = 0;
  double last_t = -1.0;
  for (const auto& s : cut.subsets) {
    CHECK(s.column("t")[0] > last_t);
    last_t = s.column("t")[s.rows() - 1];
    covered += s.rows();
  }
  CHECK(covered == 5400);
  CHECK(last_t < cut.test.column("t")[0]);
  CHECK_THROWS_AS(data::split(ramp(3, 10.0), {5, 0.1}), Error);
  CHECK_THROWS_AS(data::split(traj, {0, 0.1}), Error);
  CHECK_THROWS_AS(data::split(traj, {1, 1.0}), Error);
}

TEST_CASE("sine excitation satisfies the rigid-body identity") {
  const auto chain = data::synthetic_arm(6);
  data::SineExcitationSpec spec;
  spec.duration = 20.0;
  spec.seed = 4;
  const auto traj = data::generate_sine_dataset(chain, spec);
  CHECK(traj.rows() == 200);
  const auto samples = data::to_samples(traj);
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, (kin::rnea(chain, s.q, s.qd, s.qdd) - s.tau).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-12);
  CHECK(data::generate_sine_dataset(chain, spec).values == traj.values);
  CHECK(data::fingerprint(data::generate_sine_dataset(chain, spec)) == data::fingerprint(traj));
  spec.seed = 5;
  CHECK(data::fingerprint(data::generate_sine_dataset(chain, spec)) != data::fingerprint(traj));

  // Closed-form velocities agree with differentiated positions.
  const auto d = data::differentiate(traj.block("q"), traj.rate);
  CHECK((d.velocity.middleRows(1, 198) - traj.block("qd").middleRows(1, 198)).cwiseAbs().maxCoeff() < 0.05);

  spec.duration = 600.0;
  CHECK(data::generate_sine_dataset(chain, spec).rows() == 6000);
}

TEST_CASE("static posture, noise and friction") {
  const auto chain = data::synthetic_arm(4);
  data::SineExcitationSpec spec;
  spec.amplitude_min = spec.amplitude_max = 0.0;
  spec.duration = 5.0;
  spec.q0 = Eigen::Vector4d(0.1, 0.4, -0.3, 0.2);
  const auto still = data::generate_sine_dataset(chain, spec);
  const Eigen::VectorXd g = kin::gravity_torques(chain, spec.q0);
  for (int r = 0; r < still.rows(); ++r) CHECK((still.block("tau").row(r).transpose() - g).norm() < 1e-12);

  spec.amplitude_min = 0.1;
  spec.amplitude_max = 0.5;
  const auto clean = data::generate_sine_dataset(chain, spec);
  spec.torque_noise_fraction = 0.05;
  spec.viscous_friction = Eigen::Vector4d::Constant(0.3);
  const auto noisy = data::generate_sine_dataset(chain, spec);
  const Eigen::MatrixXd diff = noisy.block("tau") - clean.block("tau") - 0.3 * clean.block("qd");
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd tau = clean.block("tau").col(j) + 0.3 * clean.block("qd").col(j);
    const double sd = std::sqrt((tau.array() - tau.mean()).square().mean());
    const double noise_sd = std::sqrt(diff.col(j).array().square().mean());
    CHECK(noise_sd > 0.03 * sd);
    CHECK(noise_sd < 0.07 * sd);
  }
  CHECK(noisy.block("q") == clean.block("q"));
}

TEST_CASE("numerical differentiation") {
  const int n = 200;
  const double rate = 100.0;
  Eigen::MatrixXd line(n, 1), wave(n, 1), flat = Eigen::MatrixXd::Constant(n, 1, 2.5);
  for (int r = 0; r < n; ++r) {
    line(r, 0) = 3.0 * r / rate;
    wave(r, 0) = std::sin(r / rate);
  }
  const auto dl = data::differentiate(line, rate);
  CHECK((dl.velocity.array() - 3.0).abs().maxCoeff() < 1e-9);
  CHECK(dl.acceleration.middleRows(1, n - 2).cwiseAbs().maxCoeff() < 1e-7);
  const auto dw = data::differentiate(wave, rate);
  double worst = 0.0;
  for (int r = 1; r + 1 < n; ++r) worst = std::max(worst, std::abs(dw.velocity(r, 0) - std::cos(r / rate)));
  const double h = 1.0 / rate;
  CHECK(worst <= h * h / 6.0 * 1.01);
  const auto df = data::differentiate(flat, rate, 5);
  CHECK(df.velocity.cwiseAbs().maxCoeff() == 0.0);
  CHECK(df.acceleration.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(data::differentiate(Eigen::MatrixXd::Zero(2, 1), rate), Error);
}

TEST_CASE("trajectory files round trip") {
  const auto chain = data::synthetic_arm(3);
  data::SineExcitationSpec spec;
  spec.duration = 3.0;
  const auto traj = data::generate_sine_dataset(chain, spec);
  const auto path = std::filesystem::temp_directory_path() / "cascadegp_traj_test.csv";
  data::save_trajectory(traj, path.string());
  const auto back = data::load_trajectory(path.string());
  CHECK(back.names == traj.names);
  CHECK(back.values == traj.values);
  CHECK(back.rate == traj.rate);
  CHECK(data::fingerprint(back) == data::fingerprint(traj));
  std::filesystem::remove(path);
}

TEST_CASE("samples carry newest-first histories") {
  const auto traj = ramp(5, 10.0);
  const auto samples = data::to_samples(traj, 2);
  CHECK(!samples[1].has_history(2));
  REQUIRE(samples[3].has_history(2));
  CHECK(samples[3].q_history(0, 0) == doctest::Approx(0.3));
  CHECK(samples[3].q_history(0, 2) == doctest::Approx(0.1));
}

TEST_CASE("invalid trajectories") {
  auto traj = ramp(5, 10.0);
  traj.values(3, 0) = traj.values(2, 0);
  CHECK_THROWS_AS(traj.validate(), Error);
  CHECK_THROWS_AS(ramp(5, 10.0).column("q_9"), Error);
}

}
