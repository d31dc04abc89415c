#pragma once

// Trajectory ingestion, synthesis and slicing.
//
// Trajectory files are comma-separated text:
//
//   # cascadegp-trajectory/1 rate=10 dof=6
//   t,q_1,...,q_N,qd_1,...,qdd_1,...,tau_1,...,tau_N
//   0,0.1,...
//
// The SARCOS files are headerless rows of 28 numbers (7 positions, 7
// velocities, 7 accelerations, 7 torques), comma- or whitespace-separated.

#include "cascadegp/features.hpp"
#include "cascadegp/kinchain.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace cascadegp::data {

inline constexpr const char* kTrajectoryFormat = "cascadegp-trajectory/1";
inline constexpr double kSarcosRate = 50.0;
inline constexpr int kSarcosDof = 7;

struct RawTrajectory {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows x columns
  double rate = 0.0;       // Hz
  std::string meta;

  int rows() const { return static_cast<int>(values.rows()); }
  int dof() const;
  int column_index(const std::string& name) const;  // throws when absent
  bool has_column(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;
  /// rows x dof block of the columns prefix_1..prefix_N.
  Eigen::MatrixXd block(const std::string& prefix) const;
  void validate() const;
};

std::vector<std::string> standard_columns(int dof);

/// Builds a trajectory with the standard column set from T x N blocks.
RawTrajectory make_trajectory(const Eigen::VectorXd& t, const Eigen::MatrixXd& q, const Eigen::MatrixXd& qd,
                              const Eigen::MatrixXd& qdd, const Eigen::MatrixXd& tau, double rate,
                              std::string meta = {});

RawTrajectory load_sarcos(const std::string& path);
RawTrajectory parse_sarcos(const std::string& text, const std::string& source = "<memory>");

RawTrajectory load_trajectory(const std::string& path);
void save_trajectory(const RawTrajectory& traj, const std::string& path);

/// Keeps every floor(rate / target_hz)-th row.
RawTrajectory subsample(const RawTrajectory& traj, double target_hz);

RawTrajectory slice(const RawTrajectory& traj, int begin, int count);

struct SplitSpec {
  int n_subsets = 1;
  double test_fraction = 0.1;  // 0: the test set comes from a separate file

  void validate() const;
};

struct Split {
  std::vector<RawTrajectory> subsets;
  RawTrajectory test;
};

/// Contiguous, disjoint training chunks covering the head of the trajectory;
/// the test set is the tail.
Split split(const RawTrajectory& traj, const SplitSpec& spec);

struct SineExcitationSpec {
  int sines_per_joint = 3;
  double amplitude_min = 0.1;  // rad/s
  double amplitude_max = 0.5;
  double frequency_min = 0.05;  // Hz
  double frequency_max = 0.4;
  double duration = 60.0;  // s
  double rate = 10.0;      // Hz of the emitted rows
  std::uint64_t seed = 0;
  double torque_noise_fraction = 0.0;  // noise std as a fraction of each joint's torque std
  Eigen::VectorXd viscous_friction;    // per joint, empty = none
  Eigen::VectorXd q0;                  // initial posture, empty = zeros

  void validate(int dof) const;
};

/// Joint velocities are sums of sinusoids; positions and accelerations come
/// from the closed-form integral and derivative, torques from RNEA (plus the
/// optional friction and noise).
RawTrajectory generate_sine_dataset(const kin::KinematicChain& chain, const SineExcitationSpec& spec);

struct Derivatives {
  Eigen::MatrixXd velocity;
  Eigen::MatrixXd acceleration;
};

/// Central differences on optionally moving-average-smoothed positions
/// (T x N); one-sided at the endpoints.
Derivatives differentiate(const Eigen::MatrixXd& positions, double rate, int smoothing_window = 1);

/// FNV-1a over column names and raw values, hex encoded.
std::string fingerprint(const RawTrajectory& traj);

/// Samples with (M + 1)-point position histories where M rows of past exist.
std::vector<feat::Sample> to_samples(const RawTrajectory& traj, int history = 0);

/// Reference serial arms used by the synthetic experiments (dof 1..7).
kin::KinematicChain synthetic_arm(int dof);

/// Two-link planar arm in the x-y plane, rotating about z, gravity along -y.
/// lc1/lc2 are the COM distances from each joint; izz the rod-like inertias.
kin::KinematicChain planar_two_link(double m1, double m2, double l1, double lc1, double lc2, double izz1 = 0.0,
                                    double izz2 = 0.0, double gravity = 9.81);

}  // namespace cascadegp::data
