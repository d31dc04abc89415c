#pragma once

// PD plus feedforward torque control closed around a forward-dynamics
// simulation of the plant.

#include "cascadegp/features.hpp"
#include "cascadegp/kinchain.hpp"
#include "cascadegp/learner.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace cascadegp::sim {

enum class FeedforwardKind { kNone, kRbd, kLearned };

std::string to_string(FeedforwardKind kind);
FeedforwardKind feedforward_from_string(const std::string& text);

struct ControllerConfig {
  Eigen::VectorXd kp;  // N*m/rad
  Eigen::VectorXd kd;  // N*m*s/rad
  FeedforwardKind feedforward = FeedforwardKind::kNone;
  std::shared_ptr<const kin::KinematicChain> rbd_chain;       // kRbd, and fallback for kLearned
  std::shared_ptr<const learn::InverseDynamicsModel> model;   // kLearned

  void validate(int dof) const;
};

/// Diagonal gains giving each joint the requested bandwidth and damping ratio
/// against its effective inertia 1 / (H(q)^-1)_ii, the inertia it sees with
/// the other joints free. Scaling by H_ii instead overestimates the stiffness
/// strongly coupled joints can take and destabilises slow control loops.
void suggested_gains(const kin::KinematicChain& chain, const Eigen::VectorXd& q, double bandwidth_hz, double damping,
                     Eigen::VectorXd& kp, Eigen::VectorXd& kd);

/// tau = FF(desired) + kp (q_d - q) + kd (qd_d - qd). `desired` may carry a
/// position history for derivative-free models; when it is too short the RBD
/// chain is used instead and `used_fallback` is set (or a warning logged when
/// it is null).
Eigen::VectorXd control_torque(const ControllerConfig& config, const feat::Sample& desired, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, bool* used_fallback = nullptr);

struct DesiredTrajectory {
  std::function<kin::JointState(double)> at;
  double duration = 0.0;
  int dof = 0;
  std::string label;
};

struct SineTrajectorySpec {
  int sines_per_joint = 2;
  double amplitude_min = 0.1;  // rad
  double amplitude_max = 0.3;
  double frequency_min = 0.1;  // Hz
  double frequency_max = 0.5;
  double duration = 10.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd q0;  // empty = zeros

  void validate(int dof) const;
};

/// q_d(t) = q0 + sum A (sin(2 pi f t + phi) - sin(phi)), so q_d(0) = q0.
DesiredTrajectory sine_trajectory(int dof, const SineTrajectorySpec& spec);

struct PickTiltSpec {
  Eigen::VectorXd home;
  Eigen::VectorXd pick;
  int tilt_joint = 0;  // 1-based; 0 = last joint
  double tilt_angle = 1.2;
  double move_time = 1.5;
  double hold_time = 0.5;

  void validate(int dof) const;
};

/// home -> pick, hold, tilt, hold, untilt, hold, pick -> home; quintic
/// segments with zero boundary velocity and acceleration.
DesiredTrajectory pick_tilt_return(const PickTiltSpec& spec);

/// Desired state at t as a model input; the history (spacing `period`,
/// `history` + 1 columns) is attached only once t >= history * period.
feat::Sample desired_sample(const DesiredTrajectory& desired, double t, double period, int history);

struct SimOptions {
  double dt = 1e-3;
  double control_period = 0.025;
  double duration = -1.0;           // < 0: the trajectory's duration
  double divergence_bound = 1e6;    // |q|, |qd| beyond this count as divergence
};

struct SimTrace {
  Eigen::VectorXd t;
  Eigen::MatrixXd q_desired, qd_desired, qdd_desired;  // T x N
  Eigen::MatrixXd q, qd, tau;                          // T x N
  Eigen::VectorXd rms_error;                           // per joint
  bool diverged = false;
  long fallback_count = 0;

  int rows() const { return static_cast<int>(t.size()); }
  Eigen::MatrixXd error() const { return q_desired - q; }
};

/// Fixed-step RK4 on the plant with the controller held between ticks. The
/// plant starts at the desired state at t = 0.
SimTrace simulate(const kin::KinematicChain& plant, const ControllerConfig& config, const DesiredTrajectory& desired,
                  const SimOptions& options = {});

}  // namespace cascadegp::sim
