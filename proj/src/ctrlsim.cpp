#include "cascadegp/ctrlsim.hpp"

#include "cascadegp/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace cascadegp::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_state(const Eigen::VectorXd& v, int dof, const char* what) {
  if (v.size() != dof) {
    throw Error(ErrorKind::kDimensionMismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                                   " entries, expected " + std::to_string(dof));
  }
  if (!v.allFinite()) throw Error(ErrorKind::kNonFinite, what);
}

// Quintic blend from a to b over [0, T].
kin::JointState quintic(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double t, double duration) {
  const double u = std::clamp(t / duration, 0.0, 1.0);
  const double s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
  const double ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / duration;
  const double dds = 60.0 * u * (1.0 - 3.0 * u + 2.0 * u * u) / (duration * duration);
  const Eigen::VectorXd delta = b - a;
  return {a + s * delta, ds * delta, dds * delta};
}

}  // namespace

std::string to_string(FeedforwardKind kind) {
  switch (kind) {
    case FeedforwardKind::kNone: return "none";
    case FeedforwardKind::kRbd: return "rbd";
    case FeedforwardKind::kLearned: return "model";
  }
  return "?";
}

FeedforwardKind feedforward_from_string(const std::string& text) {
  if (text == "none") return FeedforwardKind::kNone;
  if (text == "rbd") return FeedforwardKind::kRbd;
  if (text == "model") return FeedforwardKind::kLearned;
  throw Error(ErrorKind::kInvalidArgument, "unknown feedforward source '" + text + "' (none, rbd, model)");
}

void ControllerConfig::validate(int dof) const {
  check_state(kp, dof, "kp");
  check_state(kd, dof, "kd");
  if ((kp.array() < 0.0).any() || (kd.array() < 0.0).any()) throw Error(ErrorKind::kInvalidArgument, "gains must be >= 0");
  if (feedforward == FeedforwardKind::kRbd) {
    if (!rbd_chain) throw Error(ErrorKind::kMissingInput, "rbd feedforward needs a chain");
    if (rbd_chain->dof() != dof) throw Error(ErrorKind::kDimensionMismatch, "feedforward chain dof");
  }
  if (feedforward == FeedforwardKind::kLearned) {
    if (!model) throw Error(ErrorKind::kMissingInput, "model feedforward needs a trained model");
    if (model->dof() != dof) throw Error(ErrorKind::kDimensionMismatch, "feedforward model dof");
  }
}

void suggested_gains(const kin::KinematicChain& chain, const Eigen::VectorXd& q, double bandwidth_hz, double damping,
                     Eigen::VectorXd& kp, Eigen::VectorXd& kd) {
  if (!(bandwidth_hz > 0.0) || !(damping >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "bandwidth > 0, damping >= 0");
  const Eigen::MatrixXd m = kin::mass_matrix(chain, q);
  const Eigen::VectorXd h = m.llt().solve(Eigen::MatrixXd::Identity(m.rows(), m.cols())).diagonal().cwiseInverse();
  const double w = kTwoPi * bandwidth_hz;
  kp = w * w * h;
  kd = 2.0 * damping * w * h;
}

Eigen::VectorXd control_torque(const ControllerConfig& config, const feat::Sample& desired, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, bool* used_fallback) {
  const int n = static_cast<int>(config.kp.size());
  check_state(desired.q, n, "desired q");
  check_state(desired.qd, n, "desired qd");
  check_state(desired.qdd, n, "desired qdd");
  check_state(q, n, "q");
  check_state(qd, n, "qd");
  if (used_fallback) *used_fallback = false;

  Eigen::VectorXd tau = config.kp.cwiseProduct(desired.q - q) + config.kd.cwiseProduct(desired.qd - qd);
  switch (config.feedforward) {
    case FeedforwardKind::kNone:
      break;
    case FeedforwardKind::kRbd:
      tau += kin::rnea(*config.rbd_chain, desired.q, desired.qd, desired.qdd);
      break;
    case FeedforwardKind::kLearned:
      if (config.model->accepts(desired)) {
        tau += config.model->predict(desired);
      } else {
        const kin::KinematicChain* chain = config.rbd_chain ? config.rbd_chain.get() : config.model->chain().get();
        if (!chain) {
          throw Error(ErrorKind::kMissingInput, "model inputs unavailable at t = " + std::to_string(desired.t) +
                                                    " and no rigid-body chain to fall back on");
        }
        if (used_fallback) {
          *used_fallback = true;
        } else {
          spdlog::warn("model inputs unavailable at t = {}; using rigid-body feedforward", desired.t);
        }
        tau += kin::rnea(*chain, desired.q, desired.qd, desired.qdd);
      }
      break;
  }
  return tau;
}

void SineTrajectorySpec::validate(int dof) const {
  if (sines_per_joint < 1) throw Error(ErrorKind::kInvalidArgument, "sines_per_joint must be >= 1");
  if (!(amplitude_min >= 0.0) || !(amplitude_max >= amplitude_min)) throw Error(ErrorKind::kInvalidArgument, "amplitude range");
  if (!(frequency_min > 0.0) || !(frequency_max >= frequency_min)) throw Error(ErrorKind::kInvalidArgument, "frequency range");
  if (!(duration > 0.0)) throw Error(ErrorKind::kInvalidArgument, "trajectory duration must be > 0");
  if (q0.size() != 0) check_state(q0, dof, "trajectory q0");
}

DesiredTrajectory sine_trajectory(int dof, const SineTrajectorySpec& spec) {
  if (dof < 1) throw Error(ErrorKind::kInvalidArgument, "dof must be >= 1");
  spec.validate(dof);
  const int k = spec.sines_per_joint;
  Eigen::MatrixXd amp(dof, k), freq(dof, k), phase(dof, k);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < dof; ++j) {
    for (int s = 0; s < k; ++s) {
      amp(j, s) = spec.amplitude_min + (spec.amplitude_max - spec.amplitude_min) * unit(rng);
      freq(j, s) = spec.frequency_min + (spec.frequency_max - spec.frequency_min) * unit(rng);
      phase(j, s) = kTwoPi * unit(rng);
    }
  }
  const Eigen::VectorXd q0 = spec.q0.size() ? spec.q0 : Eigen::VectorXd::Zero(dof);

  DesiredTrajectory out;
  out.dof = dof;
  out.duration = spec.duration;
  out.label = "sine(seed=" + std::to_string(spec.seed) + ")";
  out.at = [=](double t) {
    kin::JointState s{q0, Eigen::VectorXd::Zero(dof), Eigen::VectorXd::Zero(dof)};
    for (int j = 0; j < dof; ++j) {
      for (int i = 0; i < k; ++i) {
        const double w = kTwoPi * freq(j, i);
        const double arg = w * t + phase(j, i);
        s.q[j] += amp(j, i) * (std::sin(arg) - std::sin(phase(j, i)));
        s.qd[j] += amp(j, i) * w * std::cos(arg);
        s.qdd[j] -= amp(j, i) * w * w * std::sin(arg);
      }
    }
    return s;
  };
  return out;
}

void PickTiltSpec::validate(int dof) const {
  check_state(home, dof, "pick-tilt home");
  check_state(pick, dof, "pick-tilt pick");
  if (tilt_joint < 0 || tilt_joint > dof) throw Error(ErrorKind::kInvalidArgument, "tilt_joint out of range");
  if (!std::isfinite(tilt_angle)) throw Error(ErrorKind::kNonFinite, "tilt_angle");
  if (!(move_time > 0.0) || !(hold_time >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "move_time > 0, hold_time >= 0");
}

DesiredTrajectory pick_tilt_return(const PickTiltSpec& spec) {
  const int dof = static_cast<int>(spec.home.size());
  if (dof < 1) throw Error(ErrorKind::kInvalidArgument, "pick-tilt home posture is empty");
  spec.validate(dof);
  Eigen::VectorXd tilted = spec.pick;
  tilted[(spec.tilt_joint == 0 ? dof : spec.tilt_joint) - 1] += spec.tilt_angle;

  struct Segment {
    Eigen::VectorXd from, to;
    double duration;
  };
  const std::vector<Segment> segments = {
      {spec.home, spec.pick, spec.move_time}, {spec.pick, spec.pick, spec.hold_time},
      {spec.pick, tilted, spec.move_time},    {tilted, tilted, spec.hold_time},
      {tilted, spec.pick, spec.move_time},    {spec.pick, spec.pick, spec.hold_time},
      {spec.pick, spec.home, spec.move_time},
  };
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;

  DesiredTrajectory out;
  out.dof = dof;
  out.duration = total;
  out.label = "pick-tilt-return";
  out.at = [segments](double t) {
    double start = 0.0;
    for (const auto& s : segments) {
      if (s.duration > 0.0 && t < start + s.duration) return quintic(s.from, s.to, t - start, s.duration);
      start += s.duration;
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(segments.back().to.size());
    return kin::JointState{segments.back().to, zero, zero};
  };
  return out;
}

feat::Sample desired_sample(const DesiredTrajectory& desired, double t, double period, int history) {
  const kin::JointState s = desired.at(t);
  feat::Sample out;
  out.t = t;
  out.q = s.q;
  out.qd = s.qd;
  out.qdd = s.qdd;
  if (history > 0 && period > 0.0 && t - history * period >= -1e-12) {
    out.q_history.resize(desired.dof, history + 1);
    out.q_history.col(0) = s.q;
    for (int k = 1; k <= history; ++k) out.q_history.col(k) = desired.at(t - k * period).q;
  }
  return out;
}

SimTrace simulate(const kin::KinematicChain& plant, const ControllerConfig& config, const DesiredTrajectory& desired,
                  const SimOptions& options) {
  const int n = plant.dof();
  if (desired.dof != n || !desired.at) throw Error(ErrorKind::kDimensionMismatch, "desired trajectory dof differs from plant");
  config.validate(n);
  if (!(options.dt > 0.0)) throw Error(ErrorKind::kInvalidArgument, "dt must be > 0");
  if (!(options.control_period >= options.dt)) throw Error(ErrorKind::kInvalidArgument, "control_period must be >= dt");
  const double duration = options.duration < 0.0 ? desired.duration : options.duration;
  if (!(duration > 0.0)) throw Error(ErrorKind::kInvalidArgument, "simulation duration must be > 0");

  const long steps = std::lround(duration / options.dt);
  const long hold = std::max(1L, std::lround(options.control_period / options.dt));

  // History the learned model needs, at its own sample spacing.
  int history = 0;
  double period = 0.0;
  if (config.feedforward == FeedforwardKind::kLearned && config.model->variant().derivative_free()) {
    history = learn::required_history(config.model->variant(), config.model->df_mean());
    period = config.model->sample_period();
  }

  SimTrace trace;
  const Eigen::Index cap = steps + 1;
  trace.t.resize(cap);
  for (Eigen::MatrixXd* m : {&trace.q_desired, &trace.qd_desired, &trace.qdd_desired, &trace.q, &trace.qd, &trace.tau}) {
    m->resize(cap, n);
  }

  const kin::JointState start = desired.at(0.0);
  Eigen::VectorXd q = start.q;
  Eigen::VectorXd qd = start.qd;
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);

  auto accel = [&](const Eigen::VectorXd& qq, const Eigen::VectorXd& vv) {
    return kin::forward_dynamics(plant, qq, vv, tau);
  };

  Eigen::Index rows = 0;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    const kin::JointState d = desired.at(t);
    if (k % hold == 0) {
      bool fallback = false;
      tau = control_torque(config, desired_sample(desired, t, period, history), q, qd, &fallback);
      if (fallback) ++trace.fallback_count;
    }
    trace.t[rows] = t;
    trace.q_desired.row(rows) = d.q.transpose();
    trace.qd_desired.row(rows) = d.qd.transpose();
    trace.qdd_desired.row(rows) = d.qdd.transpose();
    trace.q.row(rows) = q.transpose();
    trace.qd.row(rows) = qd.transpose();
    trace.tau.row(rows) = tau.transpose();
    ++rows;
    if (k == steps) break;

    try {
      const double h = options.dt;
      const Eigen::VectorXd k1v = accel(q, qd);
      const Eigen::VectorXd k1q = qd;
      const Eigen::VectorXd k2q = qd + 0.5 * h * k1v;
      const Eigen::VectorXd k2v = accel(q + 0.5 * h * k1q, k2q);
      const Eigen::VectorXd k3q = qd + 0.5 * h * k2v;
      const Eigen::VectorXd k3v = accel(q + 0.5 * h * k2q, k3q);
      const Eigen::VectorXd k4q = qd + h * k3v;
      const Eigen::VectorXd k4v = accel(q + h * k3q, k4q);
      q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      qd += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    } catch (const Error& e) {
      spdlog::warn("simulation stopped at t = {}: {}", t, e.what());
      trace.diverged = true;
      break;
    }
    if (!q.allFinite() || !qd.allFinite() || q.cwiseAbs().maxCoeff() > options.divergence_bound ||
        qd.cwiseAbs().maxCoeff() > options.divergence_bound) {
      spdlog::warn("simulation diverged at t = {}", t + options.dt);
      trace.diverged = true;
      break;
    }
  }

  if (rows < cap) {
    trace.t.conservativeResize(rows);
    for (Eigen::MatrixXd* m : {&trace.q_desired, &trace.qd_desired, &trace.qdd_desired, &trace.q, &trace.qd, &trace.tau}) {
      m->conservativeResize(rows, n);
    }
  }
  if (trace.fallback_count > 0) {
    spdlog::warn("{} controller ticks used rigid-body feedforward while model inputs were unavailable",
                 trace.fallback_count);
  }
  trace.rms_error = (trace.error().colwise().squaredNorm() / static_cast<double>(rows)).cwiseSqrt().transpose();
  return trace;
}

}  // namespace cascadegp::sim
