#pragma once

// Run configuration: an INI file with [dataset], [variant], [gp],
// [experiment] and [sim] sections. Every key is optional; unknown keys are
// rejected.

#include "cascadegp/learner.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cascadegp::cfg {

inline constexpr const char* kOutputRootVariable = "CASCADEGP_OUTPUT_ROOT";

struct DatasetSection {
  std::string source = "synthetic";  // synthetic | sarcos | file
  std::string path;                  // sarcos/file: training data
  std::string test_path;             // separate test file (test_fraction = 0)
  std::string chain;                 // chain INI; synthetic default: the built-in arm
  int dof = 6;
  double duration = 60.0;
  double rate = 10.0;
  std::uint64_t seed = 0;
  int sines = 3;
  double amplitude_min = 0.1;
  double amplitude_max = 0.5;
  double frequency_min = 0.05;
  double frequency_max = 0.4;
  double noise_fraction = 0.0;
  double friction = 0.0;      // viscous coefficient applied to every joint
  double payload_mass = 0.0;  // added to the last link of the generating plant only
  std::vector<double> payload_com = {0.0, 0.0, 0.05};
  double subsample_hz = 0.0;  // 0 keeps the native rate
  int n_subsets = 1;
  double test_fraction = 0.1;
};

struct VariantSection {
  std::vector<std::string> names = {"NP"};
  int history = 2;
  std::string df_mean = "finite_difference";  // finite_difference | dataset
};

struct GpSection {
  int restarts = 10;
  int max_iterations = 1000;
  double grad_tol = 1e-5;
  double objective_change_tol = 2e-9;
  double log_bound = 10.0;
  bool ard = true;
  int max_points = 500;
  std::uint64_t seed = 0;
  bool chain_predictions = false;
};

struct ExperimentSection {
  std::vector<double> durations;  // empty: log grid from grid_first to the subset length
  int grid_points = 10;
  double grid_first = 1.0;
  std::vector<double> summary_marks = {2.0, 5.0, 10.0};
  int n_points = 500;
  int iter_restarts = 10;
  std::vector<int> joints;  // iters: empty = all
  std::string output_dir = "results";
};

struct SimSection {
  double dt = 1e-3;
  double control_period = 0.025;
  double duration = -1.0;  // < 0: the trajectory's own duration
  std::string trajectory = "sine";  // sine | pick_tilt_return
  std::uint64_t seed = 0;
  int sines = 2;
  double amplitude_min = 0.1;
  double amplitude_max = 0.3;
  double frequency_min = 0.1;
  double frequency_max = 0.5;
  double trajectory_duration = 10.0;
  std::vector<double> home;  // empty: zeros
  std::vector<double> pick;  // empty: home
  int tilt_joint = 0;
  double tilt_angle = 1.2;
  double move_time = 1.5;
  double hold_time = 0.5;
  std::vector<double> kp;  // empty: from bandwidth_hz / damping at the start posture
  std::vector<double> kd;
  double bandwidth_hz = 2.0;
  double damping = 1.0;
  std::string feedforward = "rbd";  // none | rbd | model
  std::string model;                // bundle directory for feedforward = model
  double payload_mass = 0.0;        // added to the plant's last link
  std::vector<double> payload_com = {0.0, 0.0, 0.05};
};

struct Config {
  DatasetSection dataset;
  VariantSection variant;
  GpSection gp;
  ExperimentSection experiment;
  SimSection sim;

  static Config parse(const std::string& text, const std::string& source = "<memory>");
  static Config load(const std::string& path);

  /// Every effective value, in INI form; the hash is taken over this text.
  std::string canonical() const;
  std::string hash() const;

  std::vector<learn::ModelVariant> variants() const;
  learn::LearnerConfig learner() const;
};

/// The output root from CASCADEGP_OUTPUT_ROOT, or the current directory.
std::filesystem::path output_root();

/// `dir` as is when absolute, else under output_root().
std::filesystem::path resolve_output(const std::string& dir);

}  // namespace cascadegp::cfg
