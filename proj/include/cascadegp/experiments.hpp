#pragma once

// Learning curves, interval summaries and optimizer-iteration reports.

#include "cascadegp/datasets.hpp"
#include "cascadegp/kinchain.hpp"
#include "cascadegp/learner.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cascadegp::bench {

struct LearningCurvePoint {
  double duration_s = 0.0;
  int subset_id = 0;
  int joint = 0;  // 1-based
  std::string variant;
  double nrmse = 0.0;
  double fit_iterations = 0.0;   // mean over restarts
  double fit_evaluations = 0.0;  // mean over restarts
  double wall_time_s = 0.0;      // whole-model fit, shared by the joints of a cell
  int rows = 0;
};

struct AggregatePoint {
  std::string variant;
  double duration_s = 0.0;
  int joint = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across subsets, 0 for one subset
  int count = 0;
};

struct ResultTable {
  std::vector<LearningCurvePoint> rows;

  /// nRMSE mean and std across subsets per (variant, duration, joint).
  std::vector<AggregatePoint> aggregate() const;

  /// For each mark t, the per-subset average of the points with duration in
  /// [t - 1, t], then mean and std across subsets. duration_s holds t.
  std::vector<AggregatePoint> interval_summary(const std::vector<double>& marks) const;
};

/// `points` log-spaced durations from `first` to `last` seconds.
std::vector<double> log_duration_grid(double first, double last, int points = 10);

struct CurveOptions {
  learn::LearnerConfig learner;
  std::uint64_t seed = 0;
};

/// Trains on the first duration * rate rows of every subset and scores
/// per-joint nRMSE on `test`.
ResultTable learning_curve(const learn::ModelVariant& variant, const std::vector<data::RawTrajectory>& subsets,
                           const std::vector<double>& durations, const data::RawTrajectory& test,
                           const kin::KinematicChain* chain, const CurveOptions& options);

struct IterationRow {
  std::string variant;
  int joint = 0;
  int feature_dims = 0;
  int points = 0;
  int restarts = 0;
  double mean_iterations = 0.0;
  double mean_evaluations = 0.0;
};

struct IterationOptions {
  int n_points = 500;
  int restarts = 10;
  std::vector<int> joints;  // 1-based; empty = all
  learn::LearnerConfig learner;
};

/// Fits each requested joint GP of each variant on the first n_points usable
/// rows and reports mean optimizer iterations and evaluations over restarts.
std::vector<IterationRow> iterations_report(const std::vector<learn::ModelVariant>& variants,
                                            const data::RawTrajectory& dataset, const kin::KinematicChain* chain,
                                            const IterationOptions& options);

}  // namespace cascadegp::bench
