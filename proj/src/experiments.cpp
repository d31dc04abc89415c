#include "cascadegp/experiments.hpp"

#include "cascadegp/error.hpp"
#include "cascadegp/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <tuple>

namespace cascadegp::bench {
namespace {

void mean_std(const std::vector<double>& values, double& mean, double& stddev) {
  mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  stddev = 0.0;
  if (values.size() > 1) {
    for (double v : values) stddev += (v - mean) * (v - mean);
    stddev = std::sqrt(stddev / static_cast<double>(values.size() - 1));
  }
}

std::uint64_t cell_seed(std::uint64_t seed, int subset, int duration_index) {
  return seed + 1000003ULL * static_cast<std::uint64_t>(subset) + 10007ULL * static_cast<std::uint64_t>(duration_index);
}

}  // namespace

std::vector<AggregatePoint> ResultTable::aggregate() const {
  std::map<std::tuple<std::string, double, int>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.variant, r.duration_s, r.joint}].push_back(r.nrmse);
  std::vector<AggregatePoint> out;
  for (const auto& [key, values] : groups) {
    AggregatePoint p;
    std::tie(p.variant, p.duration_s, p.joint) = key;
    p.count = static_cast<int>(values.size());
    mean_std(values, p.mean, p.stddev);
    out.push_back(p);
  }
  return out;
}

std::vector<AggregatePoint> ResultTable::interval_summary(const std::vector<double>& marks) const {
  std::vector<AggregatePoint> out;
  for (double mark : marks) {
    // (variant, joint) -> subset -> values in the window
    std::map<std::pair<std::string, int>, std::map<int, std::vector<double>>> groups;
    for (const auto& r : rows) {
      if (r.duration_s >= mark - 1.0 - 1e-9 && r.duration_s <= mark + 1e-9) {
        groups[{r.variant, r.joint}][r.subset_id].push_back(r.nrmse);
      }
    }
    for (const auto& [key, subsets] : groups) {
      std::vector<double> per_subset;
      for (const auto& [subset, values] : subsets) {
        double m = 0.0, s = 0.0;
        mean_std(values, m, s);
        per_subset.push_back(m);
      }
      AggregatePoint p;
      p.variant = key.first;
      p.joint = key.second;
      p.duration_s = mark;
      p.count = static_cast<int>(per_subset.size());
      mean_std(per_subset, p.mean, p.stddev);
      out.push_back(p);
    }
  }
  return out;
}

std::vector<double> log_duration_grid(double first, double last, int points) {
  if (!(first > 0.0) || !(last >= first) || points < 1) {
    throw Error(ErrorKind::kInvalidArgument, "duration grid needs 0 < first <= last and points >= 1");
  }
  if (points == 1) return {last};
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double ratio = std::log(last / first);
  for (int k = 0; k < points; ++k) grid[static_cast<std::size_t>(k)] = first * std::exp(ratio * k / (points - 1));
  grid.back() = last;
  return grid;
}

ResultTable learning_curve(const learn::ModelVariant& variant, const std::vector<data::RawTrajectory>& subsets,
                           const std::vector<double>& durations, const data::RawTrajectory& test,
                           const kin::KinematicChain* chain, const CurveOptions& options) {
  if (subsets.empty()) throw Error(ErrorKind::kInvalidArgument, "learning curve needs at least one subset");
  if (durations.empty()) throw Error(ErrorKind::kInvalidArgument, "learning curve needs at least one duration");
  for (std::size_t k = 0; k < durations.size(); ++k) {
    if (!(durations[k] > 0.0)) throw Error(ErrorKind::kInvalidArgument, "durations must be positive");
    if (k > 0 && durations[k] < durations[k - 1]) throw Error(ErrorKind::kInvalidArgument, "durations must be sorted ascending");
  }

  const int history = learn::required_history(variant, options.learner.df_mean);
  const std::vector<feat::Sample> test_samples =
      learn::usable_samples(variant, data::to_samples(test, history), options.learner.df_mean);
  if (test_samples.size() < 2) throw Error(ErrorKind::kInvalidArgument, "test set has fewer than 2 usable rows");
  const int n = test_samples.front().dof();
  std::vector<Eigen::VectorXd> truth(static_cast<std::size_t>(n), Eigen::VectorXd(test_samples.size()));
  for (std::size_t s = 0; s < test_samples.size(); ++s) {
    for (int j = 0; j < n; ++j) truth[static_cast<std::size_t>(j)][static_cast<Eigen::Index>(s)] = test_samples[s].tau[j];
  }

  ResultTable table;
  for (std::size_t subset_id = 0; subset_id < subsets.size(); ++subset_id) {
    const data::RawTrajectory& subset = subsets[subset_id];
    for (std::size_t d = 0; d < durations.size(); ++d) {
      const long rows = std::lround(durations[d] * subset.rate);
      if (rows > subset.rows()) {
        throw Error(ErrorKind::kInvalidArgument, "duration " + std::to_string(durations[d]) + " s exceeds subset " +
                                                     std::to_string(subset_id) + " (" +
                                                     std::to_string(subset.rows() / subset.rate) + " s)");
      }
      const data::RawTrajectory prefix = data::slice(subset, 0, static_cast<int>(rows));
      learn::LearnerConfig config = options.learner;
      config.gp.rng_seed = cell_seed(options.seed, static_cast<int>(subset_id), static_cast<int>(d));

      const auto start = std::chrono::steady_clock::now();
      const learn::InverseDynamicsModel model =
          learn::train(variant, learn::TrainingSet::from_trajectory(prefix, history), chain, config);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      const Eigen::MatrixXd predicted = learn::predict_trajectory(model, test_samples);
      for (int j = 0; j < n; ++j) {
        const gp::FitReport& report = model.joint_models()[static_cast<std::size_t>(j)].fit_report();
        LearningCurvePoint p;
        p.duration_s = durations[d];
        p.subset_id = static_cast<int>(subset_id);
        p.joint = j + 1;
        p.variant = variant.name();
        p.nrmse = nrmse(predicted.row(j).transpose(), truth[static_cast<std::size_t>(j)]);
        p.fit_iterations = report.mean_iterations();
        p.fit_evaluations = report.mean_evaluations();
        p.wall_time_s = wall;
        p.rows = static_cast<int>(rows);
        table.rows.push_back(p);
      }
    }
  }
  return table;
}

std::vector<IterationRow> iterations_report(const std::vector<learn::ModelVariant>& variants,
                                            const data::RawTrajectory& dataset, const kin::KinematicChain* chain,
                                            const IterationOptions& options) {
  if (options.n_points < 1) throw Error(ErrorKind::kInvalidArgument, "n_points must be >= 1");
  if (options.restarts < 1) throw Error(ErrorKind::kInvalidArgument, "restarts must be >= 1");
  const int n = dataset.dof();
  for (int j : options.joints) {
    if (j < 1 || j > n) throw Error(ErrorKind::kInvalidArgument, "joint " + std::to_string(j) + " out of range");
  }
  auto chain_ptr = chain ? std::make_shared<const kin::KinematicChain>(*chain) : nullptr;

  std::vector<IterationRow> out;
  for (const auto& variant : variants) {
    if (variant.semi_parametric() && !chain) throw Error(ErrorKind::kMissingInput, variant.name() + " needs a kinematic chain");
    const int history = learn::required_history(variant, options.learner.df_mean);
    std::vector<feat::Sample> samples =
        learn::usable_samples(variant, data::to_samples(dataset, history), options.learner.df_mean);
    if (static_cast<int>(samples.size()) < options.n_points) {
      throw Error(ErrorKind::kInvalidArgument, "dataset supplies " + std::to_string(samples.size()) +
                                                   " usable rows, fewer than n_points = " +
                                                   std::to_string(options.n_points));
    }
    samples.resize(static_cast<std::size_t>(options.n_points));
    const int rows = options.n_points;

    std::vector<int> joints = options.joints;
    if (joints.empty()) {
      for (int j = 1; j <= n; ++j) joints.push_back(j);
    }
    for (int joint : joints) {
      const feat::FeatureSpec spec{variant.scheme, joint, variant.mode};
      const int nb = feat::neighbor_joint(spec, n);
      const int kernel_dims = feat::feature_dims(spec, n);
      const int width = kernel_dims + (variant.semi_parametric() ? 3 * n : 0);
      Eigen::MatrixXd inputs(rows, width);
      Eigen::VectorXd targets(rows);
      for (int s = 0; s < rows; ++s) {
        std::optional<double> tau;
        if (nb) tau = samples[static_cast<std::size_t>(s)].tau[nb - 1];
        inputs.row(s) = learn::joint_input(variant, joint, samples[static_cast<std::size_t>(s)], tau,
                                           options.learner.df_mean)
                            .transpose();
        targets[s] = samples[static_cast<std::size_t>(s)].tau[joint - 1];
      }
      const gp::MeanFunction mean =
          variant.semi_parametric()
              ? learn::rbd_mean(variant, joint, n, chain_ptr, 1.0 / dataset.rate, options.learner.df_mean)
              : gp::MeanFunction(gp::ZeroMean{});
      gp::OptConfig config = options.learner.gp;
      config.restarts = options.restarts;
      config.rng_seed = options.learner.gp.rng_seed + 7919ULL * static_cast<std::uint64_t>(joint);
      const gp::GPModel model = gp::fit(inputs, targets, mean, config, kernel_dims);

      IterationRow row;
      row.variant = variant.name();
      row.joint = joint;
      row.feature_dims = kernel_dims;
      row.points = rows;
      row.restarts = options.restarts;
      row.mean_iterations = model.fit_report().mean_iterations();
      row.mean_evaluations = model.fit_report().mean_evaluations();
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace cascadegp::bench
