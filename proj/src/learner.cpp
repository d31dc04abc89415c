#include "cascadegp/learner.hpp"

#include "cascadegp/error.hpp"

#include <algorithm>
#include <cmath>

namespace cascadegp::learn {
namespace {

// Position-history points the rigid-body mean needs for finite differences.
constexpr int kMeanHistoryPoints = 3;

bool mean_uses_history(const ModelVariant& variant, DfMeanSource df_mean) {
  return variant.derivative_free() && df_mean == DfMeanSource::kFiniteDifference;
}

}  // namespace

int required_history(const ModelVariant& variant, DfMeanSource df_mean) {
  if (!variant.derivative_free()) return 0;
  int m = feat::history_length(variant.mode);
  if (variant.semi_parametric() && df_mean == DfMeanSource::kFiniteDifference) {
    m = std::max(m, kMeanHistoryPoints - 1);
  }
  return m;
}

std::string ModelVariant::name() const {
  std::string out = semi_parametric() ? "SP" : "NP";
  if (scheme == feat::Scheme::kInwardCascade) out += "-Inward-Cascaded";
  if (scheme == feat::Scheme::kOutwardCascade) out += "-Outward-Cascaded";
  if (derivative_free()) out += "-DF";
  return out;
}

ModelVariant variant_from_name(const std::string& name) {
  for (const ModelVariant& v : all_variants()) {
    if (v.name() == name) return v;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown model variant '" + name + "'");
}

std::vector<ModelVariant> all_variants() {
  std::vector<ModelVariant> out;
  for (auto mode : {feat::DerivativeMode{feat::DerivativeBased{}}, feat::DerivativeMode{feat::DerivativeFree::identity()}}) {
    for (auto parametric : {ParametricMode::kNonParametric, ParametricMode::kSemiParametric}) {
      for (auto scheme : {feat::Scheme::kInwardCascade, feat::Scheme::kOutwardCascade, feat::Scheme::kStandard}) {
        out.push_back({parametric, scheme, mode});
      }
    }
  }
  return out;
}

void TrainingSet::validate() const {
  if (samples.empty()) throw Error(ErrorKind::kInvalidArgument, "training set is empty");
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "training set needs a positive sample rate");
  const double period = 1.0 / sample_rate;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = samples[i].t - samples[i - 1].t;
    if (!(dt > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "timestamps not strictly increasing at sample " + std::to_string(i));
    }
    if (std::abs(dt - period) > 0.01 * period) {
      throw Error(ErrorKind::kInvalidArgument, "non-uniform spacing at sample " + std::to_string(i));
    }
  }
}

TrainingSet TrainingSet::from_trajectory(const data::RawTrajectory& traj, int history) {
  TrainingSet set{data::to_samples(traj, history), traj.meta, traj.rate};
  set.validate();
  return set;
}

std::vector<int> cascade_order(feat::Scheme scheme, int dof) {
  std::vector<int> order(dof);
  for (int i = 0; i < dof; ++i) order[i] = scheme == feat::Scheme::kInwardCascade ? dof - i : i + 1;
  return order;
}

Eigen::VectorXd joint_input(const ModelVariant& variant, int joint, const feat::Sample& sample,
                            std::optional<double> neighbor_tau, DfMeanSource df_mean) {
  const feat::FeatureSpec spec{variant.scheme, joint, variant.mode};
  const feat::FeatureVector features = feat::build_features(spec, sample, neighbor_tau);
  if (!variant.semi_parametric()) return features.values;

  const int n = sample.dof();
  Eigen::VectorXd row(features.dims() + 3 * n);
  row.head(features.dims()) = features.values;
  auto passive = row.tail(3 * n);
  if (mean_uses_history(variant, df_mean)) {
    if (!sample.has_history(kMeanHistoryPoints - 1)) {
      throw Error(ErrorKind::kMissingInput, "rigid-body mean needs a 3-point history at t = " + std::to_string(sample.t));
    }
    for (int j = 0; j < n; ++j) passive.segment(3 * j, 3) = sample.q_history.row(j).head(3).transpose();
  } else {
    passive << sample.q, sample.qd, sample.qdd;
  }
  return row;
}

gp::MeanFunction rbd_mean(const ModelVariant& variant, int joint, int dof,
                          std::shared_ptr<const kin::KinematicChain> chain, double sample_period,
                          DfMeanSource df_mean) {
  if (!chain) throw Error(ErrorKind::kMissingInput, "semi-parametric model needs a kinematic chain");
  if (chain->dof() != dof) throw Error(ErrorKind::kDimensionMismatch, "chain dof differs from data dof");
  const int offset = feat::feature_dims({variant.scheme, joint, variant.mode}, dof);
  gp::RbdMean mean;
  mean.chain = std::move(chain);
  mean.joint = joint - 1;
  if (mean_uses_history(variant, df_mean)) {
    if (!(sample_period > 0.0)) throw Error(ErrorKind::kInvalidArgument, "history mean needs a sample period");
    mean.period = sample_period;
    for (int j = 0; j < dof; ++j) mean.history_cols.push_back({offset + 3 * j, offset + 3 * j + 1, offset + 3 * j + 2});
  } else {
    for (int j = 0; j < dof; ++j) {
      mean.q_cols.push_back(offset + j);
      mean.qd_cols.push_back(offset + dof + j);
      mean.qdd_cols.push_back(offset + 2 * dof + j);
    }
  }
  return mean;
}

std::vector<feat::Sample> usable_samples(const ModelVariant& variant, const std::vector<feat::Sample>& samples,
                                         DfMeanSource df_mean) {
  const int m = required_history(variant, df_mean);
  if (!variant.derivative_free()) return samples;
  std::vector<feat::Sample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [m](const feat::Sample& s) { return s.has_history(m); });
  return out;
}

InverseDynamicsModel::InverseDynamicsModel(ModelVariant variant, std::vector<gp::GPModel> joint_models,
                                           std::shared_ptr<const kin::KinematicChain> chain, std::vector<int> order,
                                           double sample_period, DfMeanSource df_mean)
    : variant_(std::move(variant)),
      joint_models_(std::move(joint_models)),
      chain_(std::move(chain)),
      order_(std::move(order)),
      sample_period_(sample_period),
      df_mean_(df_mean) {
  const int n = dof();
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "model needs at least one joint");
  if (variant_.semi_parametric() && !chain_) {
    throw Error(ErrorKind::kMissingInput, "semi-parametric model needs a kinematic chain");
  }
  std::vector<int> sorted = order_;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sorted.size()) != n || sorted[i] != i + 1) {
      throw Error(ErrorKind::kInvalidArgument, "cascade order is not a permutation of 1..N");
    }
  }
  if (variant_.scheme != feat::Scheme::kStandard && order_ != learn::cascade_order(variant_.scheme, n)) {
    throw Error(ErrorKind::kInvalidArgument, "cascade order does not follow the scheme's recursion");
  }
  for (int j = 1; j <= n; ++j) {
    const int expected = feat::feature_dims(feature_spec(j), n);
    if (joint_models_[j - 1].kernel_dims() != expected) {
      throw Error(ErrorKind::kDimensionMismatch, "joint " + std::to_string(j) + " model has " +
                                                     std::to_string(joint_models_[j - 1].kernel_dims()) +
                                                     " kernel inputs, features give " + std::to_string(expected));
    }
  }
}

feat::FeatureSpec InverseDynamicsModel::feature_spec(int joint) const { return {variant_.scheme, joint, variant_.mode}; }

bool InverseDynamicsModel::accepts(const feat::Sample& sample) const {
  if (sample.dof() != dof()) return false;
  return !variant_.derivative_free() || sample.has_history(required_history(variant_, df_mean_));
}

Eigen::VectorXd InverseDynamicsModel::predict(const feat::Sample& sample) const {
  if (!accepts(sample)) {
    throw Error(ErrorKind::kMissingInput, "sample at t = " + std::to_string(sample.t) + " lacks inputs for " +
                                              variant_.name());
  }
  const int n = dof();
  Eigen::VectorXd out(n);
  for (int joint : order_) {
    const int nb = feat::neighbor_joint(feature_spec(joint), n);
    const std::optional<double> tau = nb ? std::optional<double>(out[nb - 1]) : std::nullopt;
    out[joint - 1] = joint_models_[joint - 1].predict_mean(joint_input(variant_, joint, sample, tau, df_mean_));
  }
  return out;
}

InverseDynamicsModel train(const ModelVariant& variant, const TrainingSet& training_set,
                           const kin::KinematicChain* chain, const LearnerConfig& config) {
  if (variant.semi_parametric() && !chain) {
    throw Error(ErrorKind::kMissingInput, variant.name() + " needs a kinematic chain");
  }
  if (config.max_points < 2) throw Error(ErrorKind::kInvalidArgument, "max_points must be >= 2");

  TrainingSet ordered = training_set;
  std::stable_sort(ordered.samples.begin(), ordered.samples.end(),
                   [](const feat::Sample& a, const feat::Sample& b) { return a.t < b.t; });
  ordered.validate();

  std::vector<feat::Sample> samples = usable_samples(variant, ordered.samples, config.df_mean);
  if (samples.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "fewer than 2 usable samples after history trimming");
  }
  if (static_cast<int>(samples.size()) > config.max_points) {
    std::vector<feat::Sample> kept;
    const double stride = static_cast<double>(samples.size() - 1) / (config.max_points - 1);
    for (int k = 0; k < config.max_points; ++k) kept.push_back(samples[static_cast<std::size_t>(std::lround(k * stride))]);
    samples = std::move(kept);
  }

  const int n = samples.front().dof();
  if (chain && chain->dof() != n) throw Error(ErrorKind::kDimensionMismatch, "chain dof differs from data dof");
  auto chain_ptr = chain ? std::make_shared<const kin::KinematicChain>(*chain) : nullptr;
  const double period = 1.0 / ordered.sample_rate;
  const std::vector<int> order = cascade_order(variant.scheme, n);
  const int rows = static_cast<int>(samples.size());

  std::vector<std::optional<gp::GPModel>> models(n);
  std::vector<Eigen::VectorXd> predicted(n);
  for (int joint : order) {
    const feat::FeatureSpec spec{variant.scheme, joint, variant.mode};
    const int nb = feat::neighbor_joint(spec, n);
    const int kernel_dims = feat::feature_dims(spec, n);
    const int width = kernel_dims + (variant.semi_parametric() ? 3 * n : 0);

    Eigen::MatrixXd inputs(rows, width);
    Eigen::VectorXd targets(rows);
    for (int s = 0; s < rows; ++s) {
      std::optional<double> tau;
      if (nb) tau = config.chain_predictions_in_training ? predicted[nb - 1][s] : samples[s].tau[nb - 1];
      inputs.row(s) = joint_input(variant, joint, samples[s], tau, config.df_mean).transpose();
      targets[s] = samples[s].tau[joint - 1];
    }
    const gp::MeanFunction mean = variant.semi_parametric()
                                      ? rbd_mean(variant, joint, n, chain_ptr, period, config.df_mean)
                                      : gp::MeanFunction(gp::ZeroMean{});
    gp::OptConfig gp_config = config.gp;
    gp_config.rng_seed = config.gp.rng_seed + 7919ULL * static_cast<std::uint64_t>(joint);
    models[joint - 1] = gp::fit(inputs, targets, mean, gp_config, kernel_dims);

    if (config.chain_predictions_in_training) {
      predicted[joint - 1].resize(rows);
      for (int s = 0; s < rows; ++s) predicted[joint - 1][s] = models[joint - 1]->predict_mean(inputs.row(s).transpose());
    }
  }

  std::vector<gp::GPModel> fitted;
  for (auto& m : models) fitted.push_back(std::move(*m));
  return InverseDynamicsModel(variant, std::move(fitted), chain_ptr, order, period, config.df_mean);
}

Eigen::MatrixXd predict_trajectory(const InverseDynamicsModel& model, const std::vector<feat::Sample>& trajectory) {
  Eigen::MatrixXd out(model.dof(), static_cast<Eigen::Index>(trajectory.size()));
  for (std::size_t t = 0; t < trajectory.size(); ++t) out.col(static_cast<Eigen::Index>(t)) = model.predict(trajectory[t]);
  return out;
}

Eigen::VectorXd residual_targets(const kin::KinematicChain& chain, const TrainingSet& training_set, int joint) {
  if (joint < 1 || joint > chain.dof()) throw Error(ErrorKind::kInvalidArgument, "joint out of range");
  Eigen::VectorXd out(static_cast<Eigen::Index>(training_set.samples.size()));
  for (std::size_t s = 0; s < training_set.samples.size(); ++s) {
    const feat::Sample& sample = training_set.samples[s];
    if (sample.tau.size() != chain.dof()) throw Error(ErrorKind::kDimensionMismatch, "sample torque length");
    out[static_cast<Eigen::Index>(s)] =
        sample.tau[joint - 1] - kin::rnea(chain, sample.q, sample.qd, sample.qdd)[joint - 1];
  }
  return out;
}

}  // namespace cascadegp::learn
