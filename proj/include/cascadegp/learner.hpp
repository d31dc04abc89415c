#pragma once

// Per-joint GP inverse dynamics models: non-parametric or semi-parametric
// (rigid-body mean), standard or cascaded inputs, derivative-based or
// derivative-free features.

#include "cascadegp/datasets.hpp"
#include "cascadegp/features.hpp"
#include "cascadegp/gpr.hpp"
#include "cascadegp/kinchain.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cascadegp::learn {

enum class ParametricMode { kNonParametric, kSemiParametric };

struct ModelVariant {
  ParametricMode parametric = ParametricMode::kNonParametric;
  feat::Scheme scheme = feat::Scheme::kStandard;
  feat::DerivativeMode mode = feat::DerivativeBased{};

  bool semi_parametric() const { return parametric == ParametricMode::kSemiParametric; }
  bool derivative_free() const { return feat::is_derivative_free(mode); }
  /// e.g. "NP", "SP-Inward-Cascaded", "NP-Outward-Cascaded-DF".
  std::string name() const;
};

ModelVariant variant_from_name(const std::string& name);

/// The twelve combinations of {NP, SP} x {standard, inward, outward} x {derivative-based, derivative-free}.
std::vector<ModelVariant> all_variants();

/// Where the rigid-body mean of a derivative-free semi-parametric model gets
/// velocity and acceleration from.
enum class DfMeanSource { kFiniteDifference, kDatasetColumns };

/// Position-history length (M) a sample must carry for `variant`; 0 for
/// derivative-based variants.
int required_history(const ModelVariant& variant, DfMeanSource df_mean);

struct LearnerConfig {
  gp::OptConfig gp;
  int max_points = 500;
  bool chain_predictions_in_training = false;
  DfMeanSource df_mean = DfMeanSource::kFiniteDifference;
};

struct TrainingSet {
  std::vector<feat::Sample> samples;
  std::string source;
  double sample_rate = 0.0;

  /// Strictly increasing timestamps, spacing uniform within 1 %.
  void validate() const;
  static TrainingSet from_trajectory(const data::RawTrajectory& traj, int history);
};

/// Joint evaluation order: N..1 for inward, 1..N for outward and standard.
std::vector<int> cascade_order(feat::Scheme scheme, int dof);

class InverseDynamicsModel {
 public:
  InverseDynamicsModel(ModelVariant variant, std::vector<gp::GPModel> joint_models,
                       std::shared_ptr<const kin::KinematicChain> chain, std::vector<int> cascade_order,
                       double sample_period, DfMeanSource df_mean);

  int dof() const { return static_cast<int>(joint_models_.size()); }
  const ModelVariant& variant() const { return variant_; }
  const std::vector<gp::GPModel>& joint_models() const { return joint_models_; }
  const std::shared_ptr<const kin::KinematicChain>& chain() const { return chain_; }
  const std::vector<int>& cascade_order() const { return order_; }
  double sample_period() const { return sample_period_; }
  DfMeanSource df_mean() const { return df_mean_; }

  feat::FeatureSpec feature_spec(int joint) const;

  /// Whether `sample` carries everything this model's features need.
  bool accepts(const feat::Sample& sample) const;

  /// Predicted torques at one timestep, chaining neighbor predictions in
  /// cascade order.
  Eigen::VectorXd predict(const feat::Sample& sample) const;

 private:
  ModelVariant variant_;
  std::vector<gp::GPModel> joint_models_;
  std::shared_ptr<const kin::KinematicChain> chain_;
  std::vector<int> order_;
  double sample_period_ = 0.0;
  DfMeanSource df_mean_ = DfMeanSource::kFiniteDifference;
};

/// Full GP input row for joint `joint` (1-based): the feature vector followed,
/// for semi-parametric variants, by the passive state block read by the mean.
Eigen::VectorXd joint_input(const ModelVariant& variant, int joint, const feat::Sample& sample,
                            std::optional<double> neighbor_tau, DfMeanSource df_mean);

/// Rigid-body mean for `joint` reading the passive block of `joint_input` rows.
gp::MeanFunction rbd_mean(const ModelVariant& variant, int joint, int dof,
                          std::shared_ptr<const kin::KinematicChain> chain, double sample_period,
                          DfMeanSource df_mean);

/// Samples usable by `variant` (derivative-free variants need full histories).
std::vector<feat::Sample> usable_samples(const ModelVariant& variant, const std::vector<feat::Sample>& samples,
                                         DfMeanSource df_mean = DfMeanSource::kFiniteDifference);

InverseDynamicsModel train(const ModelVariant& variant, const TrainingSet& training_set,
                           const kin::KinematicChain* chain, const LearnerConfig& config);

/// N x T matrix of predicted torques.
Eigen::MatrixXd predict_trajectory(const InverseDynamicsModel& model, const std::vector<feat::Sample>& trajectory);

/// Measured minus rigid-body torque of `joint` (1-based) per sample.
Eigen::VectorXd residual_targets(const kin::KinematicChain& chain, const TrainingSet& training_set, int joint);

}  // namespace cascadegp::learn
