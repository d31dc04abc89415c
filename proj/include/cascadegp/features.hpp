#pragma once

// GP input construction for every model scheme. Joint numbers in this
// header are 1-based (joint 1 is the one nearest the base), matching the
// slot names ("q_1", "qd_3", ...); Eigen vectors stay 0-based.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cascadegp::feat {

enum class Scheme { kStandard, kInwardCascade, kOutwardCascade };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct DerivativeBased {};

/// xi_j = R * [q_j(t), q_j(t - dt), ..., q_j(t - M dt)].
struct DerivativeFree {
  int history = 2;  // M
  Eigen::MatrixXd projection = Eigen::MatrixXd::Identity(3, 3);  // R, k x (M + 1)

  int k() const { return static_cast<int>(projection.rows()); }
  void validate() const;
  static DerivativeFree identity(int history = 2);
};

using DerivativeMode = std::variant<DerivativeBased, DerivativeFree>;

bool is_derivative_free(const DerivativeMode& mode);
int history_length(const DerivativeMode& mode);  // M, 0 for derivative-based

struct Sample {
  double t = 0.0;
  Eigen::VectorXd q, qd, qdd, tau;
  Eigen::MatrixXd q_history;  // N x (M + 1), newest first; empty when unavailable

  int dof() const { return static_cast<int>(q.size()); }
  bool has_history(int m) const { return q_history.rows() == dof() && q_history.cols() >= m + 1; }
};

struct FeatureSpec {
  Scheme scheme = Scheme::kStandard;
  int joint = 1;
  DerivativeMode mode = DerivativeBased{};

  void validate(int dof) const;
};

struct FeatureVector {
  Eigen::VectorXd values;
  std::vector<std::string> layout;

  int dims() const { return static_cast<int>(values.size()); }
  int index_of(const std::string& slot) const;  // -1 when absent
  double at(const std::string& slot) const;
};

struct JointRange {
  int first = 1;
  int last = 1;
};

/// Joints whose states enter the feature vector of `spec`.
JointRange state_joints(const FeatureSpec& spec, int dof);

/// 1-based index of the neighbor whose torque `spec` consumes, or 0 for none.
int neighbor_joint(const FeatureSpec& spec, int dof);

int feature_dims(const FeatureSpec& spec, int dof);

FeatureVector standard_features(const Sample& sample, int dof);
FeatureVector inward_features(const Sample& sample, int joint, std::optional<double> tau_next);
FeatureVector outward_features(const Sample& sample, int joint, std::optional<double> tau_prev);

Eigen::VectorXd derivative_free_transform(const Eigen::VectorXd& q_history, const Eigen::MatrixXd& projection);

FeatureVector build_features(const FeatureSpec& spec, const Sample& sample, std::optional<double> neighbor_tau);

}  // namespace cascadegp::feat
