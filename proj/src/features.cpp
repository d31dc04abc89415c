#include "cascadegp/features.hpp"

#include "cascadegp/error.hpp"

#include <algorithm>

namespace cascadegp::feat {
namespace {

std::string slot(const char* quantity, int joint) { return std::string(quantity) + "_" + std::to_string(joint); }

void check_sample(const Sample& sample, int dof) {
  const int n = sample.dof();
  if (n != dof || sample.qd.size() != n || sample.qdd.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "sample does not carry " + std::to_string(dof) + " joints");
  }
}

// [q_a..q_b, qd_a..qd_b, qdd_a..qdd_b] preceded by an optional torque slot.
FeatureVector state_block(const Sample& sample, JointRange range, const char* torque_slot, double torque) {
  const int count = range.last - range.first + 1;
  const int offset = torque_slot ? 1 : 0;
  FeatureVector out;
  out.values.resize(offset + 3 * count);
  out.layout.resize(out.values.size());
  if (torque_slot) {
    out.values[0] = torque;
    out.layout[0] = torque_slot;
  }
  for (int j = range.first; j <= range.last; ++j) {
    const int c = j - range.first;
    out.values[offset + c] = sample.q[j - 1];
    out.values[offset + count + c] = sample.qd[j - 1];
    out.values[offset + 2 * count + c] = sample.qdd[j - 1];
    out.layout[offset + c] = slot("q", j);
    out.layout[offset + count + c] = slot("qd", j);
    out.layout[offset + 2 * count + c] = slot("qdd", j);
  }
  return out;
}

// Torque slot followed by xi_j for every joint in the range.
FeatureVector history_block(const Sample& sample, JointRange range, const char* torque_slot,
                            double torque, const DerivativeFree& df) {
  if (!sample.has_history(df.history)) {
    throw Error(ErrorKind::kMissingInput, "sample at t = " + std::to_string(sample.t) + " lacks " +
                                              std::to_string(df.history + 1) + "-point position history");
  }
  const int k = df.k();
  const int offset = torque_slot ? 1 : 0;
  const int count = range.last - range.first + 1;
  FeatureVector out;
  out.values.resize(offset + k * count);
  out.layout.resize(out.values.size());
  if (torque_slot) {
    out.values[0] = torque;
    out.layout[0] = torque_slot;
  }
  for (int j = range.first; j <= range.last; ++j) {
    const Eigen::VectorXd history = sample.q_history.row(j - 1).head(df.history + 1).transpose();
    const Eigen::VectorXd xi = derivative_free_transform(history, df.projection);
    for (int r = 0; r < k; ++r) {
      const int index = offset + (j - range.first) * k + r;
      out.values[index] = xi[r];
      out.layout[index] = "xi_" + std::to_string(j) + "_" + std::to_string(r);
    }
  }
  return out;
}

const char* torque_slot_name(const FeatureSpec& spec, int dof) {
  if (neighbor_joint(spec, dof) == 0) return nullptr;
  return spec.scheme == Scheme::kInwardCascade ? "tau_next" : "tau_prev";
}

}  // namespace

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kStandard: return "standard";
    case Scheme::kInwardCascade: return "inward";
    case Scheme::kOutwardCascade: return "outward";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "standard") return Scheme::kStandard;
  if (name == "inward") return Scheme::kInwardCascade;
  if (name == "outward") return Scheme::kOutwardCascade;
  throw Error(ErrorKind::kInvalidArgument, "unknown scheme '" + name + "' (standard, inward, outward)");
}

void DerivativeFree::validate() const {
  if (history < 0) throw Error(ErrorKind::kInvalidArgument, "history length M must be >= 0");
  if (projection.rows() < 1 || projection.cols() != history + 1) {
    throw Error(ErrorKind::kDimensionMismatch, "projection R must be k x (M + 1)");
  }
}

DerivativeFree DerivativeFree::identity(int history) {
  return {history, Eigen::MatrixXd::Identity(history + 1, history + 1)};
}

bool is_derivative_free(const DerivativeMode& mode) { return std::holds_alternative<DerivativeFree>(mode); }

int history_length(const DerivativeMode& mode) {
  if (const auto* df = std::get_if<DerivativeFree>(&mode)) return df->history;
  return 0;
}

void FeatureSpec::validate(int dof) const {
  if (dof < 1) throw Error(ErrorKind::kInvalidArgument, "dof must be >= 1");
  if (joint < 1 || joint > dof) {
    throw Error(ErrorKind::kInvalidArgument,
                "joint index " + std::to_string(joint) + " outside 1.." + std::to_string(dof));
  }
  if (const auto* df = std::get_if<DerivativeFree>(&mode)) df->validate();
}

int FeatureVector::index_of(const std::string& name) const {
  const auto it = std::find(layout.begin(), layout.end(), name);
  return it == layout.end() ? -1 : static_cast<int>(it - layout.begin());
}

double FeatureVector::at(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw Error(ErrorKind::kMissingInput, "no slot '" + name + "'");
  return values[i];
}

JointRange state_joints(const FeatureSpec& spec, int dof) {
  spec.validate(dof);
  switch (spec.scheme) {
    case Scheme::kStandard: return {1, dof};
    case Scheme::kInwardCascade: return spec.joint < dof ? JointRange{1, spec.joint} : JointRange{1, dof};
    case Scheme::kOutwardCascade: return spec.joint > 1 ? JointRange{spec.joint, dof} : JointRange{1, dof};
  }
  return {1, dof};
}

int neighbor_joint(const FeatureSpec& spec, int dof) {
  spec.validate(dof);
  if (spec.scheme == Scheme::kInwardCascade && spec.joint < dof) return spec.joint + 1;
  if (spec.scheme == Scheme::kOutwardCascade && spec.joint > 1) return spec.joint - 1;
  return 0;
}

int feature_dims(const FeatureSpec& spec, int dof) {
  const JointRange range = state_joints(spec, dof);
  const int per_joint = is_derivative_free(spec.mode) ? std::get<DerivativeFree>(spec.mode).k() : 3;
  return (neighbor_joint(spec, dof) ? 1 : 0) + per_joint * (range.last - range.first + 1);
}

FeatureVector standard_features(const Sample& sample, int dof) {
  check_sample(sample, dof);
  return state_block(sample, {1, dof}, nullptr, 0.0);
}

FeatureVector inward_features(const Sample& sample, int joint, std::optional<double> tau_next) {
  const int dof = sample.dof();
  const FeatureSpec spec{Scheme::kInwardCascade, joint, DerivativeBased{}};
  return build_features(spec, sample, joint < dof ? tau_next : std::nullopt);
}

FeatureVector outward_features(const Sample& sample, int joint, std::optional<double> tau_prev) {
  const FeatureSpec spec{Scheme::kOutwardCascade, joint, DerivativeBased{}};
  return build_features(spec, sample, joint > 1 ? tau_prev : std::nullopt);
}

Eigen::VectorXd derivative_free_transform(const Eigen::VectorXd& q_history, const Eigen::MatrixXd& projection) {
  if (projection.cols() != q_history.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "R has " + std::to_string(projection.cols()) +
                                                   " columns, history has " + std::to_string(q_history.size()));
  }
  return projection * q_history;
}

FeatureVector build_features(const FeatureSpec& spec, const Sample& sample, std::optional<double> neighbor_tau) {
  const int dof = sample.dof();
  check_sample(sample, dof);
  const JointRange range = state_joints(spec, dof);
  const char* torque_slot = torque_slot_name(spec, dof);
  if (torque_slot && !neighbor_tau) {
    throw Error(ErrorKind::kMissingInput,
                "joint " + std::to_string(spec.joint) + " needs the torque of joint " +
                    std::to_string(neighbor_joint(spec, dof)));
  }
  const double torque = torque_slot ? *neighbor_tau : 0.0;
  if (const auto* df = std::get_if<DerivativeFree>(&spec.mode)) {
    df->validate();
    return history_block(sample, range, torque_slot, torque, *df);
  }
  return state_block(sample, range, torque_slot, torque);
}

}  // namespace cascadegp::feat
