#pragma once

// Exact Gaussian-process regression with a Matern-5/2 ARD kernel and a
// pluggable mean function.
//
// Input rows may be wider than what the kernel sees: the first
// `kernel_dims` columns feed the kernel, the remaining "passive" columns
// are only read by the mean function. This lets a physics-based mean
// consume the full joint state while the kernel works on a reduced
// (cascaded) feature vector.

#include "cascadegp/kinchain.hpp"
#include "cascadegp/optimizer.hpp"

#include <Eigen/Dense>

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace cascadegp::gp {

struct MaternKernel {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;

  int dims() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;
};

/// sigma^2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r), r the lengthscale-scaled distance.
double kernel_eval(const MaternKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

// --- mean functions ---------------------------------------------------------

struct ZeroMean {};

struct ConstantMean {
  double value = 0.0;
};

/// Rigid-body torque of one joint. Reads the joint state out of the input row,
/// either directly from (q, qd, qdd) columns or from a three-point position
/// history (newest first) spaced `period` seconds apart, from which velocity
/// and acceleration are rebuilt with backward differences.
struct RbdMean {
  std::shared_ptr<const kin::KinematicChain> chain;
  int joint = 0;  // 0-based
  std::vector<int> q_cols, qd_cols, qdd_cols;
  std::vector<std::array<int, 3>> history_cols;
  double period = 0.0;

  bool uses_history() const { return !history_cols.empty(); }
};

struct FunctionMean {
  std::function<double(const Eigen::VectorXd&)> fn;
  std::string label = "function";
};

class MeanFunction {
 public:
  using Variant = std::variant<ZeroMean, ConstantMean, RbdMean, FunctionMean>;

  MeanFunction() = default;
  template <typename T>
    requires(!std::is_same_v<std::decay_t<T>, MeanFunction> && std::is_constructible_v<Variant, T &&>)
  MeanFunction(T&& v) : impl_(std::forward<T>(v)) {}  // NOLINT(google-explicit-constructor)

  double operator()(const Eigen::VectorXd& row) const;
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& rows) const;

  const Variant& variant() const { return impl_; }
  std::string label() const;

 private:
  Variant impl_ = ZeroMean{};
};

// --- model ------------------------------------------------------------------

struct Standardizer {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& inputs, int dims);
  static Standardizer identity(int dims);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& inputs) const;  // kernel columns only
  Eigen::VectorXd apply(const Eigen::VectorXd& row) const;
};

struct OptConfig {
  int restarts = 10;
  int max_iterations = 1000;
  double grad_tol = 1e-5;
  double objective_change_tol = 2e-9;
  std::uint64_t rng_seed = 0;
  bool ard = true;
  double log_bound = 10.0;

  void validate() const;
};

struct RestartReport {
  int iterations = 0;
  int evaluations = 0;
  double log_likelihood = 0.0;
  opt::StopReason reason = opt::StopReason::kMaxIterations;
  bool failed = false;
};

struct FitReport {
  std::vector<RestartReport> restarts;
  int best = -1;

  double mean_iterations() const;
  double mean_evaluations() const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

class GPModel {
 public:
  /// Factorizes K + noise I for fixed hyperparameters (jitter escalation on
  /// failure). `inputs` are raw rows; the standardizer is applied internally.
  static GPModel condition(Eigen::MatrixXd inputs, Eigen::VectorXd targets, int kernel_dims, MaternKernel kernel,
                           double noise_variance, MeanFunction mean, Standardizer standardizer);

  Prediction predict(const Eigen::VectorXd& x_star) const;
  double predict_mean(const Eigen::VectorXd& x_star) const;

  int input_dims() const { return static_cast<int>(inputs_.cols()); }
  int kernel_dims() const { return kernel_dims_; }
  int size() const { return static_cast<int>(inputs_.rows()); }
  const Eigen::MatrixXd& train_inputs() const { return inputs_; }
  const Eigen::VectorXd& train_targets() const { return targets_; }
  const MaternKernel& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  double jitter() const { return jitter_; }
  const MeanFunction& mean() const { return mean_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const Eigen::MatrixXd& chol_factor() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const FitReport& fit_report() const { return report_; }
  void set_fit_report(FitReport report) { report_ = std::move(report); }

  /// Number of predictions whose variance came out negative and was clamped.
  long negative_variance_count() const { return negative_variance_->load(); }

 private:
  GPModel() = default;
  Eigen::VectorXd cross_covariance(const Eigen::VectorXd& x_star) const;

  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd scaled_;  // kernel columns, standardized and divided by the lengthscales
  Eigen::VectorXd targets_;
  int kernel_dims_ = 0;
  MaternKernel kernel_;
  double noise_variance_ = 0.0;
  double jitter_ = 0.0;
  MeanFunction mean_;
  Standardizer standardizer_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  FitReport report_;
  std::shared_ptr<std::atomic<long>> negative_variance_ = std::make_shared<std::atomic<long>>(0);
};

struct LmlResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // [log l_1..log l_D, log sigma^2, log sigma_n^2]
  double jitter = 0.0;
};

/// Log marginal likelihood of the residuals y - m(X) and its gradient with
/// respect to the log-hyperparameters. Inputs are used as given (no
/// standardization); the kernel sees the first kernel.dims() columns.
LmlResult log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                  const MaternKernel& kernel, double noise_variance, const MeanFunction& mean);

/// Maximizes the log marginal likelihood from `restarts` initializations and
/// returns the best model. kernel_dims < 0 means every input column.
GPModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const MeanFunction& mean,
            const OptConfig& config, int kernel_dims = -1);

Prediction predict(const GPModel& model, const Eigen::VectorXd& x_star);

}  // namespace cascadegp::gp
