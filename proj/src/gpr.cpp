#include "cascadegp/gpr.hpp"

#include "cascadegp/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace cascadegp::gp {
namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kLog2Pi = 1.83787706640934548356;

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::kNonFinite, what);
}

double matern52(double r, double signal_variance) {
  return signal_variance * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

// Pairwise Euclidean distances between the rows of `scaled`.
Eigen::MatrixXd pairwise_distance(const Eigen::MatrixXd& scaled) {
  const Eigen::VectorXd sq = scaled.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * scaled * scaled.transpose();
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  const Eigen::Index n = d.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) d(i, j) = i == j ? 0.0 : std::sqrt(std::max(d(i, j), 0.0));
  }
  return d;
}

Eigen::MatrixXd scale_columns(const Eigen::MatrixXd& x, const Eigen::VectorXd& lengthscales) {
  return x * lengthscales.cwiseInverse().asDiagonal();
}

// Cholesky of `k` with the jitter escalation policy: none, then
// 1e-10 .. 1e-4 times the mean diagonal, x10 per step.
std::optional<Eigen::LLT<Eigen::MatrixXd>> factorize(Eigen::MatrixXd k, double& jitter) {
  const Eigen::Index n = k.rows();
  const double base = k.trace() / static_cast<double>(n);
  jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) return llt;
  for (double level = 1e-10; level <= 1e-4 * (1.0 + 1e-9); level *= 10.0) {
    const double added = level * base - jitter;
    jitter = level * base;
    k.diagonal().array() += added;
    llt.compute(k);
    if (llt.info() == Eigen::Success) return llt;
  }
  return std::nullopt;
}

struct CoreResult {
  double value = 0.0;
  Eigen::VectorXd lengthscale_grad;
  double signal_grad = 0.0;
  double noise_grad = 0.0;
  double jitter = 0.0;
};

CoreResult lml_core(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual, const Eigen::VectorXd& lengthscales,
                    double signal_variance, double noise_variance, bool with_gradient) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd scaled = scale_columns(x, lengthscales);
  const Eigen::MatrixXd dist = pairwise_distance(scaled);
  const Eigen::MatrixXd decay = (-kSqrt5 * dist.array()).exp().matrix();
  const Eigen::MatrixXd k_signal =
      (signal_variance * (1.0 + kSqrt5 * dist.array() + 5.0 / 3.0 * dist.array().square()) * decay.array()).matrix();

  Eigen::MatrixXd k_noisy = k_signal;
  k_noisy.diagonal().array() += noise_variance;
  CoreResult out;
  auto llt = factorize(k_noisy, out.jitter);
  if (!llt) {
    throw Error(ErrorKind::kFactorization, "Gram matrix not positive definite after jitter escalation");
  }
  const Eigen::VectorXd alpha = llt->solve(residual);
  const Eigen::MatrixXd& l = llt->matrixLLT();
  out.value = -0.5 * residual.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!with_gradient) return out;

  Eigen::MatrixXd w = -llt->solve(Eigen::MatrixXd::Identity(n, n));
  w.noalias() += alpha * alpha.transpose();

  out.signal_grad = 0.5 * (w.array() * k_signal.array()).sum();
  out.noise_grad = 0.5 * noise_variance * w.trace();

  // dK/dlog l_d = (5/3) sigma^2 (1 + sqrt5 r) exp(-sqrt5 r) * (scaled diff_d)^2
  const Eigen::MatrixXd m =
      (w.array() * (5.0 / 3.0 * signal_variance) * (1.0 + kSqrt5 * dist.array()) * decay.array()).matrix();
  const Eigen::VectorXd m_rowsum = m.rowwise().sum();
  const Eigen::MatrixXd ms = m * scaled;
  out.lengthscale_grad.resize(x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    out.lengthscale_grad[d] =
        scaled.col(d).array().square().matrix().dot(m_rowsum) - scaled.col(d).dot(ms.col(d));
  }
  return out;
}

double population_variance(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double mu = v.mean();
  return (v.array() - mu).square().mean();
}

}  // namespace

// --- kernel -----------------------------------------------------------------

void MaternKernel::validate() const {
  if (lengthscales.size() == 0) throw Error(ErrorKind::kInvalidArgument, "kernel needs at least one lengthscale");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw Error(ErrorKind::kInvalidArgument, "lengthscale " + std::to_string(i) + " must be positive");
    }
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw Error(ErrorKind::kInvalidArgument, "signal variance must be positive");
  }
}

double kernel_eval(const MaternKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2) {
  if (x.size() != kernel.dims() || x2.size() != kernel.dims()) {
    throw Error(ErrorKind::kDimensionMismatch, "kernel expects " + std::to_string(kernel.dims()) + " dims, got " +
                                                   std::to_string(x.size()) + " and " + std::to_string(x2.size()));
  }
  const double r = ((x - x2).array() / kernel.lengthscales.array()).matrix().norm();
  return matern52(r, kernel.signal_variance);
}

// --- means ------------------------------------------------------------------

double MeanFunction::operator()(const Eigen::VectorXd& row) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMean>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, ConstantMean>) {
          return m.value;
        } else if constexpr (std::is_same_v<T, FunctionMean>) {
          return m.fn(row);
        } else {
          const int n = m.chain->dof();
          Eigen::VectorXd q(n), qd(n), qdd(n);
          if (m.uses_history()) {
            const double dt = m.period;
            for (int j = 0; j < n; ++j) {
              const double h0 = row[m.history_cols[j][0]];
              const double h1 = row[m.history_cols[j][1]];
              const double h2 = row[m.history_cols[j][2]];
              q[j] = h0;
              qd[j] = (3.0 * h0 - 4.0 * h1 + h2) / (2.0 * dt);
              qdd[j] = (h0 - 2.0 * h1 + h2) / (dt * dt);
            }
          } else {
            for (int j = 0; j < n; ++j) {
              q[j] = row[m.q_cols[j]];
              qd[j] = row[m.qd_cols[j]];
              qdd[j] = row[m.qdd_cols[j]];
            }
          }
          return kin::rnea(*m.chain, q, qd, qdd)[m.joint];
        }
      },
      impl_);
}

Eigen::VectorXd MeanFunction::evaluate(const Eigen::MatrixXd& rows) const {
  Eigen::VectorXd out(rows.rows());
  if (std::holds_alternative<ZeroMean>(impl_)) return Eigen::VectorXd::Zero(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[i] = (*this)(rows.row(i).transpose());
  return out;
}

std::string MeanFunction::label() const {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMean>) return "zero";
        else if constexpr (std::is_same_v<T, ConstantMean>) return "constant";
        else if constexpr (std::is_same_v<T, RbdMean>) return "rbd";
        else return m.label;
      },
      impl_);
}

// --- standardizer -----------------------------------------------------------

Standardizer Standardizer::fit(const Eigen::MatrixXd& inputs, int dims) {
  Standardizer s;
  s.shift.resize(dims);
  s.scale.resize(dims);
  for (int d = 0; d < dims; ++d) {
    const Eigen::VectorXd col = inputs.col(d);
    s.shift[d] = col.mean();
    const double sd = std::sqrt(population_variance(col));
    s.scale[d] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int dims) {
  return {Eigen::VectorXd::Zero(dims), Eigen::VectorXd::Ones(dims)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& inputs) const {
  const Eigen::Index dims = shift.size();
  return (inputs.leftCols(dims).rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& row) const {
  const Eigen::Index dims = shift.size();
  return (row.head(dims) - shift).cwiseQuotient(scale);
}

// --- config / reports -------------------------------------------------------

void OptConfig::validate() const {
  if (restarts < 1) throw Error(ErrorKind::kInvalidArgument, "restarts must be >= 1");
  if (max_iterations < 0) throw Error(ErrorKind::kInvalidArgument, "max_iterations must be >= 0");
  if (!(grad_tol > 0.0) || !(objective_change_tol >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "grad_tol must be > 0 and objective_change_tol >= 0");
  }
  if (!(log_bound > 0.0)) throw Error(ErrorKind::kInvalidArgument, "log_bound must be positive");
}

double FitReport::mean_iterations() const {
  if (restarts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : restarts) total += r.iterations;
  return total / static_cast<double>(restarts.size());
}

double FitReport::mean_evaluations() const {
  if (restarts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : restarts) total += r.evaluations;
  return total / static_cast<double>(restarts.size());
}

// --- model ------------------------------------------------------------------

GPModel GPModel::condition(Eigen::MatrixXd inputs, Eigen::VectorXd targets, int kernel_dims, MaternKernel kernel,
                           double noise_variance, MeanFunction mean, Standardizer standardizer) {
  if (inputs.rows() < 1) throw Error(ErrorKind::kInvalidArgument, "GP needs at least one training point");
  if (inputs.rows() != targets.size()) throw Error(ErrorKind::kDimensionMismatch, "inputs/targets row count");
  if (kernel_dims < 1 || kernel_dims > inputs.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "kernel_dims out of range");
  }
  if (kernel.dims() != kernel_dims || standardizer.shift.size() != kernel_dims ||
      standardizer.scale.size() != kernel_dims) {
    throw Error(ErrorKind::kDimensionMismatch, "kernel/standardizer width does not match kernel_dims");
  }
  kernel.validate();
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw Error(ErrorKind::kInvalidArgument, "noise variance must be finite and >= 0");
  }
  require_finite(inputs, "training inputs");
  require_finite(targets, "training targets");

  GPModel model;
  model.scaled_ = scale_columns(standardizer.apply(inputs), kernel.lengthscales);
  const Eigen::VectorXd residual = targets - mean.evaluate(inputs);
  const Eigen::MatrixXd dist = pairwise_distance(model.scaled_);
  Eigen::MatrixXd k = dist.unaryExpr([&](double r) { return matern52(r, kernel.signal_variance); });
  k.diagonal().array() += noise_variance;
  auto llt = factorize(k, model.jitter_);
  if (!llt) throw Error(ErrorKind::kFactorization, "Gram matrix not positive definite after jitter escalation");

  model.chol_ = llt->matrixL();
  model.alpha_ = llt->solve(residual);
  model.inputs_ = std::move(inputs);
  model.targets_ = std::move(targets);
  model.kernel_dims_ = kernel_dims;
  model.kernel_ = std::move(kernel);
  model.noise_variance_ = noise_variance;
  model.mean_ = std::move(mean);
  model.standardizer_ = std::move(standardizer);
  return model;
}

Eigen::VectorXd GPModel::cross_covariance(const Eigen::VectorXd& x_star) const {
  const Eigen::RowVectorXd z = standardizer_.apply(x_star).cwiseQuotient(kernel_.lengthscales).transpose();
  const Eigen::VectorXd r = (scaled_.rowwise() - z).rowwise().norm();
  return r.unaryExpr([&](double d) { return matern52(d, kernel_.signal_variance); });
}

double GPModel::predict_mean(const Eigen::VectorXd& x_star) const {
  if (x_star.size() != input_dims()) {
    throw Error(ErrorKind::kDimensionMismatch, "query has " + std::to_string(x_star.size()) + " dims, model expects " +
                                                   std::to_string(input_dims()));
  }
  return mean_(x_star) + cross_covariance(x_star).dot(alpha_);
}

Prediction GPModel::predict(const Eigen::VectorXd& x_star) const {
  if (x_star.size() != input_dims()) {
    throw Error(ErrorKind::kDimensionMismatch, "query has " + std::to_string(x_star.size()) + " dims, model expects " +
                                                   std::to_string(input_dims()));
  }
  const Eigen::VectorXd k_star = cross_covariance(x_star);
  Prediction out;
  out.mean = mean_(x_star) + k_star.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k_star);
  out.variance = kernel_.signal_variance - v.squaredNorm() + noise_variance_;
  if (out.variance < 0.0) {
    negative_variance_->fetch_add(1);
    if (out.variance < -1e-10 * kernel_.signal_variance) {
      spdlog::warn("negative predictive variance {} clamped to 0", out.variance);
    }
    out.variance = 0.0;
  }
  return out;
}

Prediction predict(const GPModel& model, const Eigen::VectorXd& x_star) { return model.predict(x_star); }

// --- likelihood / fitting -----------------------------------------------------

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                  const MaternKernel& kernel, double noise_variance, const MeanFunction& mean) {
  kernel.validate();
  if (inputs.rows() < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one point");
  if (inputs.rows() != targets.size()) throw Error(ErrorKind::kDimensionMismatch, "inputs/targets row count");
  if (inputs.cols() < kernel.dims()) throw Error(ErrorKind::kDimensionMismatch, "inputs narrower than kernel");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw Error(ErrorKind::kInvalidArgument, "noise variance must be finite and >= 0");
  }
  const Eigen::VectorXd residual = targets - mean.evaluate(inputs);
  const CoreResult core = lml_core(inputs.leftCols(kernel.dims()), residual, kernel.lengthscales,
                                   kernel.signal_variance, noise_variance, true);
  LmlResult out;
  out.value = core.value;
  out.jitter = core.jitter;
  out.gradient.resize(kernel.dims() + 2);
  out.gradient.head(kernel.dims()) = core.lengthscale_grad;
  out.gradient[kernel.dims()] = core.signal_grad;
  out.gradient[kernel.dims() + 1] = core.noise_grad;
  return out;
}

GPModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const MeanFunction& mean,
            const OptConfig& config, int kernel_dims) {
  config.validate();
  if (kernel_dims < 0) kernel_dims = static_cast<int>(inputs.cols());
  if (inputs.rows() < 1 || kernel_dims < 1) throw Error(ErrorKind::kInvalidArgument, "fit needs n >= 1 and D >= 1");
  if (inputs.rows() != targets.size()) throw Error(ErrorKind::kDimensionMismatch, "inputs/targets row count");
  if (kernel_dims > inputs.cols()) throw Error(ErrorKind::kDimensionMismatch, "kernel_dims exceeds input width");
  require_finite(inputs, "training inputs");
  require_finite(targets, "training targets");

  const Standardizer standardizer = Standardizer::fit(inputs, kernel_dims);
  const Eigen::MatrixXd x = standardizer.apply(inputs);
  const Eigen::VectorXd residual = targets - mean.evaluate(inputs);
  const double variance = std::max(population_variance(residual), 1e-8);

  const int n_scales = config.ard ? kernel_dims : 1;
  const int n_params = n_scales + 2;
  const double bound = config.log_bound;

  Eigen::VectorXd init(n_params);
  init.head(n_scales).setZero();
  init[n_scales] = std::log(variance);
  init[n_scales + 1] = std::log(0.01 * variance);
  init = init.cwiseMax(-bound).cwiseMin(bound);

  auto decode_scales = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    if (config.ard) return p.head(kernel_dims).array().exp().matrix();
    return Eigen::VectorXd::Constant(kernel_dims, std::exp(p[0]));
  };

  opt::Objective objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    const CoreResult core =
        lml_core(x, residual, decode_scales(p), std::exp(p[n_scales]), std::exp(p[n_scales + 1]), true);
    if (config.ard) {
      grad.head(n_scales) = -core.lengthscale_grad;
    } else {
      grad[0] = -core.lengthscale_grad.sum();
    }
    grad[n_scales] = -core.signal_grad;
    grad[n_scales + 1] = -core.noise_grad;
    return -core.value;
  };

  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> offset(-2.0, 2.0);
  std::vector<Eigen::VectorXd> starts{init};
  for (int r = 1; r < config.restarts; ++r) {
    Eigen::VectorXd s = init;
    for (int i = 0; i < n_params; ++i) s[i] += offset(rng);
    starts.push_back(s.cwiseMax(-bound).cwiseMin(bound));
  }

  opt::BoxOptions options;
  options.lower = -bound;
  options.upper = bound;
  options.max_iterations = config.max_iterations;
  options.grad_tol = config.grad_tol;
  options.objective_change_tol = config.objective_change_tol;

  FitReport report;
  Eigen::VectorXd best_params;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    RestartReport entry;
    try {
      const opt::Result res = opt::minimize_box(objective, starts[r], options);
      entry.iterations = res.iterations;
      entry.evaluations = res.evaluations;
      entry.log_likelihood = -res.value;
      entry.reason = res.reason;
      if (entry.log_likelihood > best_lml) {
        best_lml = entry.log_likelihood;
        best_params = res.x;
        report.best = r;
      }
    } catch (const Error& e) {
      entry.failed = true;
      spdlog::debug("restart {} failed: {}", r, e.what());
    }
    report.restarts.push_back(entry);
  }
  if (report.best < 0) throw Error(ErrorKind::kFactorization, "every optimizer restart failed");

  MaternKernel kernel{decode_scales(best_params), std::exp(best_params[n_scales])};
  GPModel model = GPModel::condition(inputs, targets, kernel_dims, std::move(kernel),
                                     std::exp(best_params[n_scales + 1]), mean, standardizer);
  model.set_fit_report(std::move(report));
  return model;
}

}  // namespace cascadegp::gp
