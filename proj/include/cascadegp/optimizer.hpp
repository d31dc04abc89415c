#pragma once

// Box-constrained limited-memory quasi-Newton minimizer (projected L-BFGS).
//
// Convergence follows the L-BFGS-B conventions: a run stops when the
// infinity norm of the projected gradient falls below `grad_tol`, or when
// the relative reduction (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) falls
// below `objective_change_tol`, or after `max_iterations` accepted steps.

#include <Eigen/Dense>

#include <functional>

namespace cascadegp::opt {

struct BoxOptions {
  double lower = -10.0;
  double upper = 10.0;
  int max_iterations = 1000;
  double grad_tol = 1e-5;
  double objective_change_tol = 2e-9;
  int memory = 10;
};

enum class StopReason { kProjectedGradient, kObjectiveChange, kMaxIterations, kLineSearchFailure };

const char* to_string(StopReason reason);

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  StopReason reason = StopReason::kMaxIterations;
};

/// Objective returns f(x) and writes the gradient into `grad` (already sized).
/// It may throw cascadegp::Error; during a line search such a point is
/// treated as f = +inf and the step is shortened.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

Result minimize_box(const Objective& objective, const Eigen::VectorXd& x0, const BoxOptions& options);

/// max_i |P(x - g) - x|_i for the box [lower, upper].
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double lower, double upper);

}  // namespace cascadegp::opt
