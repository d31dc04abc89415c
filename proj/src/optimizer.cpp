#include "cascadegp/optimizer.hpp"

#include "cascadegp/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace cascadegp::opt {
namespace {

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd clamp(const Eigen::VectorXd& x, double lower, double upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Variables pinned at a bound with the gradient pushing outward.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double lower,
                                                  double upper) {
  Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
  const double eps = 1e-12 * std::max(1.0, std::max(std::abs(lower), std::abs(upper)));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    active[i] = (x[i] <= lower + eps && g[i] > 0.0) || (x[i] >= upper - eps && g[i] < 0.0);
  }
  return active;
}

Eigen::VectorXd two_loop(const Eigen::VectorXd& g, const std::deque<CurvaturePair>& memory) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(memory.size());
  for (int k = static_cast<int>(memory.size()) - 1; k >= 0; --k) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kProjectedGradient: return "projected_gradient";
    case StopReason::kObjectiveChange: return "objective_change";
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kLineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double lower, double upper) {
  if (x.size() == 0) return 0.0;
  return (clamp(x - g, lower, upper) - x).cwiseAbs().maxCoeff();
}

Result minimize_box(const Objective& objective, const Eigen::VectorXd& x0, const BoxOptions& options) {
  if (!(options.lower < options.upper)) throw Error(ErrorKind::kInvalidArgument, "empty box");
  if (!(options.grad_tol > 0.0) || !(options.objective_change_tol >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "grad_tol must be > 0 and objective_change_tol >= 0");
  }

  Result result;
  result.x = clamp(x0, options.lower, options.upper);
  result.gradient.resize(x0.size());
  result.value = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    throw Error(ErrorKind::kNonFinite, "objective is not finite at the starting point");
  }

  std::deque<CurvaturePair> memory;
  Eigen::VectorXd grad_trial(x0.size());

  while (true) {
    if (projected_gradient_norm(result.x, result.gradient, options.lower, options.upper) < options.grad_tol) {
      result.reason = StopReason::kProjectedGradient;
      return result;
    }
    if (result.iterations >= options.max_iterations) {
      result.reason = StopReason::kMaxIterations;
      return result;
    }

    const auto active = active_set(result.x, result.gradient, options.lower, options.upper);
    Eigen::VectorXd g_free = result.gradient;
    for (Eigen::Index i = 0; i < g_free.size(); ++i) {
      if (active[i]) g_free[i] = 0.0;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd direction = two_loop(g_free, memory);
      for (Eigen::Index i = 0; i < direction.size(); ++i) {
        if (active[i]) direction[i] = 0.0;
      }
      double slope = direction.dot(result.gradient);
      if (!(slope < 0.0)) {
        memory.clear();
        direction = -g_free;
        slope = direction.dot(result.gradient);
        if (!(slope < 0.0)) break;
      }

      // Unscaled steepest descent gets a conservative first trial step.
      double step = memory.empty() ? std::min(1.0, 1.0 / direction.cwiseAbs().maxCoeff()) : 1.0;
      for (int trial = 0; trial < 40; ++trial) {
        const Eigen::VectorXd x_trial = clamp(result.x + step * direction, options.lower, options.upper);
        const Eigen::VectorXd s = x_trial - result.x;
        if (s.cwiseAbs().maxCoeff() == 0.0) break;
        double f_trial = std::numeric_limits<double>::infinity();
        try {
          f_trial = objective(x_trial, grad_trial);
        } catch (const Error&) {
          f_trial = std::numeric_limits<double>::infinity();
        }
        ++result.evaluations;
        const double decrease = result.gradient.dot(s);
        if (std::isfinite(f_trial) && grad_trial.allFinite() && f_trial <= result.value + 1e-4 * decrease) {
          const Eigen::VectorXd y = grad_trial - result.gradient;
          const double sy = s.dot(y);
          if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
            memory.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
          }
          const double f_prev = result.value;
          result.x = x_trial;
          result.value = f_trial;
          result.gradient = grad_trial;
          ++result.iterations;
          accepted = true;
          const double scale = std::max({std::abs(f_prev), std::abs(f_trial), 1.0});
          if ((f_prev - f_trial) / scale <= options.objective_change_tol) {
            result.reason = StopReason::kObjectiveChange;
            return result;
          }
          break;
        }
        // Safeguarded quadratic interpolation on the step length.
        double next = 0.5 * step;
        if (std::isfinite(f_trial)) {
          const double d0 = decrease / step;
          const double denom = 2.0 * (f_trial - result.value - d0 * step);
          if (denom > 0.0) next = std::clamp(-d0 * step * step / denom, 0.1 * step, 0.5 * step);
        } else {
          next = 0.1 * step;
        }
        step = next;
      }
      if (!accepted) memory.clear();
    }
    if (!accepted) {
      result.reason = StopReason::kLineSearchFailure;
      return result;
    }
  }
}

}  // namespace cascadegp::opt
