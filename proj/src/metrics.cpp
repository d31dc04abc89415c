#include "cascadegp/metrics.hpp"

#include "cascadegp/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cascadegp::bench {

double nrmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size()) throw Error(ErrorKind::kDimensionMismatch, "nrmse series lengths differ");
  if (truth.size() < 2) throw Error(ErrorKind::kInvalidArgument, "nrmse needs at least 2 points");
  const double range = truth.maxCoeff() - truth.minCoeff();
  if (!(range > 0.0)) throw Error(ErrorKind::kInvalidArgument, "nrmse undefined for a constant ground truth");
  const double rmse = std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(truth.size()));
  return rmse / range;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kDimensionMismatch, "spearman series lengths differ");
  if (a.size() < 3) throw Error(ErrorKind::kInvalidArgument, "spearman needs at least 3 observations");
  const Eigen::VectorXd ra = average_ranks(a).array() - average_ranks(a).mean();
  const Eigen::VectorXd rb = average_ranks(b).array() - average_ranks(b).mean();
  const double denom = std::sqrt(ra.squaredNorm() * rb.squaredNorm());
  if (!(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return ra.dot(rb) / denom;
}

CorrelationMatrix spearman_matrix(const Eigen::MatrixXd& columns, std::vector<std::string> names) {
  const Eigen::Index n = columns.cols();
  if (static_cast<Eigen::Index>(names.size()) != n) throw Error(ErrorKind::kDimensionMismatch, "column names");
  if (columns.rows() < 3) throw Error(ErrorKind::kInvalidArgument, "spearman matrix needs at least 3 rows");

  // Centered, unit-norm rank columns turn the matrix into one product.
  Eigen::MatrixXd ranks(columns.rows(), n);
  std::vector<bool> constant(n, false);
  CorrelationMatrix out;
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::VectorXd r = average_ranks(columns.col(c));
    r.array() -= r.mean();
    const double norm = r.norm();
    if (norm > 0.0) {
      ranks.col(c) = r / norm;
    } else {
      ranks.col(c).setZero();
      constant[c] = true;
      out.constant_columns.push_back(names[c]);
      spdlog::warn("column '{}' is constant; its Spearman correlations are set to 0", names[c]);
    }
  }
  out.values = (ranks.transpose() * ranks).cwiseAbs().cwiseMin(1.0);
  for (Eigen::Index c = 0; c < n; ++c) out.values(c, c) = constant[c] ? 0.0 : 1.0;
  out.names = std::move(names);
  return out;
}

CorrelationMatrix spearman_matrix(const data::RawTrajectory& traj) {
  const int n = traj.dof();
  std::vector<std::string> names;
  Eigen::MatrixXd columns(traj.rows(), 4 * n);
  int c = 0;
  for (const char* prefix : {"q", "qd", "qdd", "tau"}) {
    for (int j = 1; j <= n; ++j) {
      names.push_back(std::string(prefix) + "_" + std::to_string(j));
      columns.col(c++) = traj.column(names.back());
    }
  }
  return spearman_matrix(columns, std::move(names));
}

}  // namespace cascadegp::bench
