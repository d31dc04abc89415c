#pragma once

#include "cascadegp/datasets.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cascadegp::bench {

/// RMSE divided by the range (max - min) of the ground truth.
double nrmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

/// 1-based ranks; ties receive the average of the ranks they span.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& values);

/// Spearman's rho; NaN when either column is constant.
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct CorrelationMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<std::string> constant_columns;
};

/// |rho| between all columns of `columns` (rows = observations). Constant
/// columns get a zero row and column and are reported.
CorrelationMatrix spearman_matrix(const Eigen::MatrixXd& columns, std::vector<std::string> names);

/// |rho| over the q, qd, qdd and tau columns of a trajectory (4N x 4N).
CorrelationMatrix spearman_matrix(const data::RawTrajectory& traj);

}  // namespace cascadegp::bench
