#pragma once

#include <Eigen/Dense>

namespace hogdiff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace hogdiff
