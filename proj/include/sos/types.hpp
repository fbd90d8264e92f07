#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sos {

/// Row-major so that one row is one record.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Flat parameter store of a score network.
using Params = std::vector<double>;

}  // namespace sos
