#pragma once

#include <vector>

#include <Eigen/Core>

namespace qhs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using PointList = std::vector<Vector>;

}  // namespace qhs
