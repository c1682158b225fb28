#pragma once

#include <Eigen/Core>

namespace uniterp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

}  // namespace uniterp
