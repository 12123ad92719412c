#pragma once

#include <Eigen/Dense>

namespace fadegp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace fadegp
