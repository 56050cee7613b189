#pragma once

#include <Eigen/Dense>

namespace mirrorflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace mirrorflow
