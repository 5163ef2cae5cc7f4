#pragma once

#include <Eigen/Dense>

namespace diffbias {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace diffbias
