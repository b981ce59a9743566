#pragma once

#include <Eigen/Dense>

namespace shufreg {

using Index = Eigen::Index;

/// n x d matrix of input features, one row per observation.
using DesignMatrix = Eigen::MatrixXd;

/// Length-n vector of output labels.
using LabelVector = Eigen::VectorXd;

/// Length-d vector of regression coefficients.
using WeightVector = Eigen::VectorXd;

}  // namespace shufreg
