#pragma once

#include <Eigen/Dense>

namespace phoenix {

// Row-major so that one row is one frame / one evidence vector.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using VecRef = Eigen::Ref<Vector>;
using ConstVecRef = Eigen::Ref<const Vector>;

}  // namespace phoenix
