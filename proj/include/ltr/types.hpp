// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <Eigen/Core>

namespace ltr {

using Index = Eigen::Index;

template <class F>
using VectorX = Eigen::Matrix<F, Eigen::Dynamic, 1>;
template <class F>
using MatrixX = Eigen::Matrix<F, Eigen::Dynamic, Eigen::Dynamic>;
template <class F>
using ArrayX = Eigen::Array<F, Eigen::Dynamic, 1>;

using VectorXd = VectorX<double>;
using MatrixXd = MatrixX<double>;
using ArrayXd = ArrayX<double>;
using ArrayXi = ArrayX<int>;

}  // namespace ltr
