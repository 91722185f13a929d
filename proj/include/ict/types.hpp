#pragma once

#include <Eigen/Core>

namespace ict {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

}  // namespace ict
