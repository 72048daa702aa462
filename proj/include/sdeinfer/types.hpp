#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace sdeinfer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using VectorCRef = Eigen::Ref<const Vector>;
using VectorRef = Eigen::Ref<Vector>;
using MatrixRef = Eigen::Ref<Matrix>;

// Allocation-free callables: the caller owns the output buffer and sizes it.
using ScalarField = std::function<double(VectorCRef)>;
using VectorField = std::function<void(VectorCRef, VectorRef)>;
using MatrixField = std::function<void(VectorCRef, MatrixRef)>;

}  // namespace sdeinfer
