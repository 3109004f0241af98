#pragma once

#include <Eigen/Dense>

namespace wildrefit {

// Row i of every n x d matrix is the d-vector attached to design point i.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
// Read-only view; binds to vectors and to transposed rows of a Matrix without copying.
using VectorRef = Eigen::Ref<const Vector>;

}  // namespace wildrefit
