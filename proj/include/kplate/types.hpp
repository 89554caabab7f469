#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace kplate {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
/// Compressed row storage.
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

inline SpMat sparse_from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SpMat A(rows, cols);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

}  // namespace kplate
