#pragma once

#include <Eigen/SparseCore>

#include <vector>

namespace bilearn {

using SpMat = Eigen::SparseMatrix<double>;

// Sparse counterparts of the field operators in grid.hpp, on row-major pixel
// vectors. Multi-component fields are stacked component-major: entry c*N + k.

SpMat diff_x_matrix(int width, int height);
SpMat diff_y_matrix(int width, int height);
SpMat identity_matrix(Eigen::Index n);

/// [Dx; Dy], 2N x N.
SpMat grad_matrix(int width, int height);

/// Symmetrised gradient acting on (w1; w2), 3N x 2N, in the orthonormal
/// coordinates (a, sqrt(2) b, c) so that the Euclidean norm of a pixel's
/// three entries is the Frobenius norm of the tensor.
SpMat sym_grad_matrix(int width, int height);

/// Gradient of the gradient: rows (DxDx, DyDx, DxDy, DyDy), 4N x N.
SpMat second_diff_matrix(int width, int height);

/// Places blocks into a larger sparse matrix.
struct BlockEntry {
  Eigen::Index row_offset;
  Eigen::Index col_offset;
  const SpMat* block;
  double scale = 1.0;
};
SpMat assemble_blocks(Eigen::Index rows, Eigen::Index cols, const std::vector<BlockEntry>& blocks);

}  // namespace bilearn
