#include "bilearn/operators.hpp"

#include <cmath>

namespace bilearn {

namespace {
using Triplet = Eigen::Triplet<double>;
}

SpMat diff_x_matrix(int width, int height) {
  const Eigen::Index n = Eigen::Index(width) * height;
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x + 1 < width; ++x) {
      const Eigen::Index k = Eigen::Index(y) * width + x;
      t.emplace_back(k, k, -1.0);
      t.emplace_back(k, k + 1, 1.0);
    }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat diff_y_matrix(int width, int height) {
  const Eigen::Index n = Eigen::Index(width) * height;
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int y = 0; y + 1 < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Eigen::Index k = Eigen::Index(y) * width + x;
      t.emplace_back(k, k, -1.0);
      t.emplace_back(k, k + width, 1.0);
    }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat identity_matrix(Eigen::Index n) {
  SpMat m(n, n);
  m.setIdentity();
  return m;
}

SpMat assemble_blocks(Eigen::Index rows, Eigen::Index cols, const std::vector<BlockEntry>& blocks) {
  std::vector<Triplet> t;
  Eigen::Index nnz = 0;
  for (const auto& b : blocks) nnz += b.block->nonZeros();
  t.reserve(nnz);
  for (const auto& b : blocks)
    for (int outer = 0; outer < b.block->outerSize(); ++outer)
      for (SpMat::InnerIterator it(*b.block, outer); it; ++it)
        t.emplace_back(b.row_offset + it.row(), b.col_offset + it.col(), b.scale * it.value());
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat grad_matrix(int width, int height) {
  const Eigen::Index n = Eigen::Index(width) * height;
  const SpMat dx = diff_x_matrix(width, height);
  const SpMat dy = diff_y_matrix(width, height);
  return assemble_blocks(2 * n, n, {{0, 0, &dx}, {n, 0, &dy}});
}

SpMat sym_grad_matrix(int width, int height) {
  const Eigen::Index n = Eigen::Index(width) * height;
  const SpMat dx = diff_x_matrix(width, height);
  const SpMat dy = diff_y_matrix(width, height);
  const double r = 1.0 / std::sqrt(2.0);  // sqrt(2) * (1/2)
  return assemble_blocks(3 * n, 2 * n,
                         {{0, 0, &dx}, {n, 0, &dy, r}, {n, n, &dx, r}, {2 * n, n, &dy}});
}

SpMat second_diff_matrix(int width, int height) {
  const Eigen::Index n = Eigen::Index(width) * height;
  const SpMat dx = diff_x_matrix(width, height);
  const SpMat dy = diff_y_matrix(width, height);
  const SpMat xx = dx * dx;
  const SpMat yx = dy * dx;
  const SpMat xy = dx * dy;
  const SpMat yy = dy * dy;
  return assemble_blocks(4 * n, n, {{0, 0, &xx}, {n, 0, &yx}, {2 * n, 0, &xy}, {3 * n, 0, &yy}});
}

}  // namespace bilearn
