#pragma once

#include <Eigen/Core>

#include <algorithm>

namespace bilearn {

/// Scalar field on a W x H pixel lattice, stored row-major (index = y * W + x).
///
/// Inputs are conventionally normalised to [0, 1]; intermediates are not clamped.
struct ImageGrid {
  int width = 0;
  int height = 0;
  Eigen::VectorXd values;

  ImageGrid() = default;
  ImageGrid(int width, int height, double fill = 0.0);
  ImageGrid(int width, int height, Eigen::VectorXd values);

  Eigen::Index size() const { return values.size(); }
  Eigen::Index index(int x, int y) const { return Eigen::Index(y) * width + x; }
  double& operator()(int x, int y) { return values[index(x, y)]; }
  double operator()(int x, int y) const { return values[index(x, y)]; }

  /// Characteristic size max(W, H).
  int ell() const { return std::max(width, height); }

  bool same_shape(const ImageGrid& other) const {
    return width == other.width && height == other.height;
  }
};

/// Per-pixel vector in R^2, e.g. a gradient (d/dx, d/dy).
struct VectorField2 {
  int width = 0;
  int height = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  VectorField2() = default;
  VectorField2(int width, int height, double fill = 0.0);

  Eigen::Index size() const { return x.size(); }
};

/// Per-pixel symmetric 2x2 tensor [[a, b], [b, c]].
///
/// Pairing is the full Frobenius product, so the off-diagonal counts twice:
/// <T, S> = aa' + 2bb' + cc'.
struct SymTensorField2 {
  int width = 0;
  int height = 0;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;

  SymTensorField2() = default;
  SymTensorField2(int width, int height, double fill = 0.0);

  Eigen::Index size() const { return a.size(); }
};

double inner(const ImageGrid& u, const ImageGrid& v);
double inner(const VectorField2& p, const VectorField2& q);
double inner(const SymTensorField2& s, const SymTensorField2& t);

double norm(const ImageGrid& u);
double norm(const VectorField2& p);
double norm(const SymTensorField2& t);

/// Forward differences, replicate (Neumann) boundary, unit spacing.
VectorField2 grad(const ImageGrid& u);
/// Exact adjoint of grad (= -div with the matching boundary).
ImageGrid grad_adj(const VectorField2& p);

/// Symmetrised gradient (Dw + Dw^T) / 2 with the same stencil.
SymTensorField2 sym_grad(const VectorField2& w);
/// Exact adjoint of sym_grad under the weighted Frobenius pairing.
VectorField2 sym_grad_adj(const SymTensorField2& t);

/// Pointwise Huber-regularised norm, summed over pixels.
double huber_sum(const VectorField2& p, double gamma);
double huber_sum(const SymTensorField2& t, double gamma);

}  // namespace bilearn
