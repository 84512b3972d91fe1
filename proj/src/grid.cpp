#include "bilearn/grid.hpp"

#include "bilearn/errors.hpp"
#include "bilearn/huber.hpp"

#include <cmath>
#include <stdexcept>

namespace bilearn {

namespace {

void check_extent(int width, int height) {
  if (width < 2 || height < 2) throw std::invalid_argument("grid must be at least 2x2");
}

template <class A, class B>
void require_same(const A& a, const B& b) {
  if (a.width != b.width || a.height != b.height) throw ShapeMismatch("field extents differ");
}

// Forward difference along x, zero on the last column.
Eigen::VectorXd diff_x(const Eigen::VectorXd& u, int w, int h) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) out[y * w + x] = u[y * w + x + 1] - u[y * w + x];
  return out;
}

Eigen::VectorXd diff_y(const Eigen::VectorXd& u, int w, int h) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  for (int y = 0; y + 1 < h; ++y)
    for (int x = 0; x < w; ++x) out[y * w + x] = u[(y + 1) * w + x] - u[y * w + x];
  return out;
}

Eigen::VectorXd diff_x_adj(const Eigen::VectorXd& p, int w, int h) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      if (x + 1 < w) v -= p[y * w + x];
      if (x >= 1) v += p[y * w + x - 1];
      out[y * w + x] = v;
    }
  return out;
}

Eigen::VectorXd diff_y_adj(const Eigen::VectorXd& p, int w, int h) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      if (y + 1 < h) v -= p[y * w + x];
      if (y >= 1) v += p[(y - 1) * w + x];
      out[y * w + x] = v;
    }
  return out;
}

}  // namespace

ImageGrid::ImageGrid(int width, int height, double fill)
    : width(width), height(height) {
  check_extent(width, height);
  values = Eigen::VectorXd::Constant(Eigen::Index(width) * height, fill);
}

ImageGrid::ImageGrid(int width, int height, Eigen::VectorXd v)
    : width(width), height(height), values(std::move(v)) {
  check_extent(width, height);
  if (values.size() != Eigen::Index(width) * height) throw ShapeMismatch("value count != W*H");
}

VectorField2::VectorField2(int width, int height, double fill) : width(width), height(height) {
  check_extent(width, height);
  x = Eigen::VectorXd::Constant(Eigen::Index(width) * height, fill);
  y = x;
}

SymTensorField2::SymTensorField2(int width, int height, double fill)
    : width(width), height(height) {
  check_extent(width, height);
  a = Eigen::VectorXd::Constant(Eigen::Index(width) * height, fill);
  b = a;
  c = a;
}

double inner(const ImageGrid& u, const ImageGrid& v) {
  require_same(u, v);
  return u.values.dot(v.values);
}

double inner(const VectorField2& p, const VectorField2& q) {
  require_same(p, q);
  return p.x.dot(q.x) + p.y.dot(q.y);
}

double inner(const SymTensorField2& s, const SymTensorField2& t) {
  require_same(s, t);
  return s.a.dot(t.a) + 2.0 * s.b.dot(t.b) + s.c.dot(t.c);
}

double norm(const ImageGrid& u) { return u.values.norm(); }
double norm(const VectorField2& p) { return std::sqrt(inner(p, p)); }
double norm(const SymTensorField2& t) { return std::sqrt(inner(t, t)); }

VectorField2 grad(const ImageGrid& u) {
  VectorField2 g;
  g.width = u.width;
  g.height = u.height;
  g.x = diff_x(u.values, u.width, u.height);
  g.y = diff_y(u.values, u.width, u.height);
  return g;
}

ImageGrid grad_adj(const VectorField2& p) {
  return ImageGrid(p.width, p.height,
                   diff_x_adj(p.x, p.width, p.height) + diff_y_adj(p.y, p.width, p.height));
}

SymTensorField2 sym_grad(const VectorField2& w) {
  SymTensorField2 t;
  t.width = w.width;
  t.height = w.height;
  t.a = diff_x(w.x, w.width, w.height);
  t.b = 0.5 * (diff_y(w.x, w.width, w.height) + diff_x(w.y, w.width, w.height));
  t.c = diff_y(w.y, w.width, w.height);
  return t;
}

VectorField2 sym_grad_adj(const SymTensorField2& t) {
  // <Ew, T> = <Dx w1, a> + 2 <(Dy w1 + Dx w2)/2, b> + <Dy w2, c>
  VectorField2 w;
  w.width = t.width;
  w.height = t.height;
  w.x = diff_x_adj(t.a, t.width, t.height) + diff_y_adj(t.b, t.width, t.height);
  w.y = diff_x_adj(t.b, t.width, t.height) + diff_y_adj(t.c, t.width, t.height);
  return w;
}

double huber_sum(const VectorField2& p, double gamma) {
  const HuberParam h(gamma);
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) s += huber_value(Eigen::Vector2d(p.x[k], p.y[k]), h);
  return s;
}

double huber_sum(const SymTensorField2& t, double gamma) {
  const HuberParam h(gamma);
  double s = 0.0;
  // Frobenius norm: the off-diagonal enters twice.
  for (Eigen::Index k = 0; k < t.size(); ++k)
    s += huber_value(Eigen::Vector3d(t.a[k], std::sqrt(2.0) * t.b[k], t.c[k]), h);
  return s;
}

}  // namespace bilearn
