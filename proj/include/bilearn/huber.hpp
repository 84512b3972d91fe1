#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bilearn {

/// Huber smoothing of the Euclidean norm: quadratic below 1/gamma, shifted norm above.
/// gamma = +inf is the unsmoothed norm.
class HuberParam {
 public:
  explicit HuberParam(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("Huber gamma must be positive");
  }
  double gamma() const { return gamma_; }
  double threshold() const { return std::isinf(gamma_) ? 0.0 : 1.0 / gamma_; }

 private:
  double gamma_;
};

template <class Derived>
double huber_value(const Eigen::MatrixBase<Derived>& g, HuberParam h) {
  const double n = g.norm();
  if (std::isinf(h.gamma())) return n;
  if (n >= h.threshold()) return n - 0.5 / h.gamma();
  return 0.5 * h.gamma() * n * n;
}

template <class Derived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, 1, 0, Derived::MaxRowsAtCompileTime, 1> huber_grad(
    const Eigen::MatrixBase<Derived>& g, HuberParam h) {
  const double n = g.norm();
  if (n == 0.0) return g.derived() * 0.0;
  if (n >= h.threshold()) return g.derived() / n;
  return h.gamma() * g.derived();
}

/// Derivative of huber_grad; symmetric PSD on both branches.
template <class Derived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime, 0,
              Derived::MaxRowsAtCompileTime, Derived::MaxRowsAtCompileTime>
huber_jacobian(const Eigen::MatrixBase<Derived>& g, HuberParam h) {
  using Mat = Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime, 0,
                            Derived::MaxRowsAtCompileTime, Derived::MaxRowsAtCompileTime>;
  const auto d = g.size();
  const double n = g.norm();
  if (n < h.threshold() || (n == 0.0 && !std::isinf(h.gamma())))
    return h.gamma() * Mat::Identity(d, d);
  if (n == 0.0) return std::numeric_limits<double>::infinity() * Mat::Identity(d, d);
  return Mat::Identity(d, d) / n - (g.derived() * g.derived().transpose()) / (n * n * n);
}

}  // namespace bilearn
