#pragma once

#include "bilearn/operators.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <string_view>

namespace bilearn {

enum class RegulariserKind { TV, TGV2, ICTV };

std::string_view to_string(RegulariserKind kind);
RegulariserKind parse_regulariser(std::string_view name);

/// Number of learnable weights: 1 for TV, 2 otherwise.
inline int parameter_count(RegulariserKind kind) { return kind == RegulariserKind::TV ? 1 : 2; }

/// How the pixel lattice is mapped onto the continuous domain.
///
/// UnitSquare places an l x l image on (0,1)^2 (grid spacing 1/l), which is the
/// scale the default learning parameters (alpha0 = 0.1/l, box [1e-8, 10]) and the
/// beta/alpha ~ 1/l observation refer to. Pixel uses unit spacing on (0,l)^2.
enum class DomainScaling { UnitSquare, Pixel };

std::string_view to_string(DomainScaling scaling);
/// "unit" / "unit-square" or "pixel".
DomainScaling parse_scaling(std::string_view name);

struct Params {
  double alpha = 0.1;
  double beta = 0.1;  // ignored for TV
  double gamma = 100.0;
  double mu = 1e-10;
  DomainScaling scaling = DomainScaling::UnitSquare;

  double spacing(int width, int height) const;
  void validate(RegulariserKind kind) const;
};

/// Linear structure of the smoothed denoising energy
///
///   1/2 |u - f|^2 + sum_j alpha_j sum_x |[A_j z](x)|_gamma + mu/2 <z, M z>
///
/// for one regulariser on one lattice. z is the stacked primal tuple:
///   TV:   u
///   TGV2: (v, w1, w2)
///   ICTV: (u, v)
/// The image block always occupies entries [0, N).
class Discretisation {
 public:
  Discretisation(RegulariserKind kind, int width, int height, double spacing);

  RegulariserKind kind() const { return kind_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double spacing() const { return spacing_; }
  Eigen::Index pixels() const { return pixels_; }
  Eigen::Index primal_size() const { return primal_size_; }

  int block_count() const { return block_count_; }
  const SpMat& op(int j) const { return ops_[j]; }
  /// Per-pixel dimension of block j (2 for gradients, 3 for symmetric tensors, 4 for D grad v).
  int dim(int j) const { return dims_[j]; }

  /// H^1 part M of the elliptic term (without mu).
  const SpMat& elliptic() const { return elliptic_; }

  /// L = fidelity identity on the image block + mu * M.
  SpMat system_operator(double mu) const;

  /// ICTV: index of the v entry pinned in linear solves (v is defined up to a constant).
  /// -1 for TV/TGV2.
  Eigen::Index gauge_index() const { return gauge_index_; }
  /// Removes the mean of the gauge block in place.
  void fix_gauge(Eigen::VectorXd& z) const;

  /// f extended by zeros to the primal layout.
  Eigen::VectorXd embed_image(const Eigen::VectorXd& f) const;

  static std::array<double, 2> weights(RegulariserKind, const Params& p) { return {p.alpha, p.beta}; }

 private:
  RegulariserKind kind_;
  int width_;
  int height_;
  double spacing_;
  Eigen::Index pixels_;
  Eigen::Index primal_size_;
  int block_count_;
  std::array<SpMat, 2> ops_;
  std::array<int, 2> dims_{0, 0};
  SpMat elliptic_;
  Eigen::Index gauge_index_ = -1;
};

}  // namespace bilearn
