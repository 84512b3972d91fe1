#include "bilearn/discretisation.hpp"

#include "bilearn/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bilearn {

std::string_view to_string(RegulariserKind kind) {
  switch (kind) {
    case RegulariserKind::TV: return "tv";
    case RegulariserKind::TGV2: return "tgv2";
    case RegulariserKind::ICTV: return "ictv";
  }
  return "?";
}

RegulariserKind parse_regulariser(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "tv") return RegulariserKind::TV;
  if (s == "tgv2" || s == "tgv") return RegulariserKind::TGV2;
  if (s == "ictv") return RegulariserKind::ICTV;
  throw ConfigError("unknown regulariser '" + std::string(name) + "'");
}

std::string_view to_string(DomainScaling scaling) {
  return scaling == DomainScaling::UnitSquare ? "unit" : "pixel";
}

DomainScaling parse_scaling(std::string_view name) {
  if (name == "unit" || name == "unit-square") return DomainScaling::UnitSquare;
  if (name == "pixel") return DomainScaling::Pixel;
  throw ConfigError("unknown domain scaling '" + std::string(name) + "'");
}

double Params::spacing(int width, int height) const {
  return scaling == DomainScaling::UnitSquare ? 1.0 / std::max(width, height) : 1.0;
}

void Params::validate(RegulariserKind kind) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
  if (kind != RegulariserKind::TV && (!(beta > 0.0) || !std::isfinite(beta)))
    throw std::invalid_argument("beta must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
}

Discretisation::Discretisation(RegulariserKind kind, int width, int height, double spacing)
    : kind_(kind), width_(width), height_(height), spacing_(spacing) {
  if (width < 2 || height < 2) throw std::invalid_argument("grid must be at least 2x2");
  const Eigen::Index n = Eigen::Index(width) * height;
  pixels_ = n;
  const double ih = 1.0 / spacing;

  const SpMat id = identity_matrix(n);
  const SpMat id2 = identity_matrix(2 * n);
  const SpMat g = grad_matrix(width, height);
  const SpMat gtg = SpMat(g.transpose() * g);
  const SpMat h1 = SpMat(id + ih * ih * gtg);

  switch (kind) {
    case RegulariserKind::TV:
      primal_size_ = n;
      block_count_ = 1;
      ops_[0] = ih * g;
      dims_ = {2, 0};
      elliptic_ = h1;
      break;
    case RegulariserKind::TGV2: {
      primal_size_ = 3 * n;
      block_count_ = 2;
      const SpMat e = sym_grad_matrix(width, height);
      ops_[0] = assemble_blocks(2 * n, 3 * n, {{0, 0, &g, ih}, {0, n, &id2, -1.0}});
      ops_[1] = assemble_blocks(3 * n, 3 * n, {{0, n, &e, ih}});
      dims_ = {2, 3};
      elliptic_ = assemble_blocks(3 * n, 3 * n, {{0, 0, &h1}, {n, n, &h1}, {2 * n, 2 * n, &h1}});
      break;
    }
    case RegulariserKind::ICTV: {
      primal_size_ = 2 * n;
      block_count_ = 2;
      const SpMat hd = second_diff_matrix(width, height);
      const SpMat hth = SpMat(hd.transpose() * hd);
      // |grad v|^2_{H^1} = |grad v|^2 + |D grad v|^2; no L^2 term in v itself.
      const SpMat vv = SpMat(ih * ih * gtg + ih * ih * ih * ih * hth);
      ops_[0] = assemble_blocks(2 * n, 2 * n, {{0, 0, &g, ih}, {0, n, &g, -ih}});
      ops_[1] = assemble_blocks(4 * n, 2 * n, {{0, n, &hd, ih * ih}});
      dims_ = {2, 4};
      elliptic_ = assemble_blocks(2 * n, 2 * n, {{0, 0, &h1}, {n, n, &vv}});
      gauge_index_ = n;
      break;
    }
  }
  for (int j = 0; j < block_count_; ++j) ops_[j].makeCompressed();
}

SpMat Discretisation::system_operator(double mu) const {
  SpMat l = mu * elliptic_;
  for (Eigen::Index k = 0; k < pixels_; ++k) l.coeffRef(k, k) += 1.0;
  l.makeCompressed();
  return l;
}

void Discretisation::fix_gauge(Eigen::VectorXd& z) const {
  if (gauge_index_ < 0) return;
  auto v = z.segment(gauge_index_, pixels_);
  v.array() -= v.mean();
}

Eigen::VectorXd Discretisation::embed_image(const Eigen::VectorXd& f) const {
  if (f.size() != pixels_) throw ShapeMismatch("image size does not match discretisation");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(primal_size_);
  out.head(pixels_) = f;
  return out;
}

}  // namespace bilearn
