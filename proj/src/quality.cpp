#include "bilearn/quality.hpp"

#include "bilearn/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

namespace bilearn {

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;

std::array<double, 2 * kRadius + 1> gaussian_taps() {
  std::array<double, 2 * kRadius + 1> w{};
  double s = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    w[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
    s += w[i + kRadius];
  }
  for (double& v : w) v /= s;
  return w;
}

// Separable Gaussian blur with clamped (replicate) indexing.
Eigen::VectorXd blur(const Eigen::VectorXd& img, int width, int height) {
  static const auto taps = gaussian_taps();
  Eigen::VectorXd tmp(img.size());
  Eigen::VectorXd out(img.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int i = -kRadius; i <= kRadius; ++i) s += taps[i + kRadius] * img[y * width + std::clamp(x + i, 0, width - 1)];
      tmp[y * width + x] = s;
    }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int i = -kRadius; i <= kRadius; ++i) s += taps[i + kRadius] * tmp[std::clamp(y + i, 0, height - 1) * width + x];
      out[y * width + x] = s;
    }
  return out;
}

void require_same(const ImageGrid& a, const ImageGrid& b, const char* who) {
  if (!a.same_shape(b)) throw ShapeMismatch(std::string(who) + ": image extents differ");
}

}  // namespace

double psnr(const ImageGrid& u, const ImageGrid& ref, double peak) {
  require_same(u, ref, "psnr");
  const double mse = (u.values - ref.values).squaredNorm() / double(u.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

std::string format_metric(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_metric(const std::string& text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError("not a number: '" + text + "'", std::size_t(res.ptr - text.data()));
  return v;
}

double ssim(const ImageGrid& u, const ImageGrid& ref) {
  require_same(u, ref, "ssim");
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const int w = u.width;
  const int h = u.height;
  const Eigen::ArrayXd a = u.values.array();
  const Eigen::ArrayXd b = ref.values.array();
  const Eigen::ArrayXd mu_a = blur(a.matrix(), w, h).array();
  const Eigen::ArrayXd mu_b = blur(b.matrix(), w, h).array();
  const Eigen::ArrayXd saa = blur((a * a).matrix(), w, h).array() - mu_a * mu_a;
  const Eigen::ArrayXd sbb = blur((b * b).matrix(), w, h).array() - mu_b * mu_b;
  const Eigen::ArrayXd sab = blur((a * b).matrix(), w, h).array() - mu_a * mu_b;
  const Eigen::ArrayXd map = ((2.0 * mu_a * mu_b + c1) * (2.0 * sab + c2)) /
                             ((mu_a * mu_a + mu_b * mu_b + c1) * (saa + sbb + c2));
  return map.mean();
}

ImageGrid add_gaussian_noise(const ImageGrid& img, double variance255, std::uint64_t seed) {
  if (!(variance255 >= 0.0)) throw std::invalid_argument("noise variance must be non-negative");
  ImageGrid out = img;
  if (variance255 == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(variance255) / 255.0);
  for (Eigen::Index k = 0; k < out.size(); ++k) out.values[k] += noise(rng);
  return out;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b, double level) {
  if (a.size() != b.size()) throw ShapeMismatch("paired_t_test: samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("paired_t_test: level must lie in (0,1)");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= double(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = std::sqrt(ss / double(n - 1));
  // Spread at rounding level (e.g. a = b + 1 exactly) counts as zero variance.
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  const bool flat = sd <= 16.0 * std::numeric_limits<double>::epsilon() * scale;

  TTestResult r;
  r.df = int(n - 1);
  const boost::math::students_t dist(r.df);
  r.critical = boost::math::quantile(dist, level);
  r.direction = mean > 0.0 ? 1 : (mean < 0.0 ? -1 : 0);
  if (flat && std::abs(mean) <= 16.0 * std::numeric_limits<double>::epsilon() * scale) r.direction = 0;
  if (flat) {
    r.degenerate = true;
    r.t = r.direction == 0 ? 0.0 : r.direction * std::numeric_limits<double>::infinity();
    r.significant = r.direction != 0;
    r.p_value = r.significant ? 0.0 : 0.5;
    return r;
  }
  r.t = mean / (sd / std::sqrt(double(n)));
  r.p_value = boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = std::abs(r.t) > r.critical;
  return r;
}

}  // namespace bilearn
