#pragma once

#include "bilearn/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bilearn {

/// 10 log10(peak^2 / MSE). Identical images give +infinity.
double psnr(const ImageGrid& u, const ImageGrid& ref, double peak = 1.0);

/// Text form used in CSV output: "inf" for identical images, otherwise %.17g.
std::string format_metric(double value);
/// Inverse of format_metric (accepts "inf", "+inf", "-inf").
double parse_metric(const std::string& text);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1 and replicate padding at the border.
double ssim(const ImageGrid& u, const ImageGrid& ref);

/// Adds i.i.d. N(0, sigma/255) with sigma^2 = variance255 given on the 0..255
/// intensity scale. No clipping. Bit-identical for equal seeds.
ImageGrid add_gaussian_noise(const ImageGrid& img, double variance255, std::uint64_t seed);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double cost = 0.0;
};

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double critical = 0.0;  // one-tailed critical value at the requested level
  double p_value = 1.0;   // one-tailed, in the direction of the observed mean
  bool significant = false;
  /// +1: a > b, -1: b > a, 0: no difference in the mean.
  int direction = 0;
  /// Differences have zero spread; t is reported as +-infinity (or 0).
  bool degenerate = false;
};

/// One-tailed paired t-test on d = a - b against the Student-t quantile with N-1 df.
/// The tail is the one pointing at the observed mean difference.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b, double level = 0.95);

}  // namespace bilearn
