#include "bilearn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace bilearn {

namespace {

void require_size(int size) {
  if (size < 8) throw std::invalid_argument("synthetic images need size >= 8");
}

}  // namespace

ImageGrid piecewise_constant_image(int size) {
  require_size(size);
  ImageGrid img(size, size, 0.2);
  const double s = size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / s;
      const double v = (y + 0.5) / s;
      if (u > 0.1 && u < 0.45 && v > 0.15 && v < 0.6) img(x, y) = 0.75;
      if (u > 0.55 && u < 0.9 && v > 0.55 && v < 0.85) img(x, y) = 0.5;
      if ((u - 0.7) * (u - 0.7) + (v - 0.28) * (v - 0.28) < 0.18 * 0.18) img(x, y) = 0.95;
    }
  return img;
}

ImageGrid geometric_image(int size) {
  require_size(size);
  ImageGrid img(size, size);
  const double s = size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / s;
      const double v = (y + 0.5) / s;
      // Background: a gentle diagonal ramp.
      double val = 0.25 + 0.3 * u + 0.15 * v;
      // Ramp-filled rectangle.
      if (u > 0.08 && u < 0.48 && v > 0.1 && v < 0.45) val = 0.9 - 0.8 * (u - 0.08);
      // Flat disc.
      if ((u - 0.72) * (u - 0.72) + (v - 0.3) * (v - 0.3) < 0.17 * 0.17) val = 0.85;
      // Triangle with a vertical ramp.
      if (v > 0.55 && v < 0.92 && u > 0.1 && u < 0.1 + (v - 0.55) * 1.1) val = 0.2 + 0.6 * (v - 0.55);
      // Smooth bump.
      const double r2 = (u - 0.72) * (u - 0.72) + (v - 0.75) * (v - 0.75);
      if (r2 < 0.2 * 0.2) val = 0.35 + 0.45 * std::cos(0.5 * std::numbers::pi * std::sqrt(r2) / 0.2);
      img(x, y) = val;
    }
  return img;
}

std::vector<CorpusImage> synthetic_corpus(int count, int size, std::uint64_t seed) {
  require_size(size);
  if (count < 1) throw std::invalid_argument("corpus needs at least one image");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<CorpusImage> out;
  const double s = size;
  for (int i = 0; i < count; ++i) {
    // Draw every shape parameter up front so images do not depend on size.
    const double gx = U(rng) - 0.5, gy = U(rng) - 0.5, base = 0.3 + 0.4 * U(rng);
    const int shapes = 3 + int(U(rng) * 3.0);
    struct Shape {
      int type;
      double cx, cy, r, a, b, level, slope;
    };
    std::vector<Shape> list;
    for (int k = 0; k < shapes; ++k)
      list.push_back({int(U(rng) * 3.0), U(rng), U(rng), 0.08 + 0.22 * U(rng), 0.08 + 0.25 * U(rng),
                      0.08 + 0.25 * U(rng), U(rng), 0.8 * (U(rng) - 0.5)});
    const double tex_amp = 0.08 * U(rng), tex_fx = 2.0 + 4.0 * U(rng), tex_fy = 2.0 + 4.0 * U(rng);

    ImageGrid img(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double u = (x + 0.5) / s;
        const double v = (y + 0.5) / s;
        double val = base + 0.4 * (gx * (u - 0.5) + gy * (v - 0.5));
        for (const Shape& sh : list) {
          const double du = u - sh.cx, dv = v - sh.cy;
          bool inside = false;
          switch (sh.type) {
            case 0: inside = du * du + dv * dv < sh.r * sh.r; break;
            case 1: inside = std::abs(du) < sh.a && std::abs(dv) < sh.b; break;
            default: inside = std::abs(du) + std::abs(dv) < sh.r; break;
          }
          if (inside) val = sh.level + sh.slope * du;
        }
        val += tex_amp * std::sin(2.0 * std::numbers::pi * tex_fx * u) * std::sin(2.0 * std::numbers::pi * tex_fy * v);
        img(x, y) = std::clamp(val, 0.0, 1.0);
      }
    char id[16];
    std::snprintf(id, sizeof id, "img%02d", i);
    out.push_back({id, std::move(img)});
  }
  return out;
}

}  // namespace bilearn
