#pragma once

#include "bilearn/adjoint.hpp"
#include "bilearn/denoiser.hpp"

#include "../oracle/oracle.hpp"

#include <random>

namespace testing {

inline bilearn::ImageGrid random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  bilearn::ImageGrid u(w, h);
  for (auto& v : u.values) v = U(rng);
  return u;
}

/// Two-level image plus seeded noise: edges for every regulariser to act on.
inline bilearn::ImageGrid noisy_step(int n, std::uint64_t seed, double sigma = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> G(0.0, sigma);
  bilearn::ImageGrid f(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) f(x, y) = (x < n / 2 ? 0.2 : 0.8) + 0.3 * y / n + G(rng);
  return f;
}

inline oracle::Problem to_oracle(const bilearn::Discretisation& d, const bilearn::ImageGrid& f,
                                 const bilearn::Params& p) {
  oracle::Problem op;
  op.kind = oracle::Kind(int(d.kind()));
  op.W = d.width();
  op.H = d.height();
  op.alpha = p.alpha;
  op.beta = d.kind() == bilearn::RegulariserKind::TV ? 0.0 : p.beta;
  op.gamma = p.gamma;
  op.mu = p.mu;
  op.h = d.spacing();
  op.f.assign(f.values.data(), f.values.data() + f.size());
  return op;
}

inline oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

constexpr bilearn::RegulariserKind kKinds[] = {bilearn::RegulariserKind::TV, bilearn::RegulariserKind::TGV2,
                                              bilearn::RegulariserKind::ICTV};

}  // namespace testing
