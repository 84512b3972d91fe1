#pragma once

// Slow, self-contained reference implementations used to freeze expected values.
// Nothing here uses the library's operators or solvers: every stencil is written
// out per pixel so a mistake in the sparse assembly cannot cancel out.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

enum class Kind { TV, TGV2, ICTV };

struct Problem {
  Kind kind = Kind::TV;
  int W = 0, H = 0;
  double alpha = 0.0, beta = 0.0, gamma = 100.0, mu = 1e-10, h = 1.0;
  Vec f;

  std::size_t n() const { return std::size_t(W) * H; }
  std::size_t size() const { return n() * (kind == Kind::TV ? 1 : kind == Kind::TGV2 ? 3 : 2); }
};

// ---- 1-D building blocks on one W x H block --------------------------------

inline Vec dx(const double* u, int W, int H) {
  Vec out(std::size_t(W) * H, 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x + 1 < W; ++x) out[y * W + x] = u[y * W + x + 1] - u[y * W + x];
  return out;
}

inline Vec dy(const double* u, int W, int H) {
  Vec out(std::size_t(W) * H, 0.0);
  for (int y = 0; y + 1 < H; ++y)
    for (int x = 0; x < W; ++x) out[y * W + x] = u[(y + 1) * W + x] - u[y * W + x];
  return out;
}

// Transposes by scattering each difference back onto its two pixels.
inline Vec dx_t(const Vec& c, int W, int H) {
  Vec out(std::size_t(W) * H, 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x + 1 < W; ++x) {
      out[y * W + x + 1] += c[y * W + x];
      out[y * W + x] -= c[y * W + x];
    }
  return out;
}

inline Vec dy_t(const Vec& c, int W, int H) {
  Vec out(std::size_t(W) * H, 0.0);
  for (int y = 0; y + 1 < H; ++y)
    for (int x = 0; x < W; ++x) {
      out[(y + 1) * W + x] += c[y * W + x];
      out[y * W + x] -= c[y * W + x];
    }
  return out;
}

inline void axpy(Vec& y, double a, const Vec& x, std::size_t offset = 0) {
  for (std::size_t k = 0; k < x.size(); ++k) y[offset + k] += a * x[k];
}

inline double huber(double norm, double gamma) {
  return norm >= 1.0 / gamma ? norm - 0.5 / gamma : 0.5 * gamma * norm * norm;
}

// d huber / d g = g * min(gamma, 1/|g|)
inline double huber_scale(double norm, double gamma) { return norm >= 1.0 / gamma ? 1.0 / norm : gamma; }

// ---- energy ------------------------------------------------------------------

/// Per-pixel vectors of one regulariser term, as separate component arrays.
struct Term {
  double weight = 0.0;
  std::vector<Vec> comps;
};

inline std::vector<Term> terms(const Problem& p, const Vec& z) {
  const int W = p.W, H = p.H;
  const std::size_t n = p.n();
  const double ih = 1.0 / p.h;
  std::vector<Term> out;
  auto scaled = [](Vec v, double s) {
    for (double& x : v) x *= s;
    return v;
  };
  switch (p.kind) {
    case Kind::TV:
      out.push_back({p.alpha, {scaled(dx(z.data(), W, H), ih), scaled(dy(z.data(), W, H), ih)}});
      break;
    case Kind::TGV2: {
      const double* v = z.data();
      const double* w1 = z.data() + n;
      const double* w2 = z.data() + 2 * n;
      Vec a = scaled(dx(v, W, H), ih), b = scaled(dy(v, W, H), ih);
      for (std::size_t k = 0; k < n; ++k) a[k] -= w1[k], b[k] -= w2[k];
      out.push_back({p.alpha, {a, b}});
      Vec e11 = scaled(dx(w1, W, H), ih), e22 = scaled(dy(w2, W, H), ih);
      Vec e12 = dy(w1, W, H);
      const Vec t = dx(w2, W, H);
      // Off-diagonal (Dy w1 + Dx w2)/2 counted twice in the Frobenius norm.
      for (std::size_t k = 0; k < n; ++k) e12[k] = (e12[k] + t[k]) * ih / std::sqrt(2.0);
      out.push_back({p.beta, {e11, e12, e22}});
      break;
    }
    case Kind::ICTV: {
      Vec d(n);
      for (std::size_t k = 0; k < n; ++k) d[k] = z[k] - z[n + k];
      out.push_back({p.alpha, {scaled(dx(d.data(), W, H), ih), scaled(dy(d.data(), W, H), ih)}});
      const Vec vx = dx(z.data() + n, W, H), vy = dy(z.data() + n, W, H);
      const double s = ih * ih;
      out.push_back({p.beta,
                     {scaled(dx(vx.data(), W, H), s), scaled(dy(vx.data(), W, H), s), scaled(dx(vy.data(), W, H), s),
                      scaled(dy(vy.data(), W, H), s)}});
      break;
    }
  }
  return out;
}

inline double sumsq(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

/// mu/2 <z, M z>: H^1 seminorm-plus-L2 on every block, except the ICTV v block
/// which has |grad v|^2 + |D grad v|^2 and no L2 term.
inline double elliptic(const Problem& p, const Vec& z) {
  const int W = p.W, H = p.H;
  const std::size_t n = p.n();
  const double ih2 = 1.0 / (p.h * p.h);
  auto h1 = [&](const double* u) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += u[k] * u[k];
    return s + ih2 * (sumsq(dx(u, W, H)) + sumsq(dy(u, W, H)));
  };
  double s = h1(z.data());
  if (p.kind == Kind::TGV2) s += h1(z.data() + n) + h1(z.data() + 2 * n);
  if (p.kind == Kind::ICTV) {
    const Vec vx = dx(z.data() + n, W, H), vy = dy(z.data() + n, W, H);
    s += ih2 * (sumsq(vx) + sumsq(vy));
    s += ih2 * ih2 * (sumsq(dx(vx.data(), W, H)) + sumsq(dy(vx.data(), W, H)) + sumsq(dx(vy.data(), W, H)) +
                      sumsq(dy(vy.data(), W, H)));
  }
  return 0.5 * p.mu * s;
}

inline double energy(const Problem& p, const Vec& z) {
  const std::size_t n = p.n();
  double e = 0.0;
  for (std::size_t k = 0; k < n; ++k) e += 0.5 * (z[k] - p.f[k]) * (z[k] - p.f[k]);
  for (const Term& t : terms(p, z))
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (const Vec& c : t.comps) s += c[k] * c[k];
      e += t.weight * huber(std::sqrt(s), p.gamma);
    }
  return e + elliptic(p, z);
}

/// Analytic gradient of energy(), assembled by hand-written transposes.
inline Vec energy_grad(const Problem& p, const Vec& z) {
  const int W = p.W, H = p.H;
  const std::size_t n = p.n();
  const double ih = 1.0 / p.h, ih2 = ih * ih;
  Vec g(p.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) g[k] = z[k] - p.f[k];

  const auto ts = terms(p, z);
  // Weighted Huber derivative per term, per component.
  std::vector<std::vector<Vec>> q(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    q[j].assign(ts[j].comps.size(), Vec(n));
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (const Vec& c : ts[j].comps) s += c[k] * c[k];
      const double sc = ts[j].weight * huber_scale(std::sqrt(s), p.gamma);
      for (std::size_t c = 0; c < ts[j].comps.size(); ++c) q[j][c][k] = sc * ts[j].comps[c][k];
    }
  }

  auto h1_grad = [&](std::size_t off) {
    const double* u = z.data() + off;
    const Vec ux = dx(u, W, H), uy = dy(u, W, H);
    for (std::size_t k = 0; k < n; ++k) g[off + k] += p.mu * u[k];
    axpy(g, p.mu * ih2, dx_t(ux, W, H), off);
    axpy(g, p.mu * ih2, dy_t(uy, W, H), off);
  };

  switch (p.kind) {
    case Kind::TV:
      axpy(g, ih, dx_t(q[0][0], W, H));
      axpy(g, ih, dy_t(q[0][1], W, H));
      h1_grad(0);
      break;
    case Kind::TGV2: {
      axpy(g, ih, dx_t(q[0][0], W, H));
      axpy(g, ih, dy_t(q[0][1], W, H));
      axpy(g, -1.0, q[0][0], n);
      axpy(g, -1.0, q[0][1], 2 * n);
      const double r = ih / std::sqrt(2.0);
      axpy(g, ih, dx_t(q[1][0], W, H), n);
      axpy(g, r, dy_t(q[1][1], W, H), n);
      axpy(g, r, dx_t(q[1][1], W, H), 2 * n);
      axpy(g, ih, dy_t(q[1][2], W, H), 2 * n);
      h1_grad(0);
      h1_grad(n);
      h1_grad(2 * n);
      break;
    }
    case Kind::ICTV: {
      Vec a = dx_t(q[0][0], W, H);
      axpy(a, 1.0, dy_t(q[0][1], W, H));
      axpy(g, ih, a);
      axpy(g, -ih, a, n);
      // H^T c = Dx^T Dx^T c0 + Dx^T Dy^T c1 + Dy^T Dx^T c2 + Dy^T Dy^T c3
      Vec hv = dx_t(dx_t(q[1][0], W, H), W, H);
      axpy(hv, 1.0, dx_t(dy_t(q[1][1], W, H), W, H));
      axpy(hv, 1.0, dy_t(dx_t(q[1][2], W, H), W, H));
      axpy(hv, 1.0, dy_t(dy_t(q[1][3], W, H), W, H));
      axpy(g, ih2, hv, n);
      h1_grad(0);
      const double* v = z.data() + n;
      const Vec vx = dx(v, W, H), vy = dy(v, W, H);
      axpy(g, p.mu * ih2, dx_t(vx, W, H), n);
      axpy(g, p.mu * ih2, dy_t(vy, W, H), n);
      Vec m = dx_t(dx_t(dx(vx.data(), W, H), W, H), W, H);
      axpy(m, 1.0, dx_t(dy_t(dy(vx.data(), W, H), W, H), W, H));
      axpy(m, 1.0, dy_t(dx_t(dx(vy.data(), W, H), W, H), W, H));
      axpy(m, 1.0, dy_t(dy_t(dy(vy.data(), W, H), W, H), W, H));
      axpy(g, p.mu * ih2 * ih2, m, n);
      break;
    }
  }
  return g;
}

/// Upper bound on the Lipschitz constant of energy_grad (|Dx|, |Dy| <= 2).
inline double lipschitz_bound(const Problem& p) {
  const double ih = 1.0 / p.h;
  double l1 = 0.0, l2 = 0.0, m = 1.0 + 8.0 * ih * ih;
  switch (p.kind) {
    case Kind::TV: l1 = 8.0 * ih * ih; break;
    case Kind::TGV2:
      l1 = (std::sqrt(8.0) * ih + 1.0) * (std::sqrt(8.0) * ih + 1.0);
      l2 = 8.0 * ih * ih;
      break;
    case Kind::ICTV:
      l1 = 16.0 * ih * ih;
      l2 = 64.0 * ih * ih * ih * ih;
      m += 64.0 * ih * ih * ih * ih;
      break;
  }
  return 1.0 + p.gamma * (p.alpha * l1 + p.beta * l2) + p.mu * m;
}

struct MinimiseResult {
  Vec z;
  long iterations = 0;
  double grad_inf = 0.0;
};

/// FISTA with gradient-based adaptive restart and a fixed 1/L step.
inline MinimiseResult minimise(const Problem& p, double grad_tol = 1e-11, long max_iters = 5'000'000) {
  const double step = 1.0 / lipschitz_bound(p);
  Vec x(p.size(), 0.0);
  std::copy(p.f.begin(), p.f.end(), x.begin());
  Vec y = x, x_prev = x;
  double t = 1.0;
  MinimiseResult r;
  for (long it = 0; it < max_iters; ++it) {
    const Vec gy = energy_grad(p, y);
    x_prev = x;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = y[k] - step * gy[k];
    // Restart when the momentum points uphill.
    double dot = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) dot += gy[k] * (x[k] - x_prev[k]);
    if (dot > 0.0) {
      t = 1.0;
      y = x;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + (t - 1.0) / t_next * (x[k] - x_prev[k]);
      t = t_next;
    }
    if (it % 64 == 0) {
      const Vec gx = energy_grad(p, x);
      double gi = 0.0;
      for (double v : gx) gi = std::max(gi, std::abs(v));
      r.grad_inf = gi;
      r.iterations = it;
      if (gi <= grad_tol) break;
    }
  }
  r.z = x;
  return r;
}

// ---- statistics ----------------------------------------------------------------

/// Regularised incomplete beta I_x(a, b) by the Lentz continued fraction.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta) / a;
  const double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m < 10000; ++m) {
    for (int parity = 0; parity < 2; ++parity) {
      const double num = parity == 0 ? m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m))
                                     : -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      f *= c * d;
    }
    if (std::abs(c * d - 1.0) < 1e-16) break;
  }
  return front * f;
}

/// P(T > t) for Student's t with nu degrees of freedom.
inline double t_upper_tail(double t, double nu) {
  const double x = nu / (nu + t * t);
  const double half = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? half : 1.0 - half;
}

/// Quantile by bisection on the upper tail.
inline double t_quantile(double level, double nu) {
  double lo = 0.0, hi = 1.0;
  while (t_upper_tail(hi, nu) > 1.0 - level) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_upper_tail(mid, nu) > 1.0 - level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct TTest {
  double t, critical, p_value;
  bool significant;
};

inline TTest paired_t(const Vec& a, const Vec& b, double level = 0.95) {
  const std::size_t n = a.size();
  Vec d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / double(n - 1));
  const double t = mean / (sd / std::sqrt(double(n)));
  const double crit = t_quantile(level, double(n - 1));
  return {t, crit, t_upper_tail(std::abs(t), double(n - 1)), std::abs(t) > crit};
}

// ---- image quality ------------------------------------------------------------

/// SSIM with a direct (non-separable) 11x11 Gaussian window, replicate padding.
inline double ssim(const Vec& u, const Vec& r, int W, int H) {
  double w[11][11], total = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) total += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0.0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double mu = 0, mr = 0, uu = 0, rr = 0, ur = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const int yy = std::clamp(y + i - 5, 0, H - 1), xx = std::clamp(x + j - 5, 0, W - 1);
          const double a = u[yy * W + xx], b = r[yy * W + xx], k = w[i][j] / total;
          mu += k * a, mr += k * b, uu += k * a * a, rr += k * b * b, ur += k * a * b;
        }
      const double su = uu - mu * mu, sr = rr - mr * mr, sur = ur - mu * mr;
      acc += (2 * mu * mr + c1) * (2 * sur + c2) / ((mu * mu + mr * mr + c1) * (su + sr + c2));
    }
  return acc / (double(W) * H);
}

}  // namespace oracle
