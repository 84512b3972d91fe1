#include "bilearn/denoiser.hpp"

#include "bilearn/errors.hpp"
#include "bilearn/huber.hpp"
#include "spd_solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace bilearn {

namespace {

using Triplet = Eigen::Triplet<double>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

SmallVec gather(const Eigen::VectorXd& field, int dim, Eigen::Index n, Eigen::Index k) {
  SmallVec v(dim);
  for (int c = 0; c < dim; ++c) v[c] = field[c * n + k];
  return v;
}

void scatter(Eigen::VectorXd& field, const SmallVec& v, Eigen::Index n, Eigen::Index k) {
  for (int c = 0; c < v.size(); ++c) field[c * n + k] = v[c];
}

// Pins entry p of a singular-by-constants system: zero row/column, unit diagonal.
void pin_entry(SpMat& k, Eigen::Index p) {
  k.prune([p](Eigen::Index r, Eigen::Index c, double) { return r != p && c != p; });
  k.coeffRef(p, p) = 1.0;
  k.makeCompressed();
}

struct Residual {
  Eigen::VectorXd r1;
  std::array<Eigen::VectorXd, 2> r2;
  std::array<Eigen::VectorXd, 2> az;
  std::array<Eigen::VectorXd, 2> m;  // max(1/gamma, |A_j z|) per pixel
  double merit = 0.0;
};

Residual residual(const Discretisation& disc, const SpMat& l, const Eigen::VectorXd& z, const DualState& q,
                  const Eigen::VectorXd& f_ext, const Params& params) {
  const Eigen::Index n = disc.pixels();
  const auto w = Discretisation::weights(disc.kind(), params);
  const double thr = 1.0 / params.gamma;
  Residual r;
  r.r1 = f_ext - l * z;
  for (int j = 0; j < disc.block_count(); ++j) {
    const int d = disc.dim(j);
    r.r1 -= disc.op(j).transpose() * q.q[j];
    r.az[j] = disc.op(j) * z;
    r.m[j].resize(n);
    r.r2[j].resize(d * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double m = std::max(thr, gather(r.az[j], d, n, k).norm());
      r.m[j][k] = m;
      for (int c = 0; c < d; ++c) r.r2[j][c * n + k] = w[j] * r.az[j][c * n + k] - m * q.q[j][c * n + k];
    }
  }
  double s = r.r1.squaredNorm();
  for (int j = 0; j < disc.block_count(); ++j) s += r.r2[j].squaredNorm();
  r.merit = 0.5 * s;
  return r;
}

// Per-pixel block (alpha_j I - sym(q zhat^T))/m on the saturated set, alpha_j I/m
// where |A_j z| < 1/gamma. PSD whenever |q| <= alpha_j, so the reduced matrix is SPD.
SpMat dual_elimination_block(const Residual& r, const DualState& q, int j, int d, Eigen::Index n, double weight,
                             double thr) {
  std::vector<Triplet> t;
  t.reserve(std::size_t(d) * d * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double m = r.m[j][k];
    SmallMat blk = weight * SmallMat::Identity(d, d);
    const SmallVec zk = gather(r.az[j], d, n, k);
    const double zn = zk.norm();
    if (zn >= thr && zn > 0.0) {
      const SmallVec qk = gather(q.q[j], d, n, k);
      const SmallVec zh = zk / zn;
      blk -= 0.5 * (qk * zh.transpose() + zh * qk.transpose());
    }
    blk /= m;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        if (blk(a, b) != 0.0) t.emplace_back(a * n + k, b * n + k, blk(a, b));
  }
  SpMat p(d * n, d * n);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

NewtonDirection solve_newton(const Discretisation& disc, const SpMat& l, const Residual& r, const DualState& q,
                             const Params& params, LinearSolverKind kind) {
  const Eigen::Index n = disc.pixels();
  const Eigen::Index np = disc.primal_size();
  const auto w = Discretisation::weights(disc.kind(), params);
  const double thr = 1.0 / params.gamma;
  std::array<SpMat, 2> p;
  for (int j = 0; j < disc.block_count(); ++j) p[j] = dual_elimination_block(r, q, j, disc.dim(j), n, w[j], thr);

  NewtonDirection dir;
  if (kind == LinearSolverKind::SchurReduced) {
    SpMat k = l;
    Eigen::VectorXd rhs = r.r1;
    for (int j = 0; j < disc.block_count(); ++j) {
      const SpMat& a = disc.op(j);
      k += SpMat(a.transpose() * (p[j] * a));
      rhs -= a.transpose() * (r.r2[j].array() / r.m[j].replicate(disc.dim(j), 1).array()).matrix();
    }
    if (disc.gauge_index() >= 0) {
      pin_entry(k, disc.gauge_index());
      rhs[disc.gauge_index()] = 0.0;
    }
    dir.dz = detail::spd_solve(k, rhs, "Schur-reduced Newton system");
    disc.fix_gauge(dir.dz);
    for (int j = 0; j < disc.block_count(); ++j) {
      const Eigen::VectorXd rm = r.r2[j].array() / r.m[j].replicate(disc.dim(j), 1).array();
      dir.dq[j] = rm + p[j] * (disc.op(j) * dir.dz);
    }
    return dir;
  }

  // Full primal-dual system
  //   [ L      A_j^T  ] [dz ]   [R1 ]
  //   [ C_j    D(m_j) ] [dq_j] = [R2_j],   C_j = -m_j P_j A_j.
  Eigen::Index rows = np;
  std::array<Eigen::Index, 2> offset{0, 0};
  for (int j = 0; j < disc.block_count(); ++j) {
    offset[j] = rows;
    rows += disc.dim(j) * n;
  }
  std::array<SpMat, 2> at, c, dm;
  std::vector<BlockEntry> blocks{{0, 0, &l}};
  for (int j = 0; j < disc.block_count(); ++j) {
    const Eigen::VectorXd mrep = r.m[j].replicate(disc.dim(j), 1);
    at[j] = disc.op(j).transpose();
    c[j] = -(mrep.asDiagonal() * (p[j] * disc.op(j)));
    dm[j] = SpMat(mrep.size(), mrep.size());
    dm[j].reserve(Eigen::VectorXi::Constant(mrep.size(), 1));
    for (Eigen::Index i = 0; i < mrep.size(); ++i) dm[j].insert(i, i) = mrep[i];
    blocks.push_back({0, offset[j], &at[j]});
    blocks.push_back({offset[j], 0, &c[j]});
    blocks.push_back({offset[j], offset[j], &dm[j]});
  }
  SpMat big = assemble_blocks(rows, rows, blocks);
  Eigen::VectorXd rhs(rows);
  rhs.head(np) = r.r1;
  for (int j = 0; j < disc.block_count(); ++j) rhs.segment(offset[j], r.r2[j].size()) = r.r2[j];
  if (disc.gauge_index() >= 0) {
    pin_entry(big, disc.gauge_index());
    rhs[disc.gauge_index()] = 0.0;
  }
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(big);
  lu.factorize(big);
  if (lu.info() != Eigen::Success) throw LinearSolveFailure("full Newton system factorisation failed");
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw LinearSolveFailure("full Newton step is not finite");
  dir.dz = sol.head(np);
  disc.fix_gauge(dir.dz);
  for (int j = 0; j < disc.block_count(); ++j) dir.dq[j] = sol.segment(offset[j], disc.dim(j) * n);
  return dir;
}

double max_dual_ratio(const DualState& q, const Params& params) {
  const std::array<double, 2> w{params.alpha, params.beta};
  double worst = 0.0;
  for (int j = 0; j < q.count; ++j) {
    const Eigen::Index n = q.q[j].size() / q.dims[j];
    for (Eigen::Index k = 0; k < n; ++k) worst = std::max(worst, gather(q.q[j], q.dims[j], n, k).norm() / w[j]);
  }
  return worst;
}

double stacked_norm(const Eigen::VectorXd& z, const std::array<Eigen::VectorXd, 2>& q, int count) {
  double s = z.squaredNorm();
  for (int j = 0; j < count; ++j) s += q[j].squaredNorm();
  return std::sqrt(s);
}

constexpr double kMeritTauMin = 1.0 / 64.0;
constexpr double kEnergyTauMin = 1e-12;
// Below this relative residual no further decrease is representable.
constexpr double kResidualFloor = 1e-12;

}  // namespace

void SSNConfig::validate() const {
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("armijo_c must lie in (0,1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
}

ImageGrid PrimalState::image() const { return ImageGrid(width, height, Eigen::VectorXd(z.head(pixels()))); }

VectorField2 PrimalState::w() const {
  if (kind != RegulariserKind::TGV2) throw std::logic_error("w() is defined for TGV2 only");
  VectorField2 out;
  out.width = width;
  out.height = height;
  out.x = z.segment(pixels(), pixels());
  out.y = z.segment(2 * pixels(), pixels());
  return out;
}

ImageGrid PrimalState::v() const {
  if (kind != RegulariserKind::ICTV) throw std::logic_error("v() is defined for ICTV only");
  return ImageGrid(width, height, Eigen::VectorXd(z.segment(pixels(), pixels())));
}

PrimalState PrimalState::initial(const ImageGrid& f, RegulariserKind kind) {
  PrimalState s;
  s.kind = kind;
  s.width = f.width;
  s.height = f.height;
  const Eigen::Index n = f.size();
  const Eigen::Index np = kind == RegulariserKind::TV ? n : (kind == RegulariserKind::TGV2 ? 3 * n : 2 * n);
  s.z = Eigen::VectorXd::Zero(np);
  s.z.head(n) = f.values;
  return s;
}

VectorField2 DualState::q1() const {
  VectorField2 out;
  out.width = width;
  out.height = height;
  const Eigen::Index n = Eigen::Index(width) * height;
  out.x = q[0].head(n);
  out.y = q[0].segment(n, n);
  return out;
}

SymTensorField2 DualState::q2_tensor() const {
  if (count < 2 || dims[1] != 3) throw std::logic_error("q2_tensor() is defined for TGV2 only");
  SymTensorField2 t;
  t.width = width;
  t.height = height;
  const Eigen::Index n = Eigen::Index(width) * height;
  t.a = q[1].head(n);
  t.b = q[1].segment(n, n) / std::sqrt(2.0);
  t.c = q[1].segment(2 * n, n);
  return t;
}

DualState DualState::zeros(const Discretisation& disc) {
  DualState d;
  d.count = disc.block_count();
  d.width = disc.width();
  d.height = disc.height();
  for (int j = 0; j < d.count; ++j) {
    d.dims[j] = disc.dim(j);
    d.q[j] = Eigen::VectorXd::Zero(disc.dim(j) * disc.pixels());
  }
  return d;
}

double energy(const Discretisation& disc, const Eigen::VectorXd& z, const Eigen::VectorXd& f, const Params& params) {
  if (z.size() != disc.primal_size() || f.size() != disc.pixels()) throw ShapeMismatch("energy: shape mismatch");
  const Eigen::Index n = disc.pixels();
  const auto w = Discretisation::weights(disc.kind(), params);
  const HuberParam h(params.gamma);
  double e = 0.5 * (z.head(n) - f).squaredNorm();
  e += 0.5 * params.mu * z.dot(disc.elliptic() * z);
  for (int j = 0; j < disc.block_count(); ++j) {
    const Eigen::VectorXd az = disc.op(j) * z;
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += huber_value(gather(az, disc.dim(j), n, k), h);
    e += w[j] * s;
  }
  return e;
}

double energy(const PrimalState& state, const ImageGrid& f, const Params& params) {
  if (state.width != f.width || state.height != f.height) throw ShapeMismatch("energy: state and data differ");
  const Discretisation disc(state.kind, f.width, f.height, params.spacing(f.width, f.height));
  return energy(disc, state.z, f.values, params);
}

Eigen::VectorXd optimality_residual(const Discretisation& disc, const Eigen::VectorXd& z, const Eigen::VectorXd& f,
                                    const Params& params) {
  const Eigen::Index n = disc.pixels();
  const auto w = Discretisation::weights(disc.kind(), params);
  const HuberParam h(params.gamma);
  Eigen::VectorXd g = params.mu * (disc.elliptic() * z);
  g.head(n) += z.head(n) - f;
  for (int j = 0; j < disc.block_count(); ++j) {
    const int d = disc.dim(j);
    const Eigen::VectorXd az = disc.op(j) * z;
    Eigen::VectorXd hz(az.size());
    for (Eigen::Index k = 0; k < n; ++k) scatter(hz, huber_grad(gather(az, d, n, k), h), n, k);
    g += w[j] * (disc.op(j).transpose() * hz);
  }
  return g;
}

DualState project_dual(const DualState& q, const Params& params) {
  const std::array<double, 2> w{params.alpha, params.beta};
  DualState out = q;
  for (int j = 0; j < q.count; ++j) {
    const int d = q.dims[j];
    const Eigen::Index n = q.q[j].size() / d;
    for (Eigen::Index k = 0; k < n; ++k) {
      const SmallVec v = gather(q.q[j], d, n, k);
      const double nv = v.norm();
      if (nv > w[j]) scatter(out.q[j], v * (w[j] / nv), n, k);
    }
  }
  return out;
}

namespace {

// q_j = alpha_j h_gamma(A_j z): the dual that zeroes the second residual block.
DualState consistent_dual(const Discretisation& disc, const Eigen::VectorXd& z, const Params& params) {
  const Eigen::Index n = disc.pixels();
  const auto w = Discretisation::weights(disc.kind(), params);
  const HuberParam h(params.gamma);
  DualState q = DualState::zeros(disc);
  for (int j = 0; j < q.count; ++j) {
    const Eigen::VectorXd az = disc.op(j) * z;
    for (Eigen::Index k = 0; k < n; ++k) scatter(q.q[j], w[j] * huber_grad(gather(az, q.dims[j], n, k), h), n, k);
  }
  return q;
}

}  // namespace

NewtonDirection newton_direction(const Discretisation& disc, const Eigen::VectorXd& z, const DualState& q,
                                 const Eigen::VectorXd& f, const Params& params, LinearSolverKind solver) {
  const SpMat l = disc.system_operator(params.mu);
  const DualState qp = project_dual(q, params);
  const Residual r = residual(disc, l, z, qp, disc.embed_image(f), params);
  return solve_newton(disc, l, r, qp, params, solver);
}

DenoiseResult solve_denoise(const ImageGrid& f, RegulariserKind kind, const Params& params, const SSNConfig& cfg,
                            const DenoiseResult* warm_start) {
  const Discretisation disc(kind, f.width, f.height, params.spacing(f.width, f.height));
  return solve_denoise(disc, f, params, cfg, warm_start);
}

DenoiseResult solve_denoise(const Discretisation& disc, const ImageGrid& f, const Params& params,
                            const SSNConfig& cfg, const DenoiseResult* warm_start) {
  const auto t0 = std::chrono::steady_clock::now();
  params.validate(disc.kind());
  cfg.validate();
  if (f.width != disc.width() || f.height != disc.height()) throw ShapeMismatch("solve_denoise: data extent");
  if (!f.values.allFinite()) throw std::invalid_argument("solve_denoise: data not finite");

  const SpMat l = disc.system_operator(params.mu);
  const Eigen::VectorXd f_ext = disc.embed_image(f.values);

  Eigen::VectorXd z;
  DualState q;
  if (warm_start != nullptr && warm_start->primal.kind == disc.kind() &&
      warm_start->primal.z.size() == disc.primal_size()) {
    z = warm_start->primal.z;
    q = project_dual(warm_start->dual, params);
  } else {
    z = PrimalState::initial(f, disc.kind()).z;
    q = DualState::zeros(disc);
  }
  disc.fix_gauge(z);

  DenoiseResult out;
  SolveStats& stats = out.stats;
  Residual r = residual(disc, l, z, q, f_ext, params);
  Eigen::VectorXd best_z = z;
  DualState best_q = q;
  double best_merit = r.merit;

  for (int it = 0; it < cfg.max_iters; ++it) {
    if (r.merit == 0.0) {
      stats.converged = true;
      break;
    }
    // The iterate q may be infeasible; the Jacobian is built with its projection.
    const DualState qp = project_dual(q, params);
    stats.max_dual_ratio = std::max(stats.max_dual_ratio, max_dual_ratio(qp, params));
    const double ynorm = stacked_norm(z, q.q, q.count);

    Eigen::VectorXd z_try;
    DualState q_try;
    Residual r_try;
    const NewtonDirection dir = solve_newton(disc, l, r, qp, params, cfg.linear_solver);
    const auto trial = [&](double t) {
      z_try = z + t * dir.dz;
      q_try = q;
      for (int j = 0; j < q.count; ++j) q_try.q[j] += t * dir.dq[j];
      r_try = residual(disc, l, z_try, q_try, f_ext, params);
    };

    // Armijo backtracking on 1/2 |residual|^2.
    double tau = 0.0;
    for (double t = 1.0; t >= kMeritTauMin; t *= 0.5) {
      trial(t);
      if (r_try.merit <= (1.0 - 2.0 * cfg.armijo_c * t) * r.merit) {
        tau = t;
        break;
      }
    }
    if (tau == 0.0) {
      // Far from the solution the projected Jacobian need not give merit
      // descent. dz still solves K dz = -grad E with K SPD, so step on the
      // energy instead and reset q to its consistent value alpha h(Az).
      const double e0 = energy(disc, z, f.values, params);
      const double slope = -optimality_residual(disc, z, f.values, params).dot(dir.dz);
      for (double t = 1.0; t >= kEnergyTauMin; t *= 0.5) {
        z_try = z + t * dir.dz;
        if (energy(disc, z_try, f.values, params) <= e0 + cfg.armijo_c * t * std::min(slope, 0.0)) {
          tau = t;
          break;
        }
      }
      if (tau > 0.0) {
        q_try = consistent_dual(disc, z_try, params);
        r_try = residual(disc, l, z_try, q_try, f_ext, params);
      }
    }
    if (tau == 0.0) {
      stats.converged = std::sqrt(2.0 * r.merit) <= kResidualFloor * std::max(1.0, ynorm);
      break;
    }
    const double dnorm = stacked_norm(dir.dz, dir.dq, q.count);

    const double measure = tau * dnorm / std::max(1.0, ynorm);
    if (cfg.record_trace) stats.trace.push_back({it + 1, r.merit, tau, measure, max_dual_ratio(qp, params)});
    z = std::move(z_try);
    q = std::move(q_try);
    r = std::move(r_try);
    stats.iterations = it + 1;
    stats.step_measure = measure;
    if (r.merit <= best_merit) {
      best_merit = r.merit;
      best_z = z;
      best_q = q;
    }
    // A short damped step says nothing about proximity to the solution.
    if (measure <= cfg.tol && tau == 1.0) {
      stats.converged = true;
      break;
    }
  }

  if (!stats.converged) {
    z = best_z;
    q = best_q;
    r = residual(disc, l, z, q, f_ext, params);
  }
  stats.residual = std::sqrt(2.0 * r.merit);

  out.primal.kind = disc.kind();
  out.primal.width = disc.width();
  out.primal.height = disc.height();
  out.primal.z = std::move(z);
  out.dual = project_dual(q, params);
  stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace bilearn
