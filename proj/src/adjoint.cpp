#include "bilearn/adjoint.hpp"

#include "bilearn/errors.hpp"
#include "bilearn/huber.hpp"
#include "spd_solver.hpp"

#include <algorithm>
#include <cctype>
#include <string>

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

void require_same(const ImageGrid& a, const ImageGrid& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("cost: image extents differ");
}

}  // namespace

std::string_view to_string(CostKind kind) {
  return kind == CostKind::L22 ? "l22" : "huber-tv-grad";
}

CostKind parse_cost(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "l22" || s == "l2" || s == "l2sq") return CostKind::L22;
  if (s == "huber-tv-grad" || s == "huber" || s == "l1grad" || s == "hubertvgrad") return CostKind::HuberTVGrad;
  throw ConfigError("unknown cost '" + std::string(name) + "'");
}

double cost_value(const ImageGrid& u, const ImageGrid& f0, const CostSpec& cost, double spacing) {
  require_same(u, f0);
  if (cost.kind == CostKind::L22) return 0.5 * (f0.values - u.values).squaredNorm();
  ImageGrid diff(u.width, u.height, Eigen::VectorXd(f0.values - u.values));
  VectorField2 g = grad(diff);
  g.x /= spacing;
  g.y /= spacing;
  return huber_sum(g, cost.gamma);
}

Eigen::VectorXd cost_grad_u(const ImageGrid& u, const ImageGrid& f0, const CostSpec& cost, double spacing) {
  require_same(u, f0);
  if (cost.kind == CostKind::L22) return u.values - f0.values;
  const HuberParam h(cost.gamma);
  ImageGrid diff(u.width, u.height, Eigen::VectorXd(u.values - f0.values));
  VectorField2 g = grad(diff);
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const Eigen::Vector2d hk = huber_grad(Eigen::Vector2d(g.x[k], g.y[k]) / spacing, h);
    g.x[k] = hk[0];
    g.y[k] = hk[1];
  }
  return grad_adj(g).values / spacing;
}

ImageGrid AdjointState::p1() const { return ImageGrid(width, height, Eigen::VectorXd(p.head(pixels()))); }

SpMat adjoint_system_matrix(const Discretisation& disc, const Eigen::VectorXd& z, const Params& params) {
  const Eigen::Index n = disc.pixels();
  const auto w = Discretisation::weights(disc.kind(), params);
  const HuberParam h(params.gamma);
  SpMat hess = disc.system_operator(params.mu);
  for (int j = 0; j < disc.block_count(); ++j) {
    const int d = disc.dim(j);
    const Eigen::VectorXd az = disc.op(j) * z;
    std::vector<Triplet> t;
    t.reserve(std::size_t(d) * d * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const SmallMat jac = huber_jacobian(gather(az, d, n, k), h);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          if (jac(a, b) != 0.0) t.emplace_back(a * n + k, b * n + k, w[j] * jac(a, b));
    }
    SpMat blocks(d * n, d * n);
    blocks.setFromTriplets(t.begin(), t.end());
    hess += SpMat(disc.op(j).transpose() * (blocks * disc.op(j)));
  }
  hess.makeCompressed();
  return hess;
}

Eigen::VectorXd apply_linearised(const Discretisation& disc, const Eigen::VectorXd& z, const Params& params,
                                 const Eigen::VectorXd& dz) {
  const Eigen::Index n = disc.pixels();
  const auto w = Discretisation::weights(disc.kind(), params);
  const HuberParam h(params.gamma);
  Eigen::VectorXd out = params.mu * (disc.elliptic() * dz);
  out.head(n) += dz.head(n);
  for (int j = 0; j < disc.block_count(); ++j) {
    const int d = disc.dim(j);
    const Eigen::VectorXd az = disc.op(j) * z;
    const Eigen::VectorXd adz = disc.op(j) * dz;
    Eigen::VectorXd tmp(adz.size());
    for (Eigen::Index k = 0; k < n; ++k) {
      const SmallVec v = huber_jacobian(gather(az, d, n, k), h) * gather(adz, d, n, k);
      for (int c = 0; c < d; ++c) tmp[c * n + k] = v[c];
    }
    out += w[j] * (disc.op(j).transpose() * tmp);
  }
  return out;
}

AdjointState solve_adjoint(const Discretisation& disc, const PrimalState& primal, const ImageGrid& f0,
                           const CostSpec& cost, const Params& params) {
  if (primal.kind != disc.kind() || primal.z.size() != disc.primal_size())
    throw ShapeMismatch("solve_adjoint: primal does not match discretisation");
  const ImageGrid u = primal.image();
  Eigen::VectorXd rhs = disc.embed_image(-cost_grad_u(u, f0, cost, disc.spacing()));

  AdjointState adj;
  adj.kind = disc.kind();
  adj.width = disc.width();
  adj.height = disc.height();
  if (rhs.isZero(0.0)) {
    adj.p = Eigen::VectorXd::Zero(disc.primal_size());
    return adj;
  }

  SpMat hess = adjoint_system_matrix(disc, primal.z, params);
  if (disc.gauge_index() >= 0) {
    const Eigen::Index g = disc.gauge_index();
    hess.prune([g](Eigen::Index r, Eigen::Index c, double) { return r != g && c != g; });
    hess.coeffRef(g, g) = 1.0;
    rhs[g] = 0.0;
  }
  adj.p = detail::spd_solve(hess, rhs, "adjoint system");
  disc.fix_gauge(adj.p);
  return adj;
}

AdjointState solve_adjoint(const PrimalState& primal, const ImageGrid& f0, const CostSpec& cost,
                           const Params& params) {
  const Discretisation disc(primal.kind, primal.width, primal.height, params.spacing(primal.width, primal.height));
  return solve_adjoint(disc, primal, f0, cost, params);
}

Eigen::VectorXd ReducedGradient::as_vector(RegulariserKind kind) const {
  if (kind == RegulariserKind::TV) return Eigen::VectorXd::Constant(1, g_alpha);
  return Eigen::Vector2d(g_alpha, g_beta);
}

ReducedGradient reduced_gradient(const Discretisation& disc, const PrimalState& primal, const AdjointState& adjoint,
                                 const Params& params) {
  const Eigen::Index n = disc.pixels();
  const HuberParam h(params.gamma);
  std::array<double, 2> g{0.0, 0.0};
  for (int j = 0; j < disc.block_count(); ++j) {
    const int d = disc.dim(j);
    const Eigen::VectorXd az = disc.op(j) * primal.z;
    const Eigen::VectorXd ap = disc.op(j) * adjoint.p;
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += huber_grad(gather(az, d, n, k), h).dot(gather(ap, d, n, k));
    g[j] = s;
  }
  ReducedGradient out;
  out.g_alpha = g[0];
  out.g_beta = g[1];
  return out;
}

ReducedGradient reduced_gradient(const PrimalState& primal, const AdjointState& adjoint, const Params& params) {
  const Discretisation disc(primal.kind, primal.width, primal.height, params.spacing(primal.width, primal.height));
  return reduced_gradient(disc, primal, adjoint, params);
}

void attach_multipliers(ReducedGradient& g, RegulariserKind kind, double alpha, double beta, double lower_bound) {
  const auto at_lower = [lower_bound](double x) { return x <= lower_bound * (1.0 + 1e-6); };
  g.lambda1 = at_lower(alpha) ? std::max(0.0, g.g_alpha) : 0.0;
  g.lambda2 = (kind != RegulariserKind::TV && at_lower(beta)) ? std::max(0.0, g.g_beta) : 0.0;
}

ReducedEvaluation evaluate_reduced(const Discretisation& disc, const ImageGrid& f, const ImageGrid& f0,
                                   const CostSpec& cost, const Params& params, const SSNConfig& ssn,
                                   const DenoiseResult* warm_start, bool with_gradient) {
  ReducedEvaluation ev;
  ev.state = solve_denoise(disc, f, params, ssn, warm_start);
  ev.value = cost_value(ev.state.primal.image(), f0, cost, disc.spacing());
  if (with_gradient) {
    const AdjointState adj = solve_adjoint(disc, ev.state.primal, f0, cost, params);
    ev.gradient = reduced_gradient(disc, ev.state.primal, adj, params);
  }
  return ev;
}

}  // namespace bilearn
