#pragma once

#include "bilearn/denoiser.hpp"
#include "bilearn/discretisation.hpp"
#include "bilearn/grid.hpp"

#include <Eigen/Core>

#include <string_view>

namespace bilearn {

enum class CostKind {
  /// 1/2 |f0 - u|^2
  L22,
  /// sum_x |D(f0 - u)(x)|_gamma_c
  HuberTVGrad,
};

std::string_view to_string(CostKind kind);
CostKind parse_cost(std::string_view name);

struct CostSpec {
  CostKind kind = CostKind::L22;
  /// Huber parameter of the gradient cost; independent of the solver's gamma.
  double gamma = 100.0;
};

// Costs are plain pixel sums; `spacing` is the grid step used for D so the
// gradient cost sees the same derivatives as the regulariser.

double cost_value(const ImageGrid& u, const ImageGrid& f0, const CostSpec& cost, double spacing = 1.0);

/// Gradient of cost_value with respect to u (one entry per pixel).
Eigen::VectorXd cost_grad_u(const ImageGrid& u, const ImageGrid& f0, const CostSpec& cost, double spacing = 1.0);

/// Multipliers Pi of the adjoint system, in the primal layout of the regulariser.
struct AdjointState {
  RegulariserKind kind = RegulariserKind::TV;
  int width = 0;
  int height = 0;
  Eigen::VectorXd p;

  Eigen::Index pixels() const { return Eigen::Index(width) * height; }
  /// Image-block multiplier p_1.
  ImageGrid p1() const;
};

/// Hessian of the smoothed energy at z, built with the smooth Huber derivative h'_gamma.
/// This is the (symmetric) operator of both the linearised and the adjoint equation.
SpMat adjoint_system_matrix(const Discretisation& disc, const Eigen::VectorXd& z, const Params& params);

/// Matrix-free application of the linearised state operator at z to a direction dz.
Eigen::VectorXd apply_linearised(const Discretisation& disc, const Eigen::VectorXd& z, const Params& params,
                                 const Eigen::VectorXd& dz);

AdjointState solve_adjoint(const Discretisation& disc, const PrimalState& primal, const ImageGrid& f0,
                           const CostSpec& cost, const Params& params);
AdjointState solve_adjoint(const PrimalState& primal, const ImageGrid& f0, const CostSpec& cost,
                           const Params& params);

struct ReducedGradient {
  double g_alpha = 0.0;
  double g_beta = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  /// (g_alpha) for TV, (g_alpha, g_beta) otherwise.
  Eigen::VectorXd as_vector(RegulariserKind kind) const;
};

/// dF/dalpha_j = sum_x h_gamma(A_j z)(x) . (A_j Pi)(x).
ReducedGradient reduced_gradient(const Discretisation& disc, const PrimalState& primal, const AdjointState& adjoint,
                                 const Params& params);
ReducedGradient reduced_gradient(const PrimalState& primal, const AdjointState& adjoint, const Params& params);

/// Fills lambda1/lambda2: the positive part of the gradient component for a weight
/// sitting at the lower bound (within a relative 1e-6), zero otherwise.
void attach_multipliers(ReducedGradient& g, RegulariserKind kind, double alpha, double beta, double lower_bound);

/// Reduced cost F(alpha, beta) = cost(S(alpha, beta)) with its adjoint gradient.
struct ReducedEvaluation {
  double value = 0.0;
  ReducedGradient gradient;
  DenoiseResult state;
};
ReducedEvaluation evaluate_reduced(const Discretisation& disc, const ImageGrid& f, const ImageGrid& f0,
                                   const CostSpec& cost, const Params& params, const SSNConfig& ssn,
                                   const DenoiseResult* warm_start = nullptr, bool with_gradient = true);

}  // namespace bilearn
