#pragma once

#include "bilearn/discretisation.hpp"
#include "bilearn/grid.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace bilearn {

enum class LinearSolverKind {
  /// Factorise the full primal-dual Newton matrix (sparse LU).
  Full,
  /// Eliminate the pixelwise-diagonal dual blocks and factorise the primal Schur
  /// complement, which is SPD (sparse Cholesky/LDL^T); dual increments are recovered pixelwise.
  SchurReduced,
};

struct SSNConfig {
  double armijo_c = 1e-4;
  double tol = 1e-5;
  int max_iters = 200;
  LinearSolverKind linear_solver = LinearSolverKind::SchurReduced;
  /// Keep a per-iteration record in SolveStats::trace.
  bool record_trace = false;

  void validate() const;
};

/// Primal tuple: TV u; TGV2 (v, w); ICTV (u, v) with mean(v) = 0.
struct PrimalState {
  RegulariserKind kind = RegulariserKind::TV;
  int width = 0;
  int height = 0;
  Eigen::VectorXd z;

  Eigen::Index pixels() const { return Eigen::Index(width) * height; }
  /// The denoised image (u for TV/ICTV, v for TGV2).
  ImageGrid image() const;
  /// TGV2 only.
  VectorField2 w() const;
  /// ICTV only.
  ImageGrid v() const;

  /// SSN starting point: image = f, auxiliary variables zero.
  static PrimalState initial(const ImageGrid& f, RegulariserKind kind);
};

/// Dual multipliers q_j, one per regulariser term, stacked component-major.
/// Symmetric tensors use the orthonormal (a, sqrt(2) b, c) coordinates.
struct DualState {
  int count = 0;
  std::array<int, 2> dims{0, 0};
  std::array<Eigen::VectorXd, 2> q;
  int width = 0;
  int height = 0;

  VectorField2 q1() const;
  /// TGV2 only: q_2 as a symmetric tensor field.
  SymTensorField2 q2_tensor() const;

  static DualState zeros(const Discretisation& disc);
};

struct SSNIterate {
  int iteration = 0;
  double merit = 0.0;         // 1/2 |residual|^2 before the step
  double step_length = 0.0;   // tau
  double step_measure = 0.0;  // tau |dy| / max(1, |y|)
  double max_dual_ratio = 0.0;  // max_j max_x |q_j(x)| / alpha_j after projection
};

struct SolveStats {
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // |residual| of the primal-dual system at the returned state
  double step_measure = 0.0;
  double max_dual_ratio = 0.0;
  double wall_time_s = 0.0;
  std::vector<SSNIterate> trace;
};

struct DenoiseResult {
  PrimalState primal;
  DualState dual;
  SolveStats stats;
};

/// Smoothed denoising energy 1/2|u-f|^2 + alpha sum|A_1 z|_gamma + beta sum|A_2 z|_gamma + mu/2 |z|_{H^1}^2.
double energy(const PrimalState& state, const ImageGrid& f, const Params& params);
double energy(const Discretisation& disc, const Eigen::VectorXd& z, const Eigen::VectorXd& f, const Params& params);

/// Gradient of the energy in z, i.e. the residual of the weak optimality condition.
Eigen::VectorXd optimality_residual(const Discretisation& disc, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& f, const Params& params);

/// Radial projection q_j(x) <- q_j(x) min(1, alpha_j / |q_j(x)|).
DualState project_dual(const DualState& q, const Params& params);

/// Infeasible semismooth Newton solve of the smoothed denoising problem.
/// warm_start, if given, replaces the default initialisation.
DenoiseResult solve_denoise(const ImageGrid& f, RegulariserKind kind, const Params& params,
                            const SSNConfig& cfg = {}, const DenoiseResult* warm_start = nullptr);
DenoiseResult solve_denoise(const Discretisation& disc, const ImageGrid& f, const Params& params,
                            const SSNConfig& cfg = {}, const DenoiseResult* warm_start = nullptr);

/// One Newton direction at (z, q) (q is projected first). Exposed so both
/// linear-solver routes can be compared directly.
struct NewtonDirection {
  Eigen::VectorXd dz;
  std::array<Eigen::VectorXd, 2> dq;
};
NewtonDirection newton_direction(const Discretisation& disc, const Eigen::VectorXd& z, const DualState& q,
                                 const Eigen::VectorXd& f, const Params& params, LinearSolverKind solver);

}  // namespace bilearn
