#pragma once

#include "bilearn/adjoint.hpp"
#include "bilearn/denoiser.hpp"
#include "bilearn/quality.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace bilearn {

struct BFGSConfig {
  double armijo_c = 1e-4;
  /// Relative parameter change that ends the outer loop.
  double rho = 1e-5;
  double theta = 1e-8;
  double Theta = 10.0;
  int max_outer_iters = 100;
  /// The first trial step is min(1, boundary_fraction * sigma_max).
  double boundary_fraction = 0.5;
  /// Safety cap on halvings inside one line search.
  int max_backtracks = 60;

  void validate() const;
};

/// Placement of the TV result in the two-parameter warm start.
enum class WarmInitOrder {
  /// (alpha_TV delta0, alpha_TV), B1 = diag(B_TV delta0, B_TV). The default.
  AsPublished,
  /// (alpha_TV, alpha_TV delta0), B1 = diag(B_TV, B_TV delta0): starts at beta/alpha = 1/ell.
  Swapped,
};

/// Everything the outer loop needs besides the data.
struct LearnSettings {
  /// gamma, mu and the domain scaling are taken from here; alpha/beta are ignored.
  Params base;
  SSNConfig ssn;
  BFGSConfig bfgs;
  WarmInitOrder warm_order = WarmInitOrder::AsPublished;
};

struct TrainingPair {
  ImageGrid noisy;  // f
  ImageGrid clean;  // f0
};

struct LearnIterate {
  int iteration = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step_length = 0.0;  // sigma accepted after this iterate (0 on the last)
  int backtracks = 0;
  int inner_iters = 0;       // SSN iterations spent on this outer iteration
  bool bfgs_skipped = false;  // curvature s^T r < 0
};

struct LearnRecord {
  RegulariserKind kind = RegulariserKind::TV;
  CostSpec cost;
  double alpha = 0.0;
  double beta = 0.0;  // 0 for TV
  double value = 0.0;
  ReducedGradient gradient;  // at the result, with lambda1/lambda2 filled in
  Eigen::MatrixXd B;         // final BFGS matrix
  int outer_iters = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<LearnIterate> trace;

  int inner_solves = 0;
  int inner_iters = 0;
  int inner_unconverged = 0;
  double wall_time_s = 0.0;

  /// Per training pair: denoised image at the result and its quality.
  std::vector<ImageGrid> denoised;
  std::vector<MetricReport> metrics;
};

/// Box-constrained BFGS on sum_i F_i. init is (alpha0) for TV, (alpha0, beta0) otherwise.
/// B1 defaults to N * I for N pairs (the identity scaled with the summed objective).
LearnRecord bfgs_learn(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
                       const LearnSettings& settings, const Eigen::VectorXd& init,
                       const Eigen::MatrixXd* B1 = nullptr);
LearnRecord bfgs_learn(const TrainingPair& pair, RegulariserKind kind, const CostSpec& cost,
                       const LearnSettings& settings, const Eigen::VectorXd& init,
                       const Eigen::MatrixXd* B1 = nullptr);

struct WarmInit {
  Eigen::VectorXd init;  // (alpha_TV delta0, alpha_TV)
  Eigen::MatrixXd B1;    // diag(B_TV delta0, B_TV)
  LearnRecord tv;        // the TV run it came from
};

/// Initial TV parameter 0.1 / ell.
double default_tv_init(int ell);

/// Pure substitution step of the warm start.
WarmInit warm_init_from_tv(double alpha_tv, double b_tv, double delta0,
                           WarmInitOrder order = WarmInitOrder::AsPublished);

/// Warm start: learn TV from 0.1/ell, then map to the two-parameter start with delta0 = 1/ell.
/// ell is the largest max(W, H) over the pairs.
WarmInit warm_init(const std::vector<TrainingPair>& pairs, const CostSpec& cost, const LearnSettings& settings);

/// TV: BFGS from 0.1/ell. TGV2/ICTV: warm_init, then BFGS.
LearnRecord batch_learn(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
                        const LearnSettings& settings);

/// Sum over pairs of F_i and its adjoint gradient at (alpha, beta), all inner solves cold.
struct BatchEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
BatchEvaluation evaluate_batch(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
                               const LearnSettings& settings, const Eigen::VectorXd& params, bool with_gradient = true);

}  // namespace bilearn
