#include "bilearn/learner.hpp"

#include "bilearn/errors.hpp"
#include "bilearn/parallel.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace bilearn {

namespace {

int param_count(RegulariserKind kind) { return kind == RegulariserKind::TV ? 1 : 2; }

Params params_at(const LearnSettings& s, RegulariserKind kind, const Eigen::VectorXd& x) {
  Params p = s.base;
  p.alpha = x[0];
  p.beta = kind == RegulariserKind::TV ? 0.0 : x[1];
  return p;
}

// Inner solves for every pair at one parameter value, warm-started from `seed`.
struct Evaluation {
  Eigen::VectorXd x;
  double value = 0.0;
  std::vector<double> values;
  std::vector<DenoiseResult> states;
  int inner_iters = 0;
  int unconverged = 0;
};

class BatchProblem {
 public:
  BatchProblem(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
               const LearnSettings& settings)
      : pairs_(pairs), kind_(kind), cost_(cost), settings_(settings) {
    if (pairs.empty()) throw std::invalid_argument("learning needs at least one training pair");
    for (const auto& p : pairs) {
      if (!p.noisy.same_shape(p.clean)) throw ShapeMismatch("training pair: noisy and clean extents differ");
      discs_.push_back(std::make_unique<Discretisation>(kind, p.noisy.width, p.noisy.height,
                                                         settings.base.spacing(p.noisy.width, p.noisy.height)));
    }
  }

  std::size_t size() const { return pairs_.size(); }

  Evaluation solve(const Eigen::VectorXd& x, const std::vector<DenoiseResult>* seed) const {
    const Params p = params_at(settings_, kind_, x);
    Evaluation ev;
    ev.x = x;
    ev.values.resize(size());
    ev.states.resize(size());
    std::vector<std::string> failures(size());
    parallel_for(size(), [&](std::size_t i) {
      try {
        const DenoiseResult* warm = seed ? &(*seed)[i] : nullptr;
        ev.states[i] = solve_denoise(*discs_[i], pairs_[i].noisy, p, settings_.ssn, warm);
        ev.values[i] = cost_value(ev.states[i].primal.image(), pairs_[i].clean, cost_, discs_[i]->spacing());
      } catch (const LinearSolveFailure& e) {
        failures[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < size(); ++i) {
      if (!failures[i].empty())
        throw InnerSolveFailure("inner solve failed on pair " + std::to_string(i) + ": " + failures[i], p.alpha,
                                p.beta);
      ev.value += ev.values[i];
      ev.inner_iters += ev.states[i].stats.iterations;
      ev.unconverged += ev.states[i].stats.converged ? 0 : 1;
    }
    return ev;
  }

  Eigen::VectorXd gradient(const Evaluation& ev) const {
    const Params p = params_at(settings_, kind_, ev.x);
    std::vector<Eigen::VectorXd> parts(size());
    std::vector<std::string> failures(size());
    parallel_for(size(), [&](std::size_t i) {
      try {
        const AdjointState adj = solve_adjoint(*discs_[i], ev.states[i].primal, pairs_[i].clean, cost_, p);
        parts[i] = reduced_gradient(*discs_[i], ev.states[i].primal, adj, p).as_vector(kind_);
      } catch (const LinearSolveFailure& e) {
        failures[i] = e.what();
      }
    });
    Eigen::VectorXd g = Eigen::VectorXd::Zero(param_count(kind_));
    for (std::size_t i = 0; i < size(); ++i) {
      if (!failures[i].empty())
        throw InnerSolveFailure("adjoint solve failed on pair " + std::to_string(i) + ": " + failures[i], p.alpha,
                                p.beta);
      g += parts[i];
    }
    return g;
  }

  const std::vector<TrainingPair>& pairs() const { return pairs_; }

 private:
  const std::vector<TrainingPair>& pairs_;
  RegulariserKind kind_;
  CostSpec cost_;
  LearnSettings settings_;
  std::vector<std::unique_ptr<Discretisation>> discs_;
};

// Largest sigma >= 0 keeping x + sigma d inside [lo, hi] componentwise.
double max_feasible_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double lo, double hi) {
  double s = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (d[k] > 0.0) s = std::min(s, (hi - x[k]) / d[k]);
    if (d[k] < 0.0) s = std::min(s, (lo - x[k]) / d[k]);
  }
  return std::max(s, 0.0);
}

double relative_change(const Eigen::VectorXd& next, const Eigen::VectorXd& prev) {
  return (next - prev).norm() / next.norm();
}

}  // namespace

void BFGSConfig::validate() const {
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("armijo_c must lie in (0,1)");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(theta > 0.0 && theta < Theta)) throw std::invalid_argument("need 0 < theta < Theta");
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
  if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0))
    throw std::invalid_argument("boundary_fraction must lie in (0,1)");
  if (max_backtracks < 1) throw std::invalid_argument("max_backtracks must be >= 1");
}

LearnRecord bfgs_learn(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
                       const LearnSettings& settings, const Eigen::VectorXd& init, const Eigen::MatrixXd* B1) {
  const auto t0 = std::chrono::steady_clock::now();
  const BFGSConfig& cfg = settings.bfgs;
  cfg.validate();
  settings.ssn.validate();
  const int np = param_count(kind);
  if (init.size() != np) throw std::invalid_argument("init must have one entry per learned parameter");
  if ((init.array() < cfg.theta).any() || (init.array() > cfg.Theta).any())
    throw std::invalid_argument("init must lie inside [theta, Theta]");

  const BatchProblem problem(pairs, kind, cost, settings);
  Eigen::MatrixXd B = B1 ? *B1 : Eigen::MatrixXd(double(pairs.size()) * Eigen::MatrixXd::Identity(np, np));
  if (B.rows() != np || B.cols() != np) throw std::invalid_argument("B1 has the wrong size");

  LearnRecord rec;
  rec.kind = kind;
  rec.cost = cost;
  const auto account = [&rec](const Evaluation& ev) {
    rec.inner_solves += int(ev.states.size());
    rec.inner_iters += ev.inner_iters;
    rec.inner_unconverged += ev.unconverged;
  };

  Evaluation cur = problem.solve(init, nullptr);
  account(cur);
  int pending_inner = cur.inner_iters;
  Eigen::VectorXd g_prev;
  Eigen::VectorXd x_prev;
  Eigen::VectorXd g;
  bool have_grad = false;

  for (int i = 0;; ++i) {
    if (i >= cfg.max_outer_iters) {
      rec.stop_reason = "max_outer_iters";
      break;
    }
    g = problem.gradient(cur);
    have_grad = true;

    LearnIterate it;
    it.iteration = i;
    it.alpha = cur.x[0];
    it.beta = np > 1 ? cur.x[1] : 0.0;
    it.value = cur.value;
    it.grad_norm = g.norm();

    if (i >= 1) {
      const Eigen::VectorXd s = cur.x - x_prev;
      const Eigen::VectorXd r = g - g_prev;
      const double sr = s.dot(r);
      if (sr > 0.0) {
        const Eigen::VectorXd bs = B * s;
        B = B - (bs * bs.transpose()) / s.dot(bs) + (r * r.transpose()) / sr;
      } else {
        it.bfgs_skipped = true;
      }
    }
    const Eigen::VectorXd delta = -B.ldlt().solve(g);
    const double slope = g.dot(delta);

    const double sigma_max = max_feasible_step(cur.x, delta, cfg.theta, cfg.Theta);
    double sigma = std::min(1.0, cfg.boundary_fraction * sigma_max);
    std::unique_ptr<Evaluation> accepted;
    std::unique_ptr<Evaluation> best_tried;
    double best_sigma = 0.0;
    bool stop = false;
    for (int bt = 0;; ++bt) {
      Eigen::VectorXd xs = cur.x + sigma * delta;
      Evaluation trial = problem.solve(xs, &cur.states);
      account(trial);
      pending_inner += trial.inner_iters;
      it.backtracks = bt;
      const double change = (xs - cur.x).norm() / xs.norm();
      const bool tiny = !(change >= cfg.rho);
      const bool armijo = trial.value <= cur.value + sigma * cfg.armijo_c * slope;
      if (!tiny && armijo) {
        accepted = std::make_unique<Evaluation>(std::move(trial));
        break;
      }
      if (!best_tried || trial.value < best_tried->value) {
        best_sigma = sigma;
        best_tried = std::make_unique<Evaluation>(std::move(trial));
      }
      if (tiny) {
        if (best_tried->value < cur.value) {
          sigma = best_sigma;
          accepted = std::move(best_tried);
        } else {
          rec.stop_reason = "no decrease above rho";
          rec.converged = true;
          stop = true;
        }
        break;
      }
      if (bt + 1 >= cfg.max_backtracks) {
        rec.stop_reason = "max_backtracks";
        stop = true;
        break;
      }
      sigma *= 0.5;
    }
    it.inner_iters = pending_inner;
    pending_inner = 0;
    if (stop) {
      rec.trace.push_back(it);
      break;
    }
    it.step_length = sigma;
    rec.trace.push_back(it);

    x_prev = cur.x;
    g_prev = g;
    cur = std::move(*accepted);
    have_grad = false;
    if (relative_change(cur.x, x_prev) < cfg.rho) {
      rec.stop_reason = "relative change below rho";
      rec.converged = true;
      break;
    }
  }

  if (!have_grad) g = problem.gradient(cur);
  rec.outer_iters = int(rec.trace.size());
  rec.alpha = cur.x[0];
  rec.beta = np > 1 ? cur.x[1] : 0.0;
  rec.value = cur.value;
  rec.gradient.g_alpha = g[0];
  rec.gradient.g_beta = np > 1 ? g[1] : 0.0;
  attach_multipliers(rec.gradient, kind, rec.alpha, rec.beta, cfg.theta);
  rec.B = B;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    rec.denoised.push_back(cur.states[k].primal.image());
    MetricReport m;
    m.psnr = psnr(rec.denoised.back(), pairs[k].clean);
    m.ssim = ssim(rec.denoised.back(), pairs[k].clean);
    m.cost = cur.values[k];
    rec.metrics.push_back(m);
  }
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

LearnRecord bfgs_learn(const TrainingPair& pair, RegulariserKind kind, const CostSpec& cost,
                       const LearnSettings& settings, const Eigen::VectorXd& init, const Eigen::MatrixXd* B1) {
  return bfgs_learn(std::vector<TrainingPair>{pair}, kind, cost, settings, init, B1);
}

double default_tv_init(int ell) { return 0.1 / ell; }

WarmInit warm_init_from_tv(double alpha_tv, double b_tv, double delta0, WarmInitOrder order) {
  WarmInit w;
  if (order == WarmInitOrder::AsPublished) {
    w.init = Eigen::Vector2d(alpha_tv * delta0, alpha_tv);
    w.B1 = Eigen::Vector2d(b_tv * delta0, b_tv).asDiagonal();
  } else {
    w.init = Eigen::Vector2d(alpha_tv, alpha_tv * delta0);
    w.B1 = Eigen::Vector2d(b_tv, b_tv * delta0).asDiagonal();
  }
  return w;
}

WarmInit warm_init(const std::vector<TrainingPair>& pairs, const CostSpec& cost, const LearnSettings& settings) {
  if (pairs.empty()) throw std::invalid_argument("warm_init needs at least one training pair");
  int ell = 0;
  for (const auto& p : pairs) ell = std::max(ell, p.noisy.ell());
  const Eigen::VectorXd a0 = Eigen::VectorXd::Constant(1, default_tv_init(ell));
  LearnRecord tv = bfgs_learn(pairs, RegulariserKind::TV, cost, settings, a0);
  WarmInit w = warm_init_from_tv(tv.alpha, tv.B(0, 0), 1.0 / ell, settings.warm_order);
  w.init = w.init.cwiseMax(settings.bfgs.theta).cwiseMin(settings.bfgs.Theta);
  w.tv = std::move(tv);
  return w;
}

LearnRecord batch_learn(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
                        const LearnSettings& settings) {
  if (kind == RegulariserKind::TV) {
    int ell = 0;
    for (const auto& p : pairs) ell = std::max(ell, p.noisy.ell());
    return bfgs_learn(pairs, kind, cost, settings, Eigen::VectorXd::Constant(1, default_tv_init(ell)));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const WarmInit w = warm_init(pairs, cost, settings);
  LearnRecord rec = bfgs_learn(pairs, kind, cost, settings, w.init, &w.B1);
  rec.inner_solves += w.tv.inner_solves;
  rec.inner_iters += w.tv.inner_iters;
  rec.inner_unconverged += w.tv.inner_unconverged;
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

BatchEvaluation evaluate_batch(const std::vector<TrainingPair>& pairs, RegulariserKind kind, const CostSpec& cost,
                               const LearnSettings& settings, const Eigen::VectorXd& params, bool with_gradient) {
  if (params.size() != param_count(kind)) throw std::invalid_argument("wrong parameter count");
  const BatchProblem problem(pairs, kind, cost, settings);
  const Evaluation ev = problem.solve(params, nullptr);
  BatchEvaluation out;
  out.value = ev.value;
  if (with_gradient) out.gradient = problem.gradient(ev);
  return out;
}

}  // namespace bilearn
