#include "common.hpp"

#include "bilearn/learner.hpp"
#include "bilearn/synthetic.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

using namespace bilearn;
using namespace testing;

namespace {

TrainingPair pair_for(const ImageGrid& clean, double var, std::uint64_t seed) {
  return {add_gaussian_noise(clean, var, seed), clean};
}

void check_record_invariants(const LearnRecord& rec, const BFGSConfig& cfg) {
  REQUIRE(!rec.trace.empty());
  for (std::size_t k = 1; k < rec.trace.size(); ++k) CHECK(rec.trace[k].value <= rec.trace[k - 1].value);
  for (const LearnIterate& it : rec.trace) {
    CHECK(it.alpha >= cfg.theta);
    CHECK(it.alpha <= cfg.Theta);
    if (rec.kind != RegulariserKind::TV) {
      CHECK(it.beta >= cfg.theta);
      CHECK(it.beta <= cfg.Theta);
    }
  }
  CHECK((rec.B - rec.B.transpose()).norm() <= 1e-12 * rec.B.norm());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(rec.B).eigenvalues().minCoeff() > 0.0);
}

}  // namespace

TEST_CASE("warm init substitution") {
  const WarmInit w = warm_init_from_tv(0.05, 3.0, 1.0 / 128.0);
  CHECK(w.init[0] == doctest::Approx(0.05 / 128.0));
  CHECK(w.init[1] == 0.05);
  CHECK(w.B1(0, 0) == doctest::Approx(3.0 / 128.0));
  CHECK(w.B1(1, 1) == 3.0);
  CHECK(w.B1(0, 1) == 0.0);
  const WarmInit one = warm_init_from_tv(0.05, 3.0, 1.0);
  CHECK(one.init[0] == 0.05);
  CHECK(one.init[1] == 0.05);
  const WarmInit s = warm_init_from_tv(0.05, 3.0, 1.0 / 128.0, WarmInitOrder::Swapped);
  CHECK(s.init[0] == 0.05);
  CHECK(s.init[1] == doctest::Approx(0.05 / 128.0));
  CHECK(default_tv_init(32) == doctest::Approx(0.1 / 32));
}

TEST_CASE("config validation") {
  BFGSConfig c;
  CHECK_NOTHROW(c.validate());
  c.theta = 20.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.armijo_c = 1.5;
  CHECK_THROWS(c.validate());
}

TEST_CASE("TV learning invariants and restart at the optimum") {
  const TrainingPair pr = pair_for(piecewise_constant_image(16), 20.0, 3);
  LearnSettings s;
  const CostSpec cost{CostKind::L22, 100.0};
  const LearnRecord rec = batch_learn({pr}, RegulariserKind::TV, cost, s);
  CHECK(rec.converged);
  check_record_invariants(rec, s.bfgs);
  CHECK(rec.metrics[0].psnr > psnr(pr.noisy, pr.clean));
  CHECK(rec.value == doctest::Approx(rec.metrics[0].cost));

  Eigen::VectorXd init(1);
  init << rec.alpha;
  const LearnRecord again = bfgs_learn(pr, RegulariserKind::TV, cost, s, init);
  CHECK(again.outer_iters <= 2);
  CHECK(std::abs(again.alpha - rec.alpha) <= 1e-3 * rec.alpha);
  // The restart cold-starts the inner solver, so values agree only to inner tolerance.
  CHECK(again.value <= rec.value * (1.0 + 1e-6));
}

TEST_CASE("N = 1 batch equals individual learning") {
  const TrainingPair pr = pair_for(piecewise_constant_image(16), 20.0, 5);
  LearnSettings s;
  const CostSpec cost{CostKind::L22, 100.0};
  Eigen::VectorXd init(1);
  init << default_tv_init(16);
  const LearnRecord a = batch_learn({pr}, RegulariserKind::TV, cost, s);
  const LearnRecord b = bfgs_learn(pr, RegulariserKind::TV, cost, s, init);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].alpha == b.trace[k].alpha);
    CHECK(a.trace[k].value == b.trace[k].value);
  }
}

TEST_CASE("duplicated pair leaves the TGV2 argmin unchanged") {
  const TrainingPair pr = pair_for(geometric_image(16), 20.0, 2);
  LearnSettings s;
  const CostSpec cost{CostKind::L22, 100.0};
  const LearnRecord one = batch_learn({pr}, RegulariserKind::TGV2, cost, s);
  const LearnRecord two = batch_learn({pr, pr}, RegulariserKind::TGV2, cost, s);
  check_record_invariants(one, s.bfgs);
  CHECK(two.alpha == doctest::Approx(one.alpha).epsilon(1e-12));
  CHECK(two.beta == doctest::Approx(one.beta).epsilon(1e-12));
  CHECK(two.value == doctest::Approx(2.0 * one.value).epsilon(1e-12));
  CHECK(two.outer_iters == one.outer_iters);
}

TEST_CASE("batch gradient is the sum of per-pair gradients and matches central differences") {
  const TrainingPair a = pair_for(geometric_image(12), 30.0, 1);
  const TrainingPair b = pair_for(piecewise_constant_image(12), 30.0, 2);
  LearnSettings s;
  s.ssn.tol = 1e-12;
  for (RegulariserKind kind : kKinds)
    for (CostKind ck : {CostKind::L22, CostKind::HuberTVGrad}) {
      const CostSpec cost{ck, 100.0};
      Eigen::VectorXd x(parameter_count(kind));
      x[0] = 0.006;
      if (x.size() > 1) x[1] = 0.0008;
      const BatchEvaluation both = evaluate_batch({a, b}, kind, cost, s, x);
      const BatchEvaluation ea = evaluate_batch({a}, kind, cost, s, x);
      const BatchEvaluation eb = evaluate_batch({b}, kind, cost, s, x);
      CHECK(both.value == doctest::Approx(ea.value + eb.value).epsilon(1e-13));
      CHECK((both.gradient - ea.gradient - eb.gradient).norm() <= 1e-13 * both.gradient.norm());
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-4 * x[j];
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (evaluate_batch({a, b}, kind, cost, s, xp, false).value -
                           evaluate_batch({a, b}, kind, cost, s, xm, false).value) /
                          (2 * h);
        CHECK(std::abs(both.gradient[j] - fd) <= 1e-3 * std::max(std::abs(fd), 1e-8));
      }
    }
}

TEST_CASE("learner rejects bad input") {
  const TrainingPair pr = pair_for(piecewise_constant_image(16), 20.0, 5);
  LearnSettings s;
  Eigen::VectorXd init(2);
  init << 0.01, 0.01;
  CHECK_THROWS(bfgs_learn(pr, RegulariserKind::TV, {}, s, init));
  CHECK_THROWS(batch_learn({}, RegulariserKind::TV, {}, s));
  TrainingPair bad = pr;
  bad.clean = ImageGrid(8, 8);
  CHECK_THROWS(batch_learn({bad}, RegulariserKind::TV, {}, s));
}
