#include <doctest.h>

#include <cmath>

#include "support/bandit.hpp"
#include "tsim/nn/tape.hpp"
#include "tsim/train/trainer.hpp"

using namespace tsim;
using namespace tsim::train;

TEST_CASE("clip algebra on the three reference cases") {
  // ratio 1, A=1 -> 1; ratio 2, eps 0.2, A=1 -> 1.2; ratio 0.5, A=-1 -> -0.8
  CHECK(clipped_surrogate(1.0, 1.0, 0.2) == doctest::Approx(1.0));
  CHECK(clipped_surrogate(2.0, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
}

TEST_CASE("in-tape sample term agrees with the scalar formula") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    nn::Tape tape;
    std::vector<double> logits{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                               rng.uniform(-2.0, 2.0)};
    const int action = static_cast<int>(rng.uniform_int(3));
    const double behavior_logp = rng.uniform(-3.0, -0.1);
    const double adv = rng.uniform(-2.0, 2.0);
    const double eps = 0.2;

    const nn::ValueId term = ppo_sample_term(tape, tape.input(logits), action,
                                             behavior_logp, adv, eps);
    // Scalar reference.
    double mx = std::max({logits[0], logits[1], logits[2]});
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double logp = logits[action] - mx - std::log(z);
    const double ratio = std::exp(logp - behavior_logp);
    CHECK(tape.scalar(term) == doctest::Approx(clipped_surrogate(ratio, adv, eps)));
  }
}

TEST_CASE("per-sample surrogate never exceeds the unclipped objective for A>0, r>1+eps") {
  Rng rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const double ratio = rng.uniform(0.0, 3.0);
    const double adv = rng.uniform(-2.0, 2.0);
    const double eps = 0.2;
    const double term = clipped_surrogate(ratio, adv, eps);
    CHECK(term <= std::max(ratio * adv, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv) + 1e-12);
    if (adv > 0.0 && ratio > 1.0 + eps) CHECK(term < ratio * adv);
  }
}

TEST_CASE("one PPO update increases the log-probability of an all-advantaged action") {
  // Gradient direction sanity: positive advantages on action 2 only.
  nn::ParameterSet params;
  nn::Tensor& logits = params.create("logits", {3});
  logits.values = {0.3, -0.2, 0.1};

  double before;
  {
    nn::Tape tape;
    before = tape.scalar(tape.pick(tape.log_softmax(tape.leaf(logits)), 2));
  }
  nn::AdamOptimizer opt({&logits}, 0.01);
  nn::Tape tape;
  std::vector<nn::ValueId> terms;
  for (int i = 0; i < 8; ++i)
    terms.push_back(ppo_sample_term(tape, tape.leaf(logits), 2, before, 1.0, 0.2));
  const nn::ValueId loss = tape.scale(tape.mean(tape.concat(terms)), -1.0);
  params.zero_grad();
  tape.backward(loss);
  opt.step();

  nn::Tape after_tape;
  const double after =
      after_tape.scalar(after_tape.pick(after_tape.log_softmax(after_tape.leaf(logits)), 2));
  CHECK(after > before);
}

TEST_CASE("ppo solves the two-armed bandit") {
  const double p = tsim::testing::run_bandit_ppo(1234, 200);
  CHECK(p > 0.95);
}

TEST_CASE("probability-space binary cross entropy") {
  CHECK(binary_cross_entropy(0.5, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(binary_cross_entropy(0.5, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(binary_cross_entropy(1.0, 1.0) == 0.0);
  CHECK(binary_cross_entropy(0.0, 0.0) == 0.0);
  CHECK(std::isfinite(binary_cross_entropy(0.0, 1.0)));
}
