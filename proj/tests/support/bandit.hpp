#pragma once

#include <cmath>
#include <vector>

#include "tsim/nn/adam.hpp"
#include "tsim/nn/tape.hpp"
#include "tsim/rng.hpp"
#include "tsim/train/gae.hpp"
#include "tsim/train/trainer.hpp"

namespace tsim::testing {

/// Two-armed bandit driven by the real PPO building blocks: softmax policy
/// over two logits, clipped-surrogate updates via ppo_sample_term, Adam.
/// Arm 0 pays 1, arm 1 pays 0. Returns P(arm 0) after `updates` updates.
inline double run_bandit_ppo(std::uint64_t seed, int updates,
                             int batch_size = 32, double lr = 0.05,
                             double eps = 0.2) {
  Rng rng(seed);
  nn::ParameterSet params;
  nn::Tensor& logits = params.create("policy/logits", {2});
  nn::AdamOptimizer opt({&logits}, lr);

  for (int update = 0; update < updates; ++update) {
    // Collect one batch with the current policy.
    std::vector<int> actions(batch_size);
    std::vector<double> rewards(batch_size), behavior_logp(batch_size);
    {
      nn::Tape tape;
      const nn::ValueId lp = tape.log_softmax(tape.leaf(logits));
      const auto lp_vals = tape.vals(lp);
      const double p0 = std::exp(lp_vals[0]);
      for (int i = 0; i < batch_size; ++i) {
        const int a = rng.uniform() < p0 ? 0 : 1;
        actions[i] = a;
        rewards[i] = a == 0 ? 1.0 : 0.0;
        behavior_logp[i] = lp_vals[a];
      }
    }
    std::vector<double> advantages = rewards;
    train::normalize(advantages);

    nn::Tape tape;
    std::vector<nn::ValueId> terms;
    terms.reserve(batch_size);
    const nn::ValueId logit_node = tape.leaf(logits);
    for (int i = 0; i < batch_size; ++i)
      terms.push_back(train::ppo_sample_term(tape, logit_node, actions[i],
                                             behavior_logp[i], advantages[i],
                                             eps));
    const nn::ValueId loss = tape.scale(tape.mean(tape.concat(terms)), -1.0);
    params.zero_grad();
    tape.backward(loss);
    opt.step();
  }

  const double z0 = logits.values[0], z1 = logits.values[1];
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  return e0 / (e0 + e1);
}

}  // namespace tsim::testing
