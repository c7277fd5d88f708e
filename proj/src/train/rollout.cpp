#include "tsim/train/rollout.hpp"

#include "tsim/train/gae.hpp"

namespace tsim::train {

void prepare_gae(RolloutBatch& batch, double gamma, double lambda) {
  if (batch.gae_ready) return;
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (const auto& e : batch.episodes) {
    for (std::size_t t = 0; t < e.steps.size(); ++t) {
      rewards.push_back(e.steps[t].reward);
      values.push_back(e.steps[t].value);
      dones.push_back(t + 1 == e.steps.size() ? 1 : 0);
    }
  }
  GaeResult g = compute_gae(rewards, values, dones, gamma, lambda);
  normalize(g.advantages);

  batch.advantages.clear();
  batch.returns.clear();
  std::size_t idx = 0;
  for (const auto& e : batch.episodes) {
    std::vector<double> adv(e.steps.size()), ret(e.steps.size());
    for (std::size_t t = 0; t < e.steps.size(); ++t, ++idx) {
      adv[t] = g.advantages[idx];
      ret[t] = g.returns[idx];
    }
    batch.advantages.push_back(std::move(adv));
    batch.returns.push_back(std::move(ret));
  }
  batch.gae_ready = true;
}

}  // namespace tsim::train
