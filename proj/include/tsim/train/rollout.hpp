#pragma once

#include <cstdint>
#include <vector>

#include "tsim/env.hpp"

namespace tsim::train {

/// Everything a network needs to replay one environment step, plus the
/// training telemetry recorded at collection time.
struct StepSample {
  envs::Observation obs;
  envs::TrafficGraph graph;
  std::vector<std::uint64_t> slot_uid;       // per obs slot, 0 = empty
  std::vector<double> true_latent;           // 1 conservative / 0 aggressive
  std::vector<std::uint8_t> latent_present;  // mask over obs slots
  std::vector<double> latent_channel;        // channel the policy consumed
  double ego_progress = 0.0;
  int action = 0;
  double reward = 0.0;
  double value = 0.0;          // V(s) at collection time
  double behavior_logp = 0.0;  // log pi_old(a|s)
};

struct EpisodeSample {
  std::vector<StepSample> steps;
  StepEvents final_events;
  double total_reward = 0.0;
};

/// Whole-episode experience batch. Advantages and returns are computed
/// lazily via prepare_gae and cached per episode.
struct RolloutBatch {
  std::vector<EpisodeSample> episodes;

  bool gae_ready = false;
  std::vector<std::vector<double>> advantages;  // per episode, per step
  std::vector<std::vector<double>> returns;

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.steps.size();
    return n;
  }
  int success_count() const {
    int n = 0;
    for (const auto& e : episodes) n += e.final_events.goal_reached ? 1 : 0;
    return n;
  }
  double mean_return() const {
    if (episodes.empty()) return 0.0;
    double total = 0.0;
    for (const auto& e : episodes) total += e.total_reward;
    return total / static_cast<double>(episodes.size());
  }
};

/// Fills the advantage/return cache (no-op when already computed) and
/// normalizes advantages to zero mean / unit variance across the batch.
void prepare_gae(RolloutBatch& batch, double gamma, double lambda);

}  // namespace tsim::train
