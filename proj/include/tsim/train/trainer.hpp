#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "tsim/env.hpp"
#include "tsim/nn/adam.hpp"
#include "tsim/nn/network.hpp"
#include "tsim/train/rollout.hpp"
#include "tsim/train/scripted.hpp"

namespace tsim::train {

/// How the supervised latent-inference task is wired to the policy learner:
/// fully separated networks, a shared encoder trained by two optimizers, or
/// one optimizer over a weighted-sum loss.
enum class TrainMode { kSeparated, kShared, kCoupled };

std::string mode_name(TrainMode mode);
TrainMode mode_from_name(const std::string& name);

enum class LatentSource { kGroundTruth, kInferred };

struct TrainConfig {
  TrainMode mode = TrainMode::kSeparated;
  double policy_lr = 1e-4;
  double aux_lr = 1e-3;  // value baseline and supervised learner
  double coupled_aux_weight = 0.1;
  double coupled_value_weight = 0.5;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int steps_per_epoch = 1000;
  int epochs = 500;
  int ppo_update_passes = 10;
  int minibatch_episodes = 2;
  int value_update_passes = 10;
  int inference_update_passes = 4;
  double entropy_coef = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  long env_steps = 0;  // cumulative environment steps
  double mean_return = 0.0;
  double train_success_rate = 0.0;
  double train_inference_accuracy = -1.0;  // on the collected batch; -1 = n/a
  double eval_success_rate = -1.0;         // filled on evaluation epochs
  double eval_inference_accuracy = -1.0;
  double ppo_loss = 0.0;
  double value_loss = 0.0;
  double inference_loss = 0.0;
  double wall_time_s = 0.0;
};

/// Policy + latent-inference networks with their optimizers, wired per
/// TrainMode. In SHARED and COUPLED modes both tasks run on one network
/// with separate heads; policy() and inference() then return that object.
class AgentBundle {
 public:
  static AgentBundle make(const TrainConfig& cfg, nn::NetworkSpec policy_spec,
                          nn::NetworkSpec inference_spec, Rng& init_rng);

  /// Scripted ego behavior with a trainable inference network only.
  static AgentBundle make_inference_only(const TrainConfig& cfg,
                                         nn::NetworkSpec inference_spec,
                                         std::unique_ptr<ScriptedPolicy> script,
                                         Rng& init_rng);

  TrainMode mode() const { return mode_; }
  bool has_network_policy() const { return policy_ != nullptr; }
  bool has_inference() const {
    return inference_ != nullptr || (mode_ != TrainMode::kSeparated && policy_);
  }
  nn::Network& policy();
  nn::Network& inference();
  const nn::Network& policy() const;
  const nn::Network& inference() const;
  ScriptedPolicy* script() { return script_.get(); }

  nn::AdamOptimizer& ppo_opt() { return *ppo_opt_; }
  nn::AdamOptimizer& value_opt() { return *value_opt_; }
  nn::AdamOptimizer& inference_opt() { return *inference_opt_; }
  nn::AdamOptimizer& coupled_opt() { return *coupled_opt_; }

  void zero_all_grads();

 private:
  TrainMode mode_ = TrainMode::kSeparated;
  std::unique_ptr<nn::Network> policy_;
  std::unique_ptr<nn::Network> inference_;  // null when the encoder is shared
  std::unique_ptr<ScriptedPolicy> script_;
  std::unique_ptr<nn::AdamOptimizer> ppo_opt_;
  std::unique_ptr<nn::AdamOptimizer> value_opt_;
  std::unique_ptr<nn::AdamOptimizer> inference_opt_;
  std::unique_ptr<nn::AdamOptimizer> coupled_opt_;
};

/// Runs whole episodes until at least n_steps are gathered. Ground-truth
/// latents feed the policy's latent channel during training collection;
/// inferred probabilities replace them at test time.
RolloutBatch collect_rollouts(AgentBundle& bundle, envs::TIntersectionEnv& env,
                              int n_steps, Rng& rng, LatentSource source);

struct EvalResult {
  double success_rate = 0.0;
  double inference_accuracy = 0.0;
  double mean_return = 0.0;
};

/// Greedy-action evaluation with inferred latents; per-step per-vehicle
/// accuracy against ground truth, aggregated over all steps.
EvalResult evaluate(AgentBundle& bundle, const WorldConfig& world_config,
                    int n_episodes, Rng& rng);

EpochStats train_epoch(AgentBundle& bundle, envs::TIntersectionEnv& env,
                       const TrainConfig& cfg, Rng& rng, int epoch_index,
                       long env_steps_before = 0);

/// Scalar clip algebra used by the PPO surrogate (exposed for tests):
/// min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv).
double clipped_surrogate(double ratio, double advantage, double eps);

/// In-tape clipped surrogate term for one sample; the epoch loss is the
/// negated mean of these terms.
nn::ValueId ppo_sample_term(nn::Tape& tape, nn::ValueId action_logits,
                            int action, double behavior_logp, double advantage,
                            double eps);

/// Probability-space binary cross-entropy with the log clamped at machine
/// epsilon, so exact predictions give exactly zero loss.
double binary_cross_entropy(double p, double label);

/// Appends one row per epoch; empty cells for evaluation columns on
/// non-evaluation epochs. Flushed per row.
class MetricsCsv {
 public:
  static constexpr const char* kHeader =
      "epoch,env_steps,mean_return,train_success_rate,eval_success_rate,"
      "inference_accuracy,ppo_loss,value_loss,inference_loss,wall_time_s";

  explicit MetricsCsv(const std::string& path);
  void append(const EpochStats& stats);

 private:
  std::ofstream out_;
};

}  // namespace tsim::train
