#include "tsim/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "tsim/error.hpp"
#include "tsim/train/gae.hpp"

namespace tsim::train {

using envs::Action;
using envs::TIntersectionEnv;
using nn::Network;
using nn::NetworkSpec;
using nn::StepInput;
using nn::StepOutput;
using nn::Tape;
using nn::ValueId;

std::string mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSeparated:
      return "SEPARATED";
    case TrainMode::kShared:
      return "SHARED";
    case TrainMode::kCoupled:
      return "COUPLED";
  }
  throw ContractError("mode_name: bad mode");
}

TrainMode mode_from_name(const std::string& name) {
  if (name == "SEPARATED") return TrainMode::kSeparated;
  if (name == "SHARED") return TrainMode::kShared;
  if (name == "COUPLED") return TrainMode::kCoupled;
  throw ConfigError("unknown train mode '" + name +
                    "' (expected SEPARATED, SHARED or COUPLED)");
}

void TrainConfig::validate() const {
  if (policy_lr <= 0.0) throw ConfigError("train.policy_lr must be > 0");
  if (aux_lr <= 0.0) throw ConfigError("train.aux_lr must be > 0");
  if (clip_epsilon <= 0.0 || clip_epsilon >= 1.0)
    throw ConfigError("train.clip_epsilon must be in (0, 1)");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("train.gamma must be in [0, 1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0)
    throw ConfigError("train.gae_lambda must be in [0, 1]");
  if (steps_per_epoch < 1) throw ConfigError("train.steps_per_epoch must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (ppo_update_passes < 1)
    throw ConfigError("train.ppo_update_passes must be >= 1");
  if (minibatch_episodes < 1)
    throw ConfigError("train.minibatch_episodes must be >= 1");
  if (value_update_passes < 0)
    throw ConfigError("train.value_update_passes must be >= 0");
  if (inference_update_passes < 0)
    throw ConfigError("train.inference_update_passes must be >= 0");
  if (entropy_coef < 0.0) throw ConfigError("train.entropy_coef must be >= 0");
  if (coupled_aux_weight < 0.0)
    throw ConfigError("train.coupled_aux_weight must be >= 0");
  if (coupled_value_weight < 0.0)
    throw ConfigError("train.coupled_value_weight must be >= 0");
}

Network& AgentBundle::policy() {
  if (!policy_) throw ContractError("AgentBundle: no network policy");
  return *policy_;
}

const Network& AgentBundle::policy() const {
  if (!policy_) throw ContractError("AgentBundle: no network policy");
  return *policy_;
}

Network& AgentBundle::inference() {
  if (inference_) return *inference_;
  if (mode_ != TrainMode::kSeparated && policy_) return *policy_;
  throw ContractError("AgentBundle: no inference network");
}

const Network& AgentBundle::inference() const {
  if (inference_) return *inference_;
  if (mode_ != TrainMode::kSeparated && policy_) return *policy_;
  throw ContractError("AgentBundle: no inference network");
}

void AgentBundle::zero_all_grads() {
  if (policy_) policy_->params().zero_grad();
  if (inference_) inference_->params().zero_grad();
}

AgentBundle AgentBundle::make(const TrainConfig& cfg, NetworkSpec policy_spec,
                              NetworkSpec inference_spec, Rng& init_rng) {
  cfg.validate();
  AgentBundle bundle;
  bundle.mode_ = cfg.mode;

  policy_spec.action_head = true;
  policy_spec.value_head = true;
  if (cfg.mode == TrainMode::kSeparated) {
    policy_spec.latent_head = false;
    policy_spec.latent_input = true;
    inference_spec.action_head = false;
    inference_spec.value_head = false;
    inference_spec.latent_head = true;
    inference_spec.latent_input = false;
    if (inference_spec.slot_count != policy_spec.slot_count)
      throw ConfigError("policy and inference slot_count differ");
    bundle.policy_ = nn::make_network(policy_spec, init_rng);
    bundle.inference_ = nn::make_network(inference_spec, init_rng);

    bundle.ppo_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params_except(bundle.policy_->params(), {"value_head"}),
        cfg.policy_lr);
    bundle.value_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params(bundle.policy_->params(), {"value_head"}), cfg.aux_lr);
    bundle.inference_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params(bundle.inference_->params()), cfg.aux_lr);
    return bundle;
  }

  // Shared encoder: one network carries all three heads; the latent channel
  // input is reserved for the separated architecture.
  if (inference_spec.kind != policy_spec.kind)
    throw ConfigError(
        "shared/coupled modes use one network; policy and inference kinds "
        "must match");
  policy_spec.latent_head = true;
  policy_spec.latent_input = false;
  bundle.policy_ = nn::make_network(policy_spec, init_rng);

  if (cfg.mode == TrainMode::kShared) {
    bundle.ppo_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params_except(bundle.policy_->params(),
                                 {"value_head", "latent_head"}),
        cfg.policy_lr);
    bundle.value_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params(bundle.policy_->params(), {"value_head"}), cfg.aux_lr);
    bundle.inference_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params_except(bundle.policy_->params(),
                                 {"action_head", "value_head"}),
        cfg.aux_lr);
  } else {
    bundle.coupled_opt_ = std::make_unique<nn::AdamOptimizer>(
        nn::select_params(bundle.policy_->params()), cfg.policy_lr);
  }
  return bundle;
}

AgentBundle AgentBundle::make_inference_only(
    const TrainConfig& cfg, NetworkSpec inference_spec,
    std::unique_ptr<ScriptedPolicy> script, Rng& init_rng) {
  cfg.validate();
  AgentBundle bundle;
  bundle.mode_ = TrainMode::kSeparated;
  inference_spec.action_head = false;
  inference_spec.value_head = false;
  inference_spec.latent_head = true;
  inference_spec.latent_input = false;
  bundle.inference_ = nn::make_network(inference_spec, init_rng);
  bundle.script_ = std::move(script);
  bundle.inference_opt_ = std::make_unique<nn::AdamOptimizer>(
      nn::select_params(bundle.inference_->params()), cfg.aux_lr);
  return bundle;
}

namespace {

struct LatentView {
  std::vector<std::uint64_t> uid;
  std::vector<double> truth;
  std::vector<std::uint8_t> present;
};

LatentView latent_view(const envs::StepInfo& info) {
  LatentView v;
  const std::size_t n = info.true_latents.size();
  v.uid.assign(n, 0);
  v.truth.assign(n, 0.0);
  v.present.assign(n, 0);
  v.uid[0] = 1;  // the ego is always the same vehicle
  for (std::size_t s = 1; s < n; ++s) {
    const auto& z = info.true_latents[s];
    if (!z.present) continue;
    v.uid[s] = z.uid;
    v.present[s] = 1;
    v.truth[s] = z.style == DriverStyle::kConservative ? 1.0 : 0.0;
  }
  return v;
}

int sample_action(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int argmax(std::span<const double> xs) {
  int best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[best]) best = static_cast<int>(i);
  return best;
}

/// Per-slot inferred conservative probabilities for the current step.
std::vector<double> inferred_channel(Network& inference_net, Tape& tape,
                                     const StepInput& in, int slot_count) {
  std::vector<double> channel(slot_count, 0.0);
  const StepOutput out = inference_net.step(tape, in);
  for (const auto& [slot, logit] : out.latent_logits)
    channel[slot] = 1.0 / (1.0 + std::exp(-tape.scalar(logit)));
  return channel;
}

std::vector<double> ground_truth_channel(const LatentView& v) {
  std::vector<double> channel(v.truth.size(), 0.0);
  for (std::size_t s = 0; s < v.truth.size(); ++s)
    if (v.present[s]) channel[s] = v.truth[s];
  return channel;
}

}  // namespace

RolloutBatch collect_rollouts(AgentBundle& bundle, TIntersectionEnv& env,
                              int n_steps, Rng& rng, LatentSource source) {
  if (n_steps < 1) throw ContractError("collect_rollouts: n_steps must be >= 1");
  const int slot_count = env.obs_slot_count();
  if (bundle.has_network_policy() &&
      bundle.policy().spec().slot_count != slot_count)
    throw ContractError("collect_rollouts: policy slot layout mismatch");
  if (source == LatentSource::kInferred && bundle.has_inference() &&
      bundle.inference().spec().slot_count != slot_count)
    throw ContractError("collect_rollouts: inference slot layout mismatch");

  const bool use_inferred =
      source == LatentSource::kInferred && bundle.has_inference();
  const bool policy_wants_latents =
      bundle.has_network_policy() && bundle.policy().spec().latent_input;

  RolloutBatch batch;
  while (batch.total_steps() < static_cast<std::size_t>(n_steps)) {
    EpisodeSample episode;
    envs::StepResult r = env.reset();
    Tape policy_tape, inference_tape;
    if (bundle.has_network_policy()) bundle.policy().begin_episode();
    if (use_inferred) bundle.inference().begin_episode();

    while (true) {
      StepSample sample;
      sample.obs = r.observation;
      sample.graph = envs::build_graph(env.world());
      LatentView view = latent_view(r.info);
      sample.slot_uid = view.uid;
      sample.true_latent = view.truth;
      sample.latent_present = view.present;
      sample.ego_progress = r.info.ego_path_progress;

      if (policy_wants_latents) {
        if (use_inferred) {
          StepInput inf_in{&sample.obs, &sample.graph, sample.ego_progress,
                           {}, sample.slot_uid};
          sample.latent_channel = inferred_channel(
              bundle.inference(), inference_tape, inf_in, slot_count);
        } else {
          sample.latent_channel = ground_truth_channel(view);
        }
      }

      int action;
      if (bundle.has_network_policy()) {
        StepInput in{&sample.obs, &sample.graph, sample.ego_progress,
                     sample.latent_channel, sample.slot_uid};
        const StepOutput out = bundle.policy().step(policy_tape, in);
        const ValueId logp_all = policy_tape.log_softmax(out.action_logits);
        const ValueId probs = policy_tape.softmax(out.action_logits);
        action = sample_action(policy_tape.vals(probs), rng);
        sample.behavior_logp = policy_tape.vals(logp_all)[action];
        sample.value =
            out.value >= 0 ? policy_tape.scalar(out.value) : 0.0;
      } else {
        action = static_cast<int>(bundle.script()->act(env, rng));
      }
      sample.action = action;

      r = env.step(static_cast<Action>(action));
      sample.reward = r.reward;
      episode.total_reward += r.reward;
      episode.steps.push_back(std::move(sample));
      if (r.done) {
        episode.final_events = r.info.events;
        break;
      }
    }
    batch.episodes.push_back(std::move(episode));
  }
  return batch;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double binary_cross_entropy(double p, double label) {
  const double eps = std::numeric_limits<double>::epsilon();
  return -label * std::log(std::max(p, eps)) -
         (1.0 - label) * std::log(std::max(1.0 - p, eps));
}

ValueId ppo_sample_term(Tape& tape, ValueId action_logits, int action,
                        double behavior_logp, double advantage, double eps) {
  const ValueId logp = tape.pick(tape.log_softmax(action_logits), action);
  const ValueId ratio = tape.exp_(tape.sub(logp, tape.input1(behavior_logp)));
  const ValueId adv = tape.input1(advantage);
  const ValueId unclipped = tape.mul(ratio, adv);
  const ValueId clipped = tape.mul(tape.clamp(ratio, 1.0 - eps, 1.0 + eps), adv);
  return tape.min2(unclipped, clipped);
}

namespace {

StepInput make_step_input(const StepSample& s) {
  return {&s.obs, &s.graph, s.ego_progress, s.latent_channel, s.slot_uid};
}

std::vector<std::vector<std::size_t>> minibatch_groups(std::size_t n_episodes,
                                                       int per_group, Rng& rng) {
  std::vector<std::size_t> order(n_episodes);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with our deterministic rng.
  for (std::size_t i = n_episodes; i > 1; --i) {
    const std::size_t j = rng.uniform_int(i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t start = 0; start < n_episodes;
       start += static_cast<std::size_t>(per_group)) {
    const std::size_t end =
        std::min(n_episodes, start + static_cast<std::size_t>(per_group));
    groups.emplace_back(order.begin() + start, order.begin() + end);
  }
  return groups;
}

struct PpoTerms {
  ValueId loss = -1;     // scalar to minimize
  double mean_surrogate = 0.0;
};

// Clipped-surrogate loss over a group of episodes; optional entropy bonus.
PpoTerms build_ppo_loss(Tape& tape, Network& policy, const RolloutBatch& batch,
                        const std::vector<std::size_t>& group, double eps,
                        double entropy_coef) {
  std::vector<ValueId> terms;
  std::vector<ValueId> entropies;
  for (std::size_t e : group) {
    const EpisodeSample& ep = batch.episodes[e];
    policy.begin_episode();
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const StepSample& s = ep.steps[t];
      const StepOutput out = policy.step(tape, make_step_input(s));
      terms.push_back(ppo_sample_term(tape, out.action_logits, s.action,
                                      s.behavior_logp, batch.advantages[e][t],
                                      eps));
      if (entropy_coef > 0.0) {
        const ValueId logp_all = tape.log_softmax(out.action_logits);
        const ValueId probs = tape.softmax(out.action_logits);
        entropies.push_back(tape.scale(tape.sum(tape.mul(probs, logp_all)), -1.0));
      }
    }
  }
  PpoTerms result;
  const ValueId surrogate = tape.mean(tape.concat(terms));
  result.mean_surrogate = tape.scalar(surrogate);
  ValueId loss = tape.scale(surrogate, -1.0);
  if (!entropies.empty()) {
    loss = tape.sub(loss,
                    tape.scale(tape.mean(tape.concat(entropies)), entropy_coef));
  }
  result.loss = loss;
  return result;
}

struct InferenceTerms {
  ValueId loss = -1;  // -1 when the group has no labeled pairs
  double mean_bce = 0.0;
  long correct = 0;
  long total = 0;
};

InferenceTerms build_inference_loss(Tape& tape, Network& net,
                                    const RolloutBatch& batch,
                                    const std::vector<std::size_t>& group) {
  std::vector<ValueId> terms;
  InferenceTerms result;
  for (std::size_t e : group) {
    const EpisodeSample& ep = batch.episodes[e];
    net.begin_episode();
    for (const StepSample& s : ep.steps) {
      // The inference network never sees the latent channel.
      StepInput in{&s.obs, &s.graph, s.ego_progress, {}, s.slot_uid};
      const StepOutput out = net.step(tape, in);
      for (const auto& [slot, logit] : out.latent_logits) {
        if (!s.latent_present[slot]) continue;
        const double label = s.true_latent[slot];
        terms.push_back(tape.bce_logit(logit, label));
        const bool predicted_conservative = tape.scalar(logit) > 0.0;
        result.correct += (predicted_conservative == (label > 0.5)) ? 1 : 0;
        ++result.total;
      }
    }
  }
  if (!terms.empty()) {
    result.loss = tape.mean(tape.concat(terms));
    result.mean_bce = tape.scalar(result.loss);
  }
  return result;
}

// Value baseline: the head is a linear readout of the (frozen) encoder
// embedding, so features are cached once and the regression runs on them.
double train_value_head(AgentBundle& bundle, const RolloutBatch& batch,
                        const TrainConfig& cfg) {
  Network& policy = bundle.policy();
  std::vector<std::vector<double>> features;
  std::vector<double> targets;
  {
    Tape tape;
    for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
      policy.begin_episode();
      const EpisodeSample& ep = batch.episodes[e];
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        const StepOutput out = policy.step(tape, make_step_input(ep.steps[t]));
        const auto emb = tape.vals(out.ego_embedding);
        features.emplace_back(emb.begin(), emb.end());
        targets.push_back(batch.returns[e][t]);
      }
    }
  }
  const int dim = static_cast<int>(features.front().size());
  nn::LinearParams head =
      nn::bind_linear(policy.params(), "value_head", dim, 1);

  double final_loss = 0.0;
  for (int pass = 0; pass < cfg.value_update_passes; ++pass) {
    Tape tape;
    std::vector<ValueId> sq;
    sq.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      const ValueId v = nn::linear(tape, head, tape.input(features[i]));
      const ValueId diff = tape.sub(v, tape.input1(targets[i]));
      sq.push_back(tape.mul(diff, diff));
    }
    const ValueId loss = tape.mean(tape.concat(sq));
    final_loss = tape.scalar(loss);
    policy.params().zero_grad();
    tape.backward(loss);
    bundle.value_opt().step();
  }
  policy.params().zero_grad();
  return final_loss;
}

}  // namespace

EpochStats train_epoch(AgentBundle& bundle, TIntersectionEnv& env,
                       const TrainConfig& cfg, Rng& rng, int epoch_index,
                       long env_steps_before) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();

  RolloutBatch batch =
      collect_rollouts(bundle, env, cfg.steps_per_epoch, rng, LatentSource::kGroundTruth);
  if (bundle.has_network_policy())
    prepare_gae(batch, cfg.gamma, cfg.gae_lambda);

  EpochStats stats;
  stats.epoch = epoch_index;
  stats.env_steps = env_steps_before + static_cast<long>(batch.total_steps());
  stats.mean_return = batch.mean_return();
  stats.train_success_rate =
      batch.episodes.empty()
          ? 0.0
          : static_cast<double>(batch.success_count()) / batch.episodes.size();

  const std::size_t n_episodes = batch.episodes.size();

  if (bundle.mode() == TrainMode::kCoupled) {
    Network& net = bundle.policy();
    for (int pass = 0; pass < cfg.ppo_update_passes; ++pass) {
      const bool last_pass = pass + 1 == cfg.ppo_update_passes;
      long correct = 0, total = 0;
      for (const auto& group :
           minibatch_groups(n_episodes, cfg.minibatch_episodes, rng)) {
        Tape tape;
        std::vector<ValueId> surrogate_terms, value_terms, bce_terms;
        for (std::size_t e : group) {
          const EpisodeSample& ep = batch.episodes[e];
          net.begin_episode();
          for (std::size_t t = 0; t < ep.steps.size(); ++t) {
            const StepSample& s = ep.steps[t];
            const StepOutput out = net.step(tape, make_step_input(s));
            surrogate_terms.push_back(
                ppo_sample_term(tape, out.action_logits, s.action,
                                s.behavior_logp, batch.advantages[e][t],
                                cfg.clip_epsilon));
            const ValueId diff =
                tape.sub(out.value, tape.input1(batch.returns[e][t]));
            value_terms.push_back(tape.mul(diff, diff));
            for (const auto& [slot, logit] : out.latent_logits) {
              if (!s.latent_present[slot]) continue;
              bce_terms.push_back(tape.bce_logit(logit, s.true_latent[slot]));
              if (last_pass) {
                const bool pred = tape.scalar(logit) > 0.0;
                correct += (pred == (s.true_latent[slot] > 0.5)) ? 1 : 0;
                ++total;
              }
            }
          }
        }
        const ValueId surrogate = tape.mean(tape.concat(surrogate_terms));
        const ValueId value_mse = tape.mean(tape.concat(value_terms));
        ValueId loss = tape.add(tape.scale(surrogate, -1.0),
                                tape.scale(value_mse, cfg.coupled_value_weight));
        if (!bce_terms.empty()) {
          const ValueId bce = tape.mean(tape.concat(bce_terms));
          loss = tape.add(loss, tape.scale(bce, cfg.coupled_aux_weight));
          if (last_pass) stats.inference_loss = tape.scalar(bce);
        }
        if (last_pass) {
          stats.ppo_loss = -tape.scalar(surrogate);
          stats.value_loss = tape.scalar(value_mse);
        }
        net.params().zero_grad();
        tape.backward(loss);
        bundle.coupled_opt().step();
      }
      if (last_pass && total > 0)
        stats.train_inference_accuracy =
            static_cast<double>(correct) / static_cast<double>(total);
    }
    net.params().zero_grad();
  } else {
    // PPO passes on the policy parameters.
    if (bundle.has_network_policy()) {
      for (int pass = 0; pass < cfg.ppo_update_passes; ++pass) {
        for (const auto& group :
             minibatch_groups(n_episodes, cfg.minibatch_episodes, rng)) {
          Tape tape;
          const PpoTerms terms =
              build_ppo_loss(tape, bundle.policy(), batch, group,
                             cfg.clip_epsilon, cfg.entropy_coef);
          if (pass + 1 == cfg.ppo_update_passes)
            stats.ppo_loss = -terms.mean_surrogate;
          bundle.policy().params().zero_grad();
          tape.backward(terms.loss);
          bundle.ppo_opt().step();
        }
      }
      bundle.policy().params().zero_grad();
    }

    // Supervised latent-inference passes.
    if (bundle.has_inference() && cfg.inference_update_passes > 0) {
      Network& inf = bundle.inference();
      for (int pass = 0; pass < cfg.inference_update_passes; ++pass) {
        const bool last_pass = pass + 1 == cfg.inference_update_passes;
        long correct = 0, total = 0;
        double loss_sum = 0.0;
        int loss_count = 0;
        for (const auto& group :
             minibatch_groups(n_episodes, cfg.minibatch_episodes, rng)) {
          Tape tape;
          const InferenceTerms terms =
              build_inference_loss(tape, inf, batch, group);
          if (terms.loss < 0) continue;  // no labeled pairs in this group
          correct += terms.correct;
          total += terms.total;
          loss_sum += terms.mean_bce;
          ++loss_count;
          inf.params().zero_grad();
          tape.backward(terms.loss);
          bundle.inference_opt().step();
        }
        if (last_pass) {
          stats.inference_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
          if (total > 0)
            stats.train_inference_accuracy =
                static_cast<double>(correct) / static_cast<double>(total);
        }
      }
      inf.params().zero_grad();
    }

    // Value baseline regression on cached encoder features.
    if (bundle.has_network_policy() && cfg.value_update_passes > 0)
      stats.value_loss = train_value_head(bundle, batch, cfg);
  }

  stats.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return stats;
}

EvalResult evaluate(AgentBundle& bundle, const WorldConfig& world_config,
                    int n_episodes, Rng& rng) {
  if (n_episodes < 1) throw ContractError("evaluate: n_episodes must be >= 1");
  TIntersectionEnv env(world_config, rng.raw());
  const int slot_count = env.obs_slot_count();

  const bool policy_wants_latents =
      bundle.has_network_policy() && bundle.policy().spec().latent_input;
  const bool has_inference = bundle.has_inference();

  int successes = 0;
  long correct = 0, total = 0;
  double return_sum = 0.0;

  for (int ep = 0; ep < n_episodes; ++ep) {
    envs::StepResult r = env.reset();
    Tape policy_tape, inference_tape;
    if (bundle.has_network_policy()) bundle.policy().begin_episode();
    if (has_inference) bundle.inference().begin_episode();

    while (true) {
      envs::Observation obs = r.observation;
      envs::TrafficGraph graph = envs::build_graph(env.world());
      const LatentView view = latent_view(r.info);
      const double progress = r.info.ego_path_progress;

      std::vector<double> channel;
      if (has_inference) {
        StepInput inf_in{&obs, &graph, progress, {}, view.uid};
        channel = inferred_channel(bundle.inference(), inference_tape, inf_in,
                                   slot_count);
        for (int s = 1; s < slot_count; ++s) {
          if (!view.present[s]) continue;
          const bool predicted_conservative = channel[s] > 0.5;
          correct += (predicted_conservative == (view.truth[s] > 0.5)) ? 1 : 0;
          ++total;
        }
      }

      int action;
      if (bundle.has_network_policy()) {
        StepInput in{&obs, &graph, progress,
                     policy_wants_latents ? std::span<const double>(channel)
                                          : std::span<const double>(),
                     view.uid};
        const StepOutput out = bundle.policy().step(policy_tape, in);
        action = argmax(policy_tape.vals(out.action_logits));
      } else {
        action = static_cast<int>(bundle.script()->act(env, rng));
      }

      r = env.step(static_cast<Action>(action));
      return_sum += r.reward;
      if (r.done) {
        if (r.info.events.goal_reached) ++successes;
        break;
      }
    }
  }

  EvalResult result;
  result.success_rate = static_cast<double>(successes) / n_episodes;
  result.inference_accuracy =
      total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  result.mean_return = return_sum / n_episodes;
  return result;
}

MetricsCsv::MetricsCsv(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("metrics csv: cannot open " + path);
  out_ << kHeader << '\n';
  out_.flush();
}

void MetricsCsv::append(const EpochStats& stats) {
  auto cell = [](double v) {
    return v < 0.0 ? std::string() : std::to_string(v);
  };
  out_ << stats.epoch << ',' << stats.env_steps << ',' << stats.mean_return
       << ',' << stats.train_success_rate << ','
       << cell(stats.eval_success_rate) << ','
       << cell(stats.eval_inference_accuracy) << ',' << stats.ppo_loss << ','
       << stats.value_loss << ',' << stats.inference_loss << ','
       << stats.wall_time_s << '\n';
  out_.flush();
}

}  // namespace tsim::train
