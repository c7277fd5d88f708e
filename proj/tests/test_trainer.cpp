#include <doctest.h>

#include <cmath>

#include "tsim/train/trainer.hpp"

using namespace tsim;
using namespace tsim::train;
using tsim::envs::TIntersectionEnv;
using tsim::nn::NetKind;
using tsim::nn::NetworkSpec;

namespace {

WorldConfig small_world() {
  WorldConfig cfg;
  cfg.max_steps = 60;
  return cfg;
}

TrainConfig tiny_train(TrainMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.steps_per_epoch = 120;
  cfg.ppo_update_passes = 2;
  cfg.value_update_passes = 2;
  cfg.inference_update_passes = 2;
  cfg.minibatch_episodes = 2;
  return cfg;
}

NetworkSpec tiny_lstm(int hidden = 10) {
  NetworkSpec spec;
  spec.kind = NetKind::kLstm;
  spec.hidden_units = hidden;
  return spec;
}

}  // namespace

TEST_CASE("uniform-random rollouts cover several episodes by pigeonhole") {
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  Rng init(1);
  auto bundle = AgentBundle::make_inference_only(
      cfg, tiny_lstm(), std::make_unique<UniformRandomPolicy>(), init);
  WorldConfig wc;  // full 200-step horizon
  TIntersectionEnv env(wc, 5);
  Rng rng(6);
  auto batch = collect_rollouts(bundle, env, 1000, rng, LatentSource::kGroundTruth);
  CHECK(batch.total_steps() >= 1000);
  CHECK(batch.episodes.size() >= 5);
  for (const auto& ep : batch.episodes) CHECK(ep.final_events.any());
}

TEST_CASE("ground-truth latent channel carries the env labels exactly") {
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  Rng init(2);
  auto bundle = AgentBundle::make(cfg, tiny_lstm(), tiny_lstm(), init);
  TIntersectionEnv env(small_world(), 7);
  Rng rng(8);
  auto batch = collect_rollouts(bundle, env, 200, rng, LatentSource::kGroundTruth);
  for (const auto& ep : batch.episodes) {
    for (const auto& s : ep.steps) {
      REQUIRE(s.latent_channel.size() == s.true_latent.size());
      for (std::size_t k = 0; k < s.true_latent.size(); ++k) {
        if (s.latent_present[k])
          CHECK(s.latent_channel[k] == s.true_latent[k]);
        else
          CHECK(s.latent_channel[k] == 0.0);
      }
    }
  }
}

TEST_CASE("collection is deterministic for fixed seeds") {
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  auto collect_once = [&]() {
    Rng init(3);
    auto bundle = AgentBundle::make(cfg, tiny_lstm(), tiny_lstm(), init);
    TIntersectionEnv env(small_world(), 11);
    Rng rng(12);
    return collect_rollouts(bundle, env, 150, rng, LatentSource::kGroundTruth);
  };
  auto a = collect_once();
  auto b = collect_once();
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t e = 0; e < a.episodes.size(); ++e) {
    REQUIRE(a.episodes[e].steps.size() == b.episodes[e].steps.size());
    for (std::size_t t = 0; t < a.episodes[e].steps.size(); ++t) {
      CHECK(a.episodes[e].steps[t].action == b.episodes[e].steps[t].action);
      CHECK(a.episodes[e].steps[t].reward == b.episodes[e].steps[t].reward);
      CHECK(a.episodes[e].steps[t].behavior_logp ==
            b.episodes[e].steps[t].behavior_logp);
    }
  }
}

TEST_CASE("separated mode: optimizers touch disjoint parameter sets") {
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  cfg.inference_update_passes = 3;
  Rng init(4);
  auto bundle = AgentBundle::make(cfg, tiny_lstm(), tiny_lstm(), init);
  TIntersectionEnv env(small_world(), 13);
  Rng rng(14);

  // Inference-only training leaves policy parameters bit-identical.
  const auto policy_sum = bundle.policy().params().checksum();
  {
    auto batch = collect_rollouts(bundle, env, 150, rng, LatentSource::kGroundTruth);
    TrainConfig inf_only = cfg;
    // Drive only the inference optimizer by hand.
    for (int pass = 0; pass < 3; ++pass) {
      nn::Tape tape;
      std::vector<nn::ValueId> terms;
      auto& net = bundle.inference();
      for (const auto& ep : batch.episodes) {
        net.begin_episode();
        for (const auto& s : ep.steps) {
          nn::StepInput in{&s.obs, &s.graph, s.ego_progress, {}, s.slot_uid};
          auto out = net.step(tape, in);
          for (auto& [slot, logit] : out.latent_logits)
            if (s.latent_present[slot])
              terms.push_back(tape.bce_logit(logit, s.true_latent[slot]));
        }
      }
      REQUIRE(!terms.empty());
      auto loss = tape.mean(tape.concat(terms));
      bundle.inference().params().zero_grad();
      tape.backward(loss);
      bundle.inference_opt().step();
    }
    (void)inf_only;
  }
  CHECK(bundle.policy().params().checksum() == policy_sum);

  // And PPO-only training leaves inference parameters bit-identical.
  const auto inf_sum = bundle.inference().params().checksum();
  TrainConfig ppo_only = cfg;
  ppo_only.inference_update_passes = 0;
  ppo_only.value_update_passes = 0;
  train_epoch(bundle, env, ppo_only, rng, 0);
  CHECK(bundle.inference().params().checksum() == inf_sum);
  CHECK(bundle.policy().params().checksum() != policy_sum);
}

TEST_CASE("coupled update with zero inference gradient equals pure PPO update") {
  // Two identically-seeded coupled bundles; one trains with aux weight 0,
  // the other with aux weight 0.1 but an empty latent mask (zero gradient).
  auto make = [&](double aux_weight) {
    TrainConfig cfg = tiny_train(TrainMode::kCoupled);
    cfg.coupled_aux_weight = aux_weight;
    Rng init(5);
    auto bundle = AgentBundle::make(cfg, tiny_lstm(), tiny_lstm(), init);
    return std::make_pair(std::move(bundle), cfg);
  };
  auto [a, cfg_a] = make(0.0);
  auto [b, cfg_b] = make(0.1);
  CHECK(a.policy().params().checksum() == b.policy().params().checksum());

  // Collect one batch, blank out the latent mask, and update both bundles
  // on the very same data.
  TIntersectionEnv env(small_world(), 21);
  Rng rng_collect(22);
  auto batch = collect_rollouts(a, env, 150, rng_collect, LatentSource::kGroundTruth);
  for (auto& ep : batch.episodes)
    for (auto& s : ep.steps)
      std::fill(s.latent_present.begin(), s.latent_present.end(), 0);
  prepare_gae(batch, cfg_a.gamma, cfg_a.gae_lambda);

  auto run_updates = [&](AgentBundle& bundle, const TrainConfig& cfg) {
    auto& net = bundle.policy();
    nn::Tape tape;
    std::vector<nn::ValueId> surr, val, bce;
    for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
      net.begin_episode();
      const auto& ep = batch.episodes[e];
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        const auto& s = ep.steps[t];
        nn::StepInput in{&s.obs, &s.graph, s.ego_progress, s.latent_channel,
                         s.slot_uid};
        auto out = net.step(tape, in);
        surr.push_back(ppo_sample_term(tape, out.action_logits, s.action,
                                       s.behavior_logp, batch.advantages[e][t],
                                       cfg.clip_epsilon));
        auto diff = tape.sub(out.value, tape.input1(batch.returns[e][t]));
        val.push_back(tape.mul(diff, diff));
        for (auto& [slot, logit] : out.latent_logits)
          if (s.latent_present[slot])
            bce.push_back(tape.bce_logit(logit, s.true_latent[slot]));
      }
    }
    nn::ValueId loss = tape.add(
        tape.scale(tape.mean(tape.concat(surr)), -1.0),
        tape.scale(tape.mean(tape.concat(val)), cfg.coupled_value_weight));
    if (!bce.empty())
      loss = tape.add(loss, tape.scale(tape.mean(tape.concat(bce)),
                                       cfg.coupled_aux_weight));
    net.params().zero_grad();
    tape.backward(loss);
    bundle.coupled_opt().step();
  };
  run_updates(a, cfg_a);
  run_updates(b, cfg_b);
  CHECK(a.policy().params().checksum() == b.policy().params().checksum());
}

TEST_CASE("train_epoch smoke runs for every mode and returns finite stats") {
  for (TrainMode mode :
       {TrainMode::kSeparated, TrainMode::kShared, TrainMode::kCoupled}) {
    CAPTURE(mode_name(mode));
    TrainConfig cfg = tiny_train(mode);
    Rng init(6);
    auto bundle = AgentBundle::make(cfg, tiny_lstm(), tiny_lstm(), init);
    TIntersectionEnv env(small_world(), 31);
    Rng rng(32);
    EpochStats stats = train_epoch(bundle, env, cfg, rng, 0);
    CHECK(std::isfinite(stats.mean_return));
    CHECK(std::isfinite(stats.ppo_loss));
    CHECK(std::isfinite(stats.value_loss));
    CHECK(stats.env_steps >= cfg.steps_per_epoch);
    CHECK(stats.train_success_rate >= 0.0);
    CHECK(stats.train_success_rate <= 1.0);
    if (mode != TrainMode::kCoupled) CHECK(std::isfinite(stats.inference_loss));
  }
}

TEST_CASE("evaluate: always-stop policy never succeeds") {
  class AlwaysStop final : public ScriptedPolicy {
   public:
    envs::Action act(const TIntersectionEnv&, Rng&) override {
      return envs::Action::kStop;
    }
    std::unique_ptr<ScriptedPolicy> clone() const override {
      return std::make_unique<AlwaysStop>();
    }
  };
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  Rng init(7);
  auto bundle = AgentBundle::make_inference_only(
      cfg, tiny_lstm(), std::make_unique<AlwaysStop>(), init);
  Rng rng(41);
  WorldConfig wc = small_world();
  auto result = evaluate(bundle, wc, 5, rng);
  CHECK(result.success_rate == 0.0);
  CHECK(result.inference_accuracy >= 0.0);
  CHECK(result.inference_accuracy <= 1.0);
}

TEST_CASE("evaluate accuracy approaches chance for an untrained constant net") {
  // Zero-weight inference net predicts p=0.5 (counted as 'aggressive');
  // with balanced traffic the per-step accuracy concentrates near 0.5.
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  Rng init(8);
  auto bundle = AgentBundle::make_inference_only(
      cfg, tiny_lstm(), std::make_unique<CreepThenGoPolicy>(), init);
  for (auto& [path, t] : bundle.inference().params())
    for (auto& v : t.values) v = 0.0;
  Rng rng(51);
  WorldConfig wc;
  auto result = evaluate(bundle, wc, 50, rng);
  CHECK(result.inference_accuracy > 0.40);
  CHECK(result.inference_accuracy < 0.60);
}

TEST_CASE("evaluate inference accuracy is 1 for an oracle net") {
  // A hand-built 'network' cannot be injected, so check the other end: a
  // net with a huge positive bias pins p near 1; accuracy equals the
  // conservative fraction, which is 1 when p_conservative = 1.
  TrainConfig cfg = tiny_train(TrainMode::kSeparated);
  Rng init(9);
  auto bundle = AgentBundle::make_inference_only(
      cfg, tiny_lstm(), std::make_unique<CreepThenGoPolicy>(), init);
  auto& head_bias = bundle.inference().params().at("latent_head/b");
  for (auto& v : head_bias.values) v = 50.0;
  for (auto& v : bundle.inference().params().at("latent_head/w").values) v = 0.0;
  Rng rng(61);
  WorldConfig wc;
  wc.p_conservative = 1.0;
  auto result = evaluate(bundle, wc, 10, rng);
  CHECK(result.inference_accuracy == 1.0);
}

TEST_CASE("metrics csv layout") {
  const std::string path = "/tmp/tsim_metrics_test.csv";
  {
    MetricsCsv csv(path);
    EpochStats s;
    s.epoch = 3;
    s.env_steps = 3000;
    s.mean_return = 0.5;
    s.train_success_rate = 0.25;
    s.ppo_loss = -0.01;
    s.value_loss = 0.2;
    s.inference_loss = 0.69;
    s.wall_time_s = 1.5;
    csv.append(s);
    s.epoch = 4;
    s.eval_success_rate = 0.4;
    s.eval_inference_accuracy = 0.8;
    csv.append(s);
  }
  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == MetricsCsv::kHeader);
  CHECK(row1.find("3,3000,") == 0);
  CHECK(row1.find(",,") != std::string::npos);  // empty eval cells
  CHECK(row2.find("0.8") != std::string::npos);
  std::remove(path.c_str());
}
