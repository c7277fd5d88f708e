#pragma once

#include <memory>

#include "tsim/env.hpp"
#include "tsim/rng.hpp"

namespace tsim::train {

/// Hand-written ego behavior used to generate inference-training data and
/// as a baseline in tests.
class ScriptedPolicy {
 public:
  virtual ~ScriptedPolicy() = default;
  virtual envs::Action act(const envs::TIntersectionEnv& env, Rng& rng) = 0;
  virtual std::unique_ptr<ScriptedPolicy> clone() const = 0;
};

/// Drives up to the intersection, creeps across the entry line so the
/// surrounding drivers notice and react, then commits to the turn. The
/// low-level safety brake handles conflicts while crossing.
class CreepThenGoPolicy final : public ScriptedPolicy {
 public:
  CreepThenGoPolicy(double creep_from = 3.0, double creep_until = 6.9)
      : creep_from_(creep_from), creep_until_(creep_until) {}

  envs::Action act(const envs::TIntersectionEnv& env, Rng&) override {
    const double s = env.world().ego_path_progress();
    if (s < creep_from_) return envs::Action::kGo;
    if (s < creep_until_) return envs::Action::kCreep;
    return envs::Action::kGo;
  }
  std::unique_ptr<ScriptedPolicy> clone() const override {
    return std::make_unique<CreepThenGoPolicy>(*this);
  }

 private:
  double creep_from_;
  double creep_until_;
};

class UniformRandomPolicy final : public ScriptedPolicy {
 public:
  envs::Action act(const envs::TIntersectionEnv&, Rng& rng) override {
    return static_cast<envs::Action>(rng.uniform_int(3));
  }
  std::unique_ptr<ScriptedPolicy> clone() const override {
    return std::make_unique<UniformRandomPolicy>();
  }
};

}  // namespace tsim::train
