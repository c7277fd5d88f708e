#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tsim/world.hpp"

namespace tsim::envs {

/// Target speed commanded to the ego low-level controller.
enum class Action { kStop = 0, kCreep = 1, kGo = 2 };
inline constexpr int kActionCount = 3;

double action_target_speed(Action a);

/// One observation slot: noisy physical state plus a presence flag.
/// Absent slots are all zero.
struct SlotObs {
  Vec2 position;
  Vec2 velocity;
  bool present = false;
};

/// Slot 0 is the ego; slots 1..2*N_max hold surrounding vehicles keyed by
/// their stable world slot id. A vehicle keeps its slot for its lifetime.
struct Observation {
  std::vector<SlotObs> slots;

  int slot_count() const { return static_cast<int>(slots.size()); }
};

inline constexpr int kSlotFeatures = 5;  // px, py, vx, vy, present

/// Fixed-length vector of size slot_count * 5, ego slot first.
std::vector<double> flatten_observation(const Observation& obs);

/// Influence graph over present vehicles. Node ids are observation slot
/// indices (0 = ego). Edge (src, dst) means src directly influences dst.
struct TrafficGraph {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> edges;

  std::vector<std::vector<int>> in_neighbors() const;
};

TrafficGraph build_graph(const World& world);

/// Validates the construction rules; throws ContractError on violation.
void check_graph_invariants(const TrafficGraph& graph, const World& world);

struct SlotLatent {
  bool present = false;
  DriverStyle style = DriverStyle::kConservative;
  double gap_factor = 0.0;
  std::uint64_t uid = 0;
};

struct StepInfo {
  std::vector<SlotLatent> true_latents;  // indexed like observation slots
  StepEvents events;
  std::vector<SlotObs> true_state;  // noiseless snapshot, same layout
  double ego_path_progress = 0.0;
  double ego_speed = 0.0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

double reward(double ego_speed, const StepEvents& events);

/// POMDP wrapper over the world: noisy observations, discrete actions,
/// reward and episode protocol. One instance per rollout worker; step/reset
/// are strictly sequential per instance.
class TIntersectionEnv {
 public:
  TIntersectionEnv(const WorldConfig& config, std::uint64_t seed);

  StepResult reset();

  /// Throws ContractError when called after done.
  StepResult step(Action action);

  const World& world() const { return world_; }
  World& mutable_world() { return world_; }
  const WorldConfig& config() const { return config_; }
  int obs_slot_count() const { return config_.slot_count() + 1; }
  bool done() const { return world_.terminated(); }
  Rng& rng() { return rng_; }

  /// Re-observe the current state (fresh noise draw); used by reset.
  Observation observe();

  /// Turns graph-invariant checking on for every step (debug aid).
  void set_debug_checks(bool on) { debug_checks_ = on; }

 private:
  StepInfo make_info(const StepEvents& events) const;

  WorldConfig config_;
  World world_;
  Rng rng_;
  bool started_ = false;
  bool debug_checks_ = false;
};

}  // namespace tsim::envs
