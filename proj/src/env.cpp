#include "tsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsim/error.hpp"

namespace tsim::envs {

double action_target_speed(Action a) {
  switch (a) {
    case Action::kStop:
      return 0.0;
    case Action::kCreep:
      return 0.5;
    case Action::kGo:
      return 3.0;
  }
  throw ContractError("action_target_speed: invalid action");
}

std::vector<double> flatten_observation(const Observation& obs) {
  std::vector<double> out;
  out.reserve(obs.slots.size() * kSlotFeatures);
  for (const auto& s : obs.slots) {
    out.push_back(s.position.x);
    out.push_back(s.position.y);
    out.push_back(s.velocity.x);
    out.push_back(s.velocity.y);
    out.push_back(s.present ? 1.0 : 0.0);
  }
  return out;
}

std::vector<std::vector<int>> TrafficGraph::in_neighbors() const {
  int max_node = 0;
  for (int n : nodes) max_node = std::max(max_node, n);
  std::vector<std::vector<int>> in(max_node + 1);
  for (const auto& [src, dst] : edges) in[dst].push_back(src);
  return in;
}

TrafficGraph build_graph(const World& world) {
  TrafficGraph g;
  g.nodes.push_back(0);
  const auto& vehicles = world.surrounding();

  std::vector<int> order(vehicles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return vehicles[a].slot_id < vehicles[b].slot_id;
  });

  for (int i : order) g.nodes.push_back(1 + vehicles[i].slot_id);

  for (int i : order) {
    const auto& v = vehicles[i];
    const int node = 1 + v.slot_id;
    const double dir = world.lane_direction(v.lane_id);
    const double s = dir * v.state.position.x;

    int leader = -1, follower = -1;
    double lead_gap = std::numeric_limits<double>::infinity();
    double follow_gap = std::numeric_limits<double>::infinity();
    for (int j : order) {
      if (j == i || vehicles[j].lane_id != v.lane_id) continue;
      const double so = dir * vehicles[j].state.position.x;
      if (so > s && so - s < lead_gap) {
        lead_gap = so - s;
        leader = j;
      } else if (so < s && s - so < follow_gap) {
        follow_gap = s - so;
        follower = j;
      }
    }
    if (leader >= 0) g.edges.emplace_back(1 + vehicles[leader].slot_id, node);
    if (follower >= 0)
      g.edges.emplace_back(1 + vehicles[follower].slot_id, node);
    g.edges.emplace_back(0, node);
    g.edges.emplace_back(node, 0);
  }
  return g;
}

void check_graph_invariants(const TrafficGraph& graph, const World& world) {
  for (const auto& [src, dst] : graph.edges) {
    if (src == dst) throw ContractError("graph invariant: self edge");
    const bool src_known =
        std::find(graph.nodes.begin(), graph.nodes.end(), src) != graph.nodes.end();
    const bool dst_known =
        std::find(graph.nodes.begin(), graph.nodes.end(), dst) != graph.nodes.end();
    if (!src_known || !dst_known)
      throw ContractError("graph invariant: edge endpoint not a node");
  }
  const auto in = graph.in_neighbors();
  const std::size_t n_vehicles = world.surrounding().size();
  if (static_cast<std::size_t>(in[0].size()) != n_vehicles)
    throw ContractError("graph invariant: ego must receive edges from all vehicles");
  for (const auto& v : world.surrounding()) {
    const int node = 1 + v.slot_id;
    int same_lane_neighbors = 0;
    bool has_ego = false;
    for (int src : in[node]) {
      if (src == 0)
        has_ego = true;
      else
        ++same_lane_neighbors;
    }
    if (!has_ego)
      throw ContractError("graph invariant: vehicle missing ego influence");
    if (same_lane_neighbors > 2)
      throw ContractError("graph invariant: too many lane neighbors");
  }
}

double reward(double ego_speed, const StepEvents& events) {
  double r = 0.01 * (ego_speed / 3.0);
  if (events.goal_reached) r += 2.0;
  if (events.collision) r -= 2.0;
  return r;
}

TIntersectionEnv::TIntersectionEnv(const WorldConfig& config,
                                   std::uint64_t seed)
    : config_(config), world_(config), rng_(seed) {
  config_.validate();
}

Observation TIntersectionEnv::observe() {
  Observation obs;
  obs.slots.resize(obs_slot_count());
  const NoiseStd& ns = config_.noise_std;
  auto noisy = [&](const VehicleState& s) {
    SlotObs o;
    o.position = {s.position.x + rng_.normal(0.0, ns.position),
                  s.position.y + rng_.normal(0.0, ns.position)};
    o.velocity = {s.velocity.x + rng_.normal(0.0, ns.velocity),
                  s.velocity.y + rng_.normal(0.0, ns.velocity)};
    o.present = true;
    return o;
  };
  obs.slots[0] = noisy(world_.ego_state());
  for (const auto& v : world_.surrounding())
    obs.slots[1 + v.slot_id] = noisy(v.state);
  return obs;
}

StepInfo TIntersectionEnv::make_info(const StepEvents& events) const {
  StepInfo info;
  info.true_latents.resize(obs_slot_count());
  info.true_state.resize(obs_slot_count());
  const VehicleState ego = world_.ego_state();
  info.true_state[0] = {ego.position, ego.velocity, true};
  for (const auto& v : world_.surrounding()) {
    const int slot = 1 + v.slot_id;
    info.true_latents[slot] = {true, v.profile.style, v.profile.gap_factor, v.uid};
    info.true_state[slot] = {v.state.position, v.state.velocity, true};
  }
  info.events = events;
  info.ego_path_progress = world_.ego_path_progress();
  info.ego_speed = world_.ego_path_speed();
  return info;
}

StepResult TIntersectionEnv::reset() {
  world_.reset(rng_);
  started_ = true;
  StepResult out;
  out.observation = observe();
  out.reward = 0.0;
  out.done = false;
  out.info = make_info(StepEvents{});
  if (debug_checks_) check_graph_invariants(build_graph(world_), world_);
  return out;
}

StepResult TIntersectionEnv::step(Action action) {
  if (!started_) throw ContractError("TIntersectionEnv::step before reset");
  if (world_.terminated())
    throw ContractError("TIntersectionEnv::step after done");
  const StepEvents events =
      world_.step(action_target_speed(action), rng_);
  StepResult out;
  out.observation = observe();
  out.reward = reward(world_.ego_path_speed(), events);
  out.done = events.any();
  out.info = make_info(events);
  if (debug_checks_) check_graph_invariants(build_graph(world_), world_);
  return out;
}

}  // namespace tsim::envs
