#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsim/env.hpp"
#include "tsim/nn/graph_conv.hpp"
#include "tsim/nn/lstm.hpp"
#include "tsim/nn/tape.hpp"

namespace tsim::nn {

enum class NetKind { kLstm, kStgSage, kStGat, kStGcn };

std::string net_kind_name(NetKind kind);
NetKind net_kind_from_name(const std::string& name);
bool is_graph_kind(NetKind kind);

struct NetworkSpec {
  NetKind kind = NetKind::kLstm;
  int hidden_units = 48;  // flat LSTM hidden size
  int node_dim = 24;      // graph nets: node embedding and sub-LSTM hidden
  int conv_layers = 3;
  bool action_head = true;
  bool value_head = true;
  bool latent_head = true;
  bool latent_input = false;  // per-slot latent channel appended to inputs
  int slot_count = 9;         // 1 + 2*N_max, bound from the world config
  // Fixed input scaling keeps activations O(1).
  double pos_scale = 1.0 / 30.0;
  double vel_scale = 1.0 / 3.0;
  double progress_scale = 1.0 / 20.0;

  void validate() const;
};

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

/// Per-step network inputs in observation-slot layout.
struct StepInput {
  const envs::Observation* obs = nullptr;
  const envs::TrafficGraph* graph = nullptr;  // may be null for flat nets
  double ego_progress = 0.0;
  /// Latent channel per slot (ground truth or inferred probability); may be
  /// empty when the network has no latent input.
  std::span<const double> latent_channel;
  /// Vehicle identity per slot (0 = empty); drives recurrent-state resets.
  std::span<const std::uint64_t> slot_uid;
};

struct StepOutput {
  ValueId action_logits = -1;
  ValueId value = -1;
  ValueId ego_embedding = -1;  // encoder output feeding the heads
  std::vector<std::pair<int, ValueId>> latent_logits;  // (slot, scalar logit)
};

/// Recurrent policy/inference network. Steps must share one tape per
/// episode; begin_episode() resets the recurrent state.
class Network {
 public:
  virtual ~Network() = default;
  virtual void begin_episode() = 0;
  virtual StepOutput step(Tape& tape, const StepInput& in) = 0;
  virtual const NetworkSpec& spec() const = 0;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 protected:
  ParameterSet params_;
};

std::unique_ptr<Network> make_network(const NetworkSpec& spec, Rng& rng);

}  // namespace tsim::nn
