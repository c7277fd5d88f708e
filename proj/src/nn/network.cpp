#include "tsim/nn/network.hpp"

#include <algorithm>

#include "tsim/error.hpp"

namespace tsim::nn {

std::string net_kind_name(NetKind kind) {
  switch (kind) {
    case NetKind::kLstm:
      return "LSTM";
    case NetKind::kStgSage:
      return "STGSAGE";
    case NetKind::kStGat:
      return "STGAT";
    case NetKind::kStGcn:
      return "STGCN";
  }
  throw ContractError("net_kind_name: bad kind");
}

NetKind net_kind_from_name(const std::string& name) {
  if (name == "LSTM") return NetKind::kLstm;
  if (name == "STGSAGE") return NetKind::kStgSage;
  if (name == "STGAT") return NetKind::kStGat;
  if (name == "STGCN") return NetKind::kStGcn;
  throw ConfigError("unknown network kind '" + name +
                    "' (expected LSTM, STGSAGE, STGAT or STGCN)");
}

bool is_graph_kind(NetKind kind) { return kind != NetKind::kLstm; }

void NetworkSpec::validate() const {
  if (hidden_units <= 0) throw ConfigError("network.hidden_units must be > 0");
  if (node_dim <= 0) throw ConfigError("network.node_dim must be > 0");
  if (conv_layers < 0) throw ConfigError("network.conv_layers must be >= 0");
  if (slot_count < 1) throw ConfigError("network.slot_count must be >= 1");
  if (!action_head && !value_head && !latent_head)
    throw ConfigError("network needs at least one head");
}

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  std::vector<std::string> heads;
  if (spec.action_head) heads.push_back("ACTION");
  if (spec.value_head) heads.push_back("VALUE");
  if (spec.latent_head) heads.push_back("LATENT");
  return {{"kind", net_kind_name(spec.kind)},
          {"hidden_units", spec.hidden_units},
          {"node_dim", spec.node_dim},
          {"conv_layers", spec.conv_layers},
          {"heads", heads},
          {"latent_input", spec.latent_input},
          {"slot_count", spec.slot_count},
          {"pos_scale", spec.pos_scale},
          {"vel_scale", spec.vel_scale},
          {"progress_scale", spec.progress_scale}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.kind = net_kind_from_name(j.at("kind").get<std::string>());
  spec.hidden_units = j.at("hidden_units").get<int>();
  spec.node_dim = j.at("node_dim").get<int>();
  spec.conv_layers = j.at("conv_layers").get<int>();
  spec.action_head = spec.value_head = spec.latent_head = false;
  for (const auto& h : j.at("heads")) {
    const std::string name = h.get<std::string>();
    if (name == "ACTION")
      spec.action_head = true;
    else if (name == "VALUE")
      spec.value_head = true;
    else if (name == "LATENT")
      spec.latent_head = true;
    else
      throw ConfigError("unknown head '" + name + "'");
  }
  spec.latent_input = j.at("latent_input").get<bool>();
  spec.slot_count = j.at("slot_count").get<int>();
  spec.pos_scale = j.value("pos_scale", spec.pos_scale);
  spec.vel_scale = j.value("vel_scale", spec.vel_scale);
  spec.progress_scale = j.value("progress_scale", spec.progress_scale);
  spec.validate();
  return spec;
}

namespace {

double latent_at(const StepInput& in, int slot) {
  if (slot < static_cast<int>(in.latent_channel.size()))
    return in.latent_channel[slot];
  return 0.0;
}

class LstmNet final : public Network {
 public:
  LstmNet(NetworkSpec spec, Rng& rng) : spec_(spec) {
    spec_.validate();
    const int per_slot = 5 + (spec_.latent_input ? 1 : 0);
    input_dim_ = spec_.slot_count * per_slot;
    const int h = spec_.hidden_units;
    lstm_ = make_lstm(params_, "lstm0", input_dim_, h, rng);
    if (spec_.action_head)
      action_head_ = make_linear(params_, "action_head", h, 3, rng);
    if (spec_.value_head)
      value_head_ = make_linear(params_, "value_head", h, 1, rng);
    if (spec_.latent_head)
      latent_head_ =
          make_linear(params_, "latent_head", h, spec_.slot_count - 1, rng);
  }

  void begin_episode() override {
    state_valid_ = false;
    episode_tape_ = nullptr;
  }

  StepOutput step(Tape& tape, const StepInput& in) override {
    if (state_valid_ && episode_tape_ != &tape)
      throw ContractError("LstmNet: tape changed mid-episode");
    if (!state_valid_) {
      state_ = {tape.zeros(spec_.hidden_units), tape.zeros(spec_.hidden_units)};
      episode_tape_ = &tape;
      state_valid_ = true;
    }
    if (static_cast<int>(in.obs->slots.size()) != spec_.slot_count)
      throw ContractError("LstmNet: observation slot count mismatch");

    std::vector<double> x;
    x.reserve(input_dim_);
    for (int s = 0; s < spec_.slot_count; ++s) {
      const auto& slot = in.obs->slots[s];
      x.push_back(slot.position.x * spec_.pos_scale);
      x.push_back(slot.position.y * spec_.pos_scale);
      x.push_back(slot.velocity.x * spec_.vel_scale);
      x.push_back(slot.velocity.y * spec_.vel_scale);
      x.push_back(slot.present ? 1.0 : 0.0);
      if (spec_.latent_input) x.push_back(latent_at(in, s));
    }
    state_ = lstm_cell(tape, lstm_, tape.input(x), state_);

    StepOutput out;
    out.ego_embedding = state_.h;
    if (spec_.action_head) out.action_logits = linear(tape, action_head_, state_.h);
    if (spec_.value_head) out.value = linear(tape, value_head_, state_.h);
    if (spec_.latent_head) {
      const ValueId logits = linear(tape, latent_head_, state_.h);
      for (int s = 1; s < spec_.slot_count; ++s) {
        if (in.obs->slots[s].present)
          out.latent_logits.emplace_back(s, tape.pick(logits, s - 1));
      }
    }
    return out;
  }

  const NetworkSpec& spec() const override { return spec_; }

 private:
  NetworkSpec spec_;
  int input_dim_ = 0;
  LstmParams lstm_;
  LinearParams action_head_, value_head_, latent_head_;
  LstmState state_;
  Tape* episode_tape_ = nullptr;
  bool state_valid_ = false;
};

class StgNet final : public Network {
 public:
  StgNet(NetworkSpec spec, Rng& rng) : spec_(spec) {
    spec_.validate();
    const int d = spec_.node_dim;
    const int latent_extra = spec_.latent_input ? 1 : 0;
    surr_input_dim_ = 5 + latent_extra;
    ego_input_dim_ = surr_input_dim_ + 1;  // plus path progress

    bottom_shared_ = make_lstm(params_, "bottom_shared", surr_input_dim_, d, rng);
    bottom_ego_ = make_lstm(params_, "bottom_ego", ego_input_dim_, d, rng);
    for (int l = 0; l < spec_.conv_layers; ++l) {
      const std::string prefix = "conv" + std::to_string(l);
      switch (spec_.kind) {
        case NetKind::kStgSage:
          sage_.push_back(make_sage(params_, prefix, d, rng));
          break;
        case NetKind::kStGat:
          gat_.push_back(make_gat(params_, prefix, d, 2, rng));
          break;
        case NetKind::kStGcn:
          gcn_.push_back(make_gcn(params_, prefix, d, rng));
          break;
        case NetKind::kLstm:
          throw ContractError("StgNet built with LSTM kind");
      }
    }
    top_shared_ = make_lstm(params_, "top_shared", d, d, rng);
    top_ego_ = make_lstm(params_, "top_ego", d, d, rng);

    if (spec_.action_head)
      action_head_ = make_linear(params_, "action_head", d, 3, rng);
    if (spec_.value_head)
      value_head_ = make_linear(params_, "value_head", d, 1, rng);
    if (spec_.latent_head)
      latent_head_ = make_linear(params_, "latent_head", d, 1, rng);

    bottom_states_.resize(spec_.slot_count);
    top_states_.resize(spec_.slot_count);
    last_uid_.assign(spec_.slot_count, 0);
  }

  void begin_episode() override {
    episode_tape_ = nullptr;
    std::fill(last_uid_.begin(), last_uid_.end(), 0);
    for (auto& s : bottom_states_) s = {-1, -1};
    for (auto& s : top_states_) s = {-1, -1};
  }

  StepOutput step(Tape& tape, const StepInput& in) override {
    if (episode_tape_ != nullptr && episode_tape_ != &tape)
      throw ContractError("StgNet: tape changed mid-episode");
    episode_tape_ = &tape;
    if (static_cast<int>(in.obs->slots.size()) != spec_.slot_count)
      throw ContractError("StgNet: observation slot count mismatch");

    // Present nodes, ego first, surrounding in slot order.
    std::vector<int> slots{0};
    for (int s = 1; s < spec_.slot_count; ++s)
      if (in.obs->slots[s].present) slots.push_back(s);
    const int n = static_cast<int>(slots.size());
    std::vector<int> local_of_slot(spec_.slot_count, -1);
    for (int i = 0; i < n; ++i) local_of_slot[slots[i]] = i;

    // Bottom level: per-vehicle LSTM over that vehicle's feature slice.
    std::vector<ValueId> embs(n);
    for (int i = 0; i < n; ++i) {
      const int s = slots[i];
      const auto& slot = in.obs->slots[s];
      std::vector<double> x{slot.position.x * spec_.pos_scale,
                            slot.position.y * spec_.pos_scale,
                            slot.velocity.x * spec_.vel_scale,
                            slot.velocity.y * spec_.vel_scale, 1.0};
      if (spec_.latent_input) x.push_back(latent_at(in, s));
      if (s == 0) x.push_back(in.ego_progress * spec_.progress_scale);

      const std::uint64_t uid =
          s == 0 ? 1
                 : (s < static_cast<int>(in.slot_uid.size()) ? in.slot_uid[s] : 0);
      LstmState prev = bottom_states_[s];
      if (prev.h < 0 || last_uid_[s] != uid) {
        prev = {tape.zeros(spec_.node_dim), tape.zeros(spec_.node_dim)};
        top_states_[s] = {tape.zeros(spec_.node_dim), tape.zeros(spec_.node_dim)};
      }
      const LstmParams& lp = s == 0 ? bottom_ego_ : bottom_shared_;
      bottom_states_[s] = lstm_cell(tape, lp, tape.input(x), prev);
      last_uid_[s] = uid;
      embs[i] = bottom_states_[s].h;
    }

    // Spatial convolutions over the influence graph.
    if (spec_.conv_layers > 0) {
      AdjList in_nbrs(n);
      if (in.graph != nullptr) {
        for (const auto& [src, dst] : in.graph->edges) {
          const int ls = local_of_slot[src];
          const int ld = local_of_slot[dst];
          if (ls >= 0 && ld >= 0) in_nbrs[ld].push_back(ls);
        }
      }
      for (int l = 0; l < spec_.conv_layers; ++l) {
        switch (spec_.kind) {
          case NetKind::kStgSage:
            embs = graphsage_conv(tape, embs, in_nbrs, sage_[l]);
            break;
          case NetKind::kStGat:
            embs = gat_conv(tape, embs, in_nbrs, gat_[l]);
            break;
          case NetKind::kStGcn:
            embs = gcn_conv(tape, embs, in_nbrs, gcn_[l]);
            break;
          case NetKind::kLstm:
            break;
        }
      }
    }

    // Top level: per-vehicle LSTM over the updated embedding.
    StepOutput out;
    for (int i = 0; i < n; ++i) {
      const int s = slots[i];
      const LstmParams& lp = s == 0 ? top_ego_ : top_shared_;
      top_states_[s] = lstm_cell(tape, lp, embs[i], top_states_[s]);
      const ValueId top = top_states_[s].h;
      if (s == 0) {
        out.ego_embedding = top;
        if (spec_.action_head) out.action_logits = linear(tape, action_head_, top);
        if (spec_.value_head) out.value = linear(tape, value_head_, top);
      } else if (spec_.latent_head) {
        out.latent_logits.emplace_back(s,
                                       tape.pick(linear(tape, latent_head_, top), 0));
      }
    }
    return out;
  }

  const NetworkSpec& spec() const override { return spec_; }

 private:
  NetworkSpec spec_;
  int surr_input_dim_ = 0;
  int ego_input_dim_ = 0;
  LstmParams bottom_shared_, bottom_ego_, top_shared_, top_ego_;
  std::vector<SageParams> sage_;
  std::vector<GatParams> gat_;
  std::vector<GcnParams> gcn_;
  LinearParams action_head_, value_head_, latent_head_;
  std::vector<LstmState> bottom_states_, top_states_;
  std::vector<std::uint64_t> last_uid_;
  Tape* episode_tape_ = nullptr;
};

}  // namespace

std::unique_ptr<Network> make_network(const NetworkSpec& spec, Rng& rng) {
  if (spec.kind == NetKind::kLstm)
    return std::make_unique<LstmNet>(spec, rng);
  return std::make_unique<StgNet>(spec, rng);
}

}  // namespace tsim::nn
