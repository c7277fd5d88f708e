#include "tsim/episode_log.hpp"

#include "tsim/error.hpp"

namespace tsim::envs {

using nlohmann::json;

json to_json(const EpisodeLogRecord& rec) {
  json slots = json::array();
  for (const auto& s : rec.obs.slots) {
    slots.push_back({s.position.x, s.position.y, s.velocity.x, s.velocity.y,
                     s.present ? 1.0 : 0.0});
  }
  json latents = json::array();
  for (const auto& z : rec.true_latents) {
    if (z.has_value())
      latents.push_back(*z);
    else
      latents.push_back(nullptr);
  }
  json edges = json::array();
  for (const auto& [src, dst] : rec.graph_edges) edges.push_back({src, dst});

  json j{{"t", rec.t},          {"obs", slots},
         {"action", rec.action}, {"reward", rec.reward},
         {"done", rec.done},     {"true_latents", latents},
         {"graph_edges", edges}};
  if (rec.inferred_probs.has_value()) {
    json probs = json::array();
    for (const auto& p : *rec.inferred_probs) {
      if (p.has_value())
        probs.push_back(*p);
      else
        probs.push_back(nullptr);
    }
    j["inferred_probs"] = probs;
  }
  if (rec.action_dist.has_value()) j["action_dist"] = *rec.action_dist;
  return j;
}

EpisodeLogRecord record_from_json(const json& j) {
  EpisodeLogRecord rec;
  rec.t = j.at("t").get<int>();
  for (const auto& s : j.at("obs")) {
    SlotObs o;
    o.position = {s.at(0).get<double>(), s.at(1).get<double>()};
    o.velocity = {s.at(2).get<double>(), s.at(3).get<double>()};
    o.present = s.at(4).get<double>() != 0.0;
    rec.obs.slots.push_back(o);
  }
  rec.action = j.at("action").get<int>();
  rec.reward = j.at("reward").get<double>();
  rec.done = j.at("done").get<bool>();
  for (const auto& z : j.at("true_latents")) {
    if (z.is_null())
      rec.true_latents.push_back(std::nullopt);
    else
      rec.true_latents.push_back(z.get<int>());
  }
  for (const auto& e : j.at("graph_edges"))
    rec.graph_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  if (j.contains("inferred_probs")) {
    std::vector<std::optional<double>> probs;
    for (const auto& p : j.at("inferred_probs")) {
      if (p.is_null())
        probs.push_back(std::nullopt);
      else
        probs.push_back(p.get<double>());
    }
    rec.inferred_probs = std::move(probs);
  }
  if (j.contains("action_dist"))
    rec.action_dist = j.at("action_dist").get<std::array<double, 3>>();
  return rec;
}

EpisodeLogRecord make_log_record(int t, const Observation& obs, int action,
                                 double reward, bool done, const StepInfo& info,
                                 const TrafficGraph& graph) {
  EpisodeLogRecord rec;
  rec.t = t;
  rec.obs = obs;
  rec.action = action;
  rec.reward = reward;
  rec.done = done;
  rec.true_latents.resize(info.true_latents.size());
  for (std::size_t i = 0; i < info.true_latents.size(); ++i) {
    if (i > 0 && info.true_latents[i].present)
      rec.true_latents[i] =
          info.true_latents[i].style == DriverStyle::kConservative ? 1 : 0;
  }
  rec.graph_edges = graph.edges;
  return rec;
}

EpisodeLogWriter::EpisodeLogWriter(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("episode log: cannot open " + path);
}

void EpisodeLogWriter::write(const EpisodeLogRecord& rec) {
  out_ << to_json(rec).dump() << '\n';
}

}  // namespace tsim::envs
