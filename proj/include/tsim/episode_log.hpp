#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsim/env.hpp"

namespace tsim::envs {

/// One JSON-lines record per environment step. The interpretability dump
/// additionally fills inferred_probs (per observation slot; absent slots
/// carry null) and the policy action distribution.
struct EpisodeLogRecord {
  int t = 0;
  Observation obs;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  std::vector<std::optional<int>> true_latents;  // 1 conservative, 0 aggressive
  std::vector<std::pair<int, int>> graph_edges;
  std::optional<std::vector<std::optional<double>>> inferred_probs;
  std::optional<std::array<double, 3>> action_dist;
};

nlohmann::json to_json(const EpisodeLogRecord& rec);
EpisodeLogRecord record_from_json(const nlohmann::json& j);

EpisodeLogRecord make_log_record(int t, const Observation& obs, int action,
                                 double reward, bool done, const StepInfo& info,
                                 const TrafficGraph& graph);

class EpisodeLogWriter {
 public:
  explicit EpisodeLogWriter(const std::string& path);

  void write(const EpisodeLogRecord& rec);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace tsim::envs
