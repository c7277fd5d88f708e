#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsim/nn/tensor.hpp"

namespace tsim::nn {

/// Versioned binary container: a JSON header (caller-defined metadata such
/// as network specs and training mode) followed by named parameter sets
/// with raw little-endian 64-bit float payloads. Round trips are bit-exact.
struct CheckpointData {
  nlohmann::json header;
  std::vector<std::pair<std::string, ParameterSet>> sets;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const nlohmann::json& header,
                     const std::vector<std::pair<std::string, const ParameterSet*>>& sets);

CheckpointData load_checkpoint(const std::string& path);

/// Copies values from `src` into `dst`, requiring identical paths and
/// shapes; throws ContractError with the differing path otherwise.
void restore_parameters(ParameterSet& dst, const ParameterSet& src);

}  // namespace tsim::nn
