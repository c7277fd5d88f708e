#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tsim::train {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation over a flat step array. `dones` marks
/// episode ends; the bootstrap value after a terminal step (and after the
/// final array entry) is zero, since collection only stores whole episodes.
///   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
///   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// Returns raw (unnormalized) advantages plus returns = A + V.
GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma,
                      double lambda);

/// Normalizes to zero mean / unit variance in place (std floored at 1e-8).
void normalize(std::span<double> xs);

}  // namespace tsim::train
