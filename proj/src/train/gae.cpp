#include "tsim/train/gae.hpp"

#include <algorithm>
#include <cmath>

#include "tsim/error.hpp"

namespace tsim::train {

GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma,
                      double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw ContractError("compute_gae: input length mismatch");
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_advantage = 0.0;
  double next_value = 0.0;  // zero bootstrap at array end and episode ends
  for (std::size_t idx = n; idx-- > 0;) {
    const double nonterminal = dones[idx] ? 0.0 : 1.0;
    const double delta =
        rewards[idx] + gamma * next_value * nonterminal - values[idx];
    next_advantage = delta + gamma * lambda * nonterminal * next_advantage;
    out.advantages[idx] = next_advantage;
    out.returns[idx] = next_advantage + values[idx];
    next_value = values[idx];
  }
  return out;
}

void normalize(std::span<double> xs) {
  if (xs.empty()) return;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double inv = 1.0 / std::max(std::sqrt(var), 1e-8);
  for (double& x : xs) x = (x - mean) * inv;
}

}  // namespace tsim::train
