#pragma once

#include <string>
#include <vector>

#include "tsim/nn/tensor.hpp"

namespace tsim::nn {

/// Adam with bias correction over an explicit list of tensors. Each
/// optimizer instance keeps its own moment buffers, so two optimizers over
/// overlapping parameters never share state.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor*> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update from the tensors' grad buffers (grads are left
  /// untouched; call zero_grad afterwards).
  void step();

  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  const std::vector<Tensor*>& params() const { return params_; }

 private:
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
};

/// Collects tensors from a ParameterSet whose path matches any of the given
/// prefixes (empty prefix list selects everything). Order follows the set's
/// lexicographic path order.
std::vector<Tensor*> select_params(ParameterSet& set,
                                   const std::vector<std::string>& prefixes = {});

/// Everything except paths starting with one of the excluded prefixes.
std::vector<Tensor*> select_params_except(
    ParameterSet& set, const std::vector<std::string>& excluded);

}  // namespace tsim::nn
