#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "tsim/nn/tensor.hpp"

namespace tsim::nn {

using ValueId = int;

/// Reverse-mode autodiff tape over dense double vectors. Operations compute
/// forward values immediately and record enough structure for a later
/// backward() sweep. Nodes are created in topological order, so the sweep
/// is a simple reverse walk.
///
/// Parameters enter through leaf(); their gradients accumulate into
/// Tensor::grad on every backward() call (callers zero grads between
/// optimizer steps). A tape is single-use with respect to parameter values:
/// once an optimizer mutates a bound tensor, recorded forward values are
/// stale and a fresh forward pass is needed.
class Tape {
 public:
  Tape() { nodes_.reserve(1 << 12); }

  // Graph inputs.
  ValueId leaf(Tensor& t);
  ValueId input(std::span<const double> v);
  ValueId input1(double v);
  ValueId zeros(int len);

  // Elementwise arithmetic (equal lengths).
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId scale(ValueId a, double c);
  ValueId add_n(std::span<const ValueId> xs);

  // Shape plumbing.
  ValueId concat(std::span<const ValueId> xs);
  ValueId slice(ValueId a, int offset, int len);
  ValueId pick(ValueId a, int index);

  // Linear algebra. W must have m*n elements (row-major), x must have n.
  ValueId matvec(ValueId w, int m, int n, ValueId x);
  ValueId dot(ValueId a, ValueId b);

  // Aggregation: out = sum_j weights[j] * rows[j].
  ValueId weighted_sum(ValueId weights, std::span<const ValueId> rows);

  // Nonlinearities.
  ValueId sigmoid(ValueId a);
  ValueId tanh_(ValueId a);
  ValueId relu(ValueId a);
  ValueId leaky_relu(ValueId a, double slope);
  ValueId exp_(ValueId a);
  ValueId log_(ValueId a);
  ValueId softmax(ValueId a);
  ValueId log_softmax(ValueId a);

  // Reductions and losses.
  ValueId sum(ValueId a);
  ValueId mean(ValueId a);
  /// Zero gradient outside [lo, hi].
  ValueId clamp(ValueId a, double lo, double hi);
  /// Elementwise min; ties route the gradient to a.
  ValueId min2(ValueId a, ValueId b);
  /// Numerically stable binary cross-entropy on a logit (scalar).
  ValueId bce_logit(ValueId z, double label);

  /// Accumulates dLoss/dTensor into every reachable leaf's grad buffer.
  /// Throws ContractError unless loss is a scalar node.
  void backward(ValueId loss);

  std::span<const double> vals(ValueId id) const;
  double scalar(ValueId id) const;
  int len(ValueId id) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kInput,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddN,
    kConcat,
    kSlice,
    kMatVec,
    kDot,
    kWeightedSum,
    kSigmoid,
    kTanh,
    kRelu,
    kLeakyRelu,
    kExp,
    kLog,
    kSoftmax,
    kLogSoftmax,
    kPick,
    kSum,
    kMean,
    kClamp,
    kMin2,
    kBceLogit,
  };

  struct Node {
    Op op;
    int len = 0;
    ValueId a = -1;
    ValueId b = -1;
    int i0 = 0;
    int i1 = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    std::vector<ValueId> args;
    std::vector<double> val;
    std::vector<double> grad;
    Tensor* bound = nullptr;
  };

  ValueId push(Node&& n) {
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size()) - 1;
  }
  const Node& node(ValueId id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, ValueId> leaf_cache_;
};

}  // namespace tsim::nn
