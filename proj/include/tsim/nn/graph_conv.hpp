#pragma once

#include <string>
#include <vector>

#include "tsim/nn/lstm.hpp"
#include "tsim/nn/tape.hpp"

namespace tsim::nn {

/// In-neighbor lists over local node indices.
using AdjList = std::vector<std::vector<int>>;

/// GraphSage layer: h_i' = ReLU(W concat(h_i, mean_{j in N(i)} h_j) + b).
/// Nodes without in-neighbors aggregate a zero vector.
struct SageParams {
  LinearParams lin;  // (dim, 2*dim)
  int dim = 0;
};

SageParams make_sage(ParameterSet& params, const std::string& prefix, int dim,
                     Rng& rng);
SageParams bind_sage(ParameterSet& params, const std::string& prefix, int dim);

std::vector<ValueId> graphsage_conv(Tape& tape,
                                    const std::vector<ValueId>& embs,
                                    const AdjList& in_nbrs,
                                    const SageParams& p);

/// GAT layer with multi-head attention (heads averaged). Scores use a
/// LeakyReLU(0.2) over a^T [W h_i || W h_j]; softmax runs over the
/// in-neighborhood plus the node itself.
struct GatParams {
  std::vector<Tensor*> w_heads;     // each (dim, dim)
  std::vector<Tensor*> attn_heads;  // each (2*dim)
  Tensor* b = nullptr;              // (dim)
  int dim = 0;
  int heads = 2;
  double leaky_slope = 0.2;
};

GatParams make_gat(ParameterSet& params, const std::string& prefix, int dim,
                   int heads, Rng& rng);
GatParams bind_gat(ParameterSet& params, const std::string& prefix, int dim,
                   int heads);

std::vector<ValueId> gat_conv(Tape& tape, const std::vector<ValueId>& embs,
                              const AdjList& in_nbrs, const GatParams& p);

/// GCN layer with self-loops and symmetric normalization:
/// h_i' = ReLU(W sum_{j in N(i) U {i}} h_j / sqrt(d_i d_j) + b), d = deg+1.
struct GcnParams {
  LinearParams lin;  // (dim, dim)
  int dim = 0;
};

GcnParams make_gcn(ParameterSet& params, const std::string& prefix, int dim,
                   Rng& rng);
GcnParams bind_gcn(ParameterSet& params, const std::string& prefix, int dim);

std::vector<ValueId> gcn_conv(Tape& tape, const std::vector<ValueId>& embs,
                              const AdjList& in_nbrs, const GcnParams& p);

}  // namespace tsim::nn
