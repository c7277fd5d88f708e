#include "tsim/nn/graph_conv.hpp"

#include <algorithm>
#include <cmath>

#include "tsim/error.hpp"

namespace tsim::nn {

namespace {
void check_adjacency(const std::vector<ValueId>& embs, const AdjList& in_nbrs) {
  if (embs.size() != in_nbrs.size())
    throw ContractError("graph conv: adjacency/embedding size mismatch");
}

// Aggregation runs in sorted index order so outputs are bit-identical
// under any permutation of the caller's neighbor lists.
std::vector<int> sorted_neighbors(const std::vector<int>& nbrs) {
  std::vector<int> s = nbrs;
  std::sort(s.begin(), s.end());
  return s;
}
}  // namespace

SageParams make_sage(ParameterSet& params, const std::string& prefix, int dim,
                     Rng& rng) {
  return {make_linear(params, prefix, 2 * dim, dim, rng), dim};
}

SageParams bind_sage(ParameterSet& params, const std::string& prefix, int dim) {
  return {bind_linear(params, prefix, 2 * dim, dim), dim};
}

std::vector<ValueId> graphsage_conv(Tape& tape,
                                    const std::vector<ValueId>& embs,
                                    const AdjList& in_nbrs,
                                    const SageParams& p) {
  check_adjacency(embs, in_nbrs);
  std::vector<ValueId> out;
  out.reserve(embs.size());
  for (std::size_t i = 0; i < embs.size(); ++i) {
    const std::vector<int> nbrs = sorted_neighbors(in_nbrs[i]);
    ValueId agg;
    if (nbrs.empty()) {
      agg = tape.zeros(p.dim);
    } else {
      std::vector<ValueId> rows;
      rows.reserve(nbrs.size());
      for (int j : nbrs) rows.push_back(embs[j]);
      std::vector<double> w(nbrs.size(), 1.0 / static_cast<double>(nbrs.size()));
      agg = tape.weighted_sum(tape.input(w), rows);
    }
    const ValueId both = tape.concat(std::array{embs[i], agg});
    out.push_back(tape.relu(linear(tape, p.lin, both)));
  }
  return out;
}

GatParams make_gat(ParameterSet& params, const std::string& prefix, int dim,
                   int heads, Rng& rng) {
  GatParams p;
  p.dim = dim;
  p.heads = heads;
  for (int k = 0; k < heads; ++k) {
    const std::string head = prefix + "/head" + std::to_string(k);
    p.w_heads.push_back(
        &params.create_uniform(head + "/w", {dim, dim}, dim, rng));
    p.attn_heads.push_back(
        &params.create_uniform(head + "/a", {2 * dim}, 2 * dim, rng));
  }
  p.b = &params.create_uniform(prefix + "/b", {dim}, dim, rng);
  return p;
}

GatParams bind_gat(ParameterSet& params, const std::string& prefix, int dim,
                   int heads) {
  GatParams p;
  p.dim = dim;
  p.heads = heads;
  for (int k = 0; k < heads; ++k) {
    const std::string head = prefix + "/head" + std::to_string(k);
    p.w_heads.push_back(&params.at(head + "/w"));
    p.attn_heads.push_back(&params.at(head + "/a"));
  }
  p.b = &params.at(prefix + "/b");
  return p;
}

std::vector<ValueId> gat_conv(Tape& tape, const std::vector<ValueId>& embs,
                              const AdjList& in_nbrs, const GatParams& p) {
  check_adjacency(embs, in_nbrs);
  const int n = static_cast<int>(embs.size());
  std::vector<ValueId> out;
  out.reserve(n);

  // Per head, transform every node once.
  std::vector<std::vector<ValueId>> wh(p.heads, std::vector<ValueId>(n));
  for (int k = 0; k < p.heads; ++k) {
    const ValueId w = tape.leaf(*p.w_heads[k]);
    for (int i = 0; i < n; ++i)
      wh[k][i] = tape.matvec(w, p.dim, p.dim, embs[i]);
  }

  for (int i = 0; i < n; ++i) {
    std::vector<ValueId> head_outputs;
    head_outputs.reserve(p.heads);
    for (int k = 0; k < p.heads; ++k) {
      const ValueId attn = tape.leaf(*p.attn_heads[k]);
      std::vector<int> group = sorted_neighbors(in_nbrs[i]);
      group.push_back(i);  // attention over neighbors plus self
      std::vector<ValueId> scores;
      std::vector<ValueId> rows;
      scores.reserve(group.size());
      rows.reserve(group.size());
      for (int j : group) {
        const ValueId pair = tape.concat(std::array{wh[k][i], wh[k][j]});
        scores.push_back(tape.leaky_relu(tape.dot(attn, pair), p.leaky_slope));
        rows.push_back(wh[k][j]);
      }
      const ValueId alpha = tape.softmax(tape.concat(scores));
      head_outputs.push_back(tape.weighted_sum(alpha, rows));
    }
    ValueId combined = tape.scale(tape.add_n(head_outputs),
                                  1.0 / static_cast<double>(p.heads));
    out.push_back(tape.relu(tape.add(combined, tape.leaf(*p.b))));
  }
  return out;
}

GcnParams make_gcn(ParameterSet& params, const std::string& prefix, int dim,
                   Rng& rng) {
  return {make_linear(params, prefix, dim, dim, rng), dim};
}

GcnParams bind_gcn(ParameterSet& params, const std::string& prefix, int dim) {
  return {bind_linear(params, prefix, dim, dim), dim};
}

std::vector<ValueId> gcn_conv(Tape& tape, const std::vector<ValueId>& embs,
                              const AdjList& in_nbrs, const GcnParams& p) {
  check_adjacency(embs, in_nbrs);
  const int n = static_cast<int>(embs.size());
  std::vector<double> degree(n);
  for (int i = 0; i < n; ++i)
    degree[i] = static_cast<double>(in_nbrs[i].size()) + 1.0;

  std::vector<ValueId> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> group = sorted_neighbors(in_nbrs[i]);
    group.push_back(i);
    std::vector<ValueId> rows;
    std::vector<double> coeff;
    rows.reserve(group.size());
    coeff.reserve(group.size());
    for (int j : group) {
      rows.push_back(embs[j]);
      coeff.push_back(1.0 / std::sqrt(degree[i] * degree[j]));
    }
    const ValueId agg = tape.weighted_sum(tape.input(coeff), rows);
    out.push_back(tape.relu(linear(tape, p.lin, agg)));
  }
  return out;
}

}  // namespace tsim::nn
