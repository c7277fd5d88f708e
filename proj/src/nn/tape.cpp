#include "tsim/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "tsim/error.hpp"

namespace tsim::nn {

std::span<const double> Tape::vals(ValueId id) const {
  const Node& n = nodes_[id];
  if (n.op == Op::kLeaf) return {n.bound->values.data(), n.bound->values.size()};
  return {n.val.data(), n.val.size()};
}

double Tape::scalar(ValueId id) const {
  if (len(id) != 1) throw ContractError("Tape::scalar on non-scalar node");
  return vals(id)[0];
}

int Tape::len(ValueId id) const { return nodes_[id].len; }

ValueId Tape::leaf(Tensor& t) {
  auto it = leaf_cache_.find(&t);
  if (it != leaf_cache_.end()) return it->second;
  t.ensure_grad();
  Node n;
  n.op = Op::kLeaf;
  n.len = t.size();
  n.bound = &t;
  const ValueId id = push(std::move(n));
  leaf_cache_.emplace(&t, id);
  return id;
}

ValueId Tape::input(std::span<const double> v) {
  Node n;
  n.op = Op::kInput;
  n.len = static_cast<int>(v.size());
  n.val.assign(v.begin(), v.end());
  return push(std::move(n));
}

ValueId Tape::input1(double v) { return input({&v, 1}); }

ValueId Tape::zeros(int lenv) {
  Node n;
  n.op = Op::kInput;
  n.len = lenv;
  n.val.assign(lenv, 0.0);
  return push(std::move(n));
}

namespace {
void check_same_len(int a, int b, const char* what) {
  if (a != b) throw ContractError(std::string("Tape: length mismatch in ") + what);
}
}  // namespace

ValueId Tape::add(ValueId a, ValueId b) {
  check_same_len(len(a), len(b), "add");
  Node n;
  n.op = Op::kAdd;
  n.len = len(a);
  n.a = a;
  n.b = b;
  n.val.resize(n.len);
  const auto va = vals(a), vb = vals(b);
  for (int i = 0; i < n.len; ++i) n.val[i] = va[i] + vb[i];
  return push(std::move(n));
}

ValueId Tape::sub(ValueId a, ValueId b) {
  check_same_len(len(a), len(b), "sub");
  Node n;
  n.op = Op::kSub;
  n.len = len(a);
  n.a = a;
  n.b = b;
  n.val.resize(n.len);
  const auto va = vals(a), vb = vals(b);
  for (int i = 0; i < n.len; ++i) n.val[i] = va[i] - vb[i];
  return push(std::move(n));
}

ValueId Tape::mul(ValueId a, ValueId b) {
  check_same_len(len(a), len(b), "mul");
  Node n;
  n.op = Op::kMul;
  n.len = len(a);
  n.a = a;
  n.b = b;
  n.val.resize(n.len);
  const auto va = vals(a), vb = vals(b);
  for (int i = 0; i < n.len; ++i) n.val[i] = va[i] * vb[i];
  return push(std::move(n));
}

ValueId Tape::scale(ValueId a, double c) {
  Node n;
  n.op = Op::kScale;
  n.len = len(a);
  n.a = a;
  n.c0 = c;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = c * va[i];
  return push(std::move(n));
}

ValueId Tape::add_n(std::span<const ValueId> xs) {
  if (xs.empty()) throw ContractError("Tape::add_n needs at least one input");
  Node n;
  n.op = Op::kAddN;
  n.len = len(xs[0]);
  n.args.assign(xs.begin(), xs.end());
  n.val.assign(n.len, 0.0);
  for (ValueId x : xs) {
    check_same_len(len(x), n.len, "add_n");
    const auto vx = vals(x);
    for (int i = 0; i < n.len; ++i) n.val[i] += vx[i];
  }
  return push(std::move(n));
}

ValueId Tape::concat(std::span<const ValueId> xs) {
  if (xs.empty()) throw ContractError("Tape::concat needs at least one input");
  Node n;
  n.op = Op::kConcat;
  n.args.assign(xs.begin(), xs.end());
  int total = 0;
  for (ValueId x : xs) total += len(x);
  n.len = total;
  n.val.reserve(total);
  for (ValueId x : xs) {
    const auto vx = vals(x);
    n.val.insert(n.val.end(), vx.begin(), vx.end());
  }
  return push(std::move(n));
}

ValueId Tape::slice(ValueId a, int offset, int lenv) {
  if (offset < 0 || offset + lenv > len(a))
    throw ContractError("Tape::slice out of range");
  Node n;
  n.op = Op::kSlice;
  n.len = lenv;
  n.a = a;
  n.i0 = offset;
  const auto va = vals(a);
  n.val.assign(va.begin() + offset, va.begin() + offset + lenv);
  return push(std::move(n));
}

ValueId Tape::pick(ValueId a, int index) {
  if (index < 0 || index >= len(a)) throw ContractError("Tape::pick out of range");
  Node n;
  n.op = Op::kPick;
  n.len = 1;
  n.a = a;
  n.i0 = index;
  n.val.assign(1, vals(a)[index]);
  return push(std::move(n));
}

ValueId Tape::matvec(ValueId w, int m, int nn, ValueId x) {
  if (len(w) != m * nn) throw ContractError("Tape::matvec: bad matrix size");
  check_same_len(len(x), nn, "matvec");
  Node n;
  n.op = Op::kMatVec;
  n.len = m;
  n.a = w;
  n.b = x;
  n.i0 = m;
  n.i1 = nn;
  n.val.resize(m);
  const auto vw = vals(w), vx = vals(x);
  for (int r = 0; r < m; ++r) {
    const double* row = vw.data() + static_cast<std::size_t>(r) * nn;
    double s = 0.0;
    for (int c = 0; c < nn; ++c) s += row[c] * vx[c];
    n.val[r] = s;
  }
  return push(std::move(n));
}

ValueId Tape::dot(ValueId a, ValueId b) {
  check_same_len(len(a), len(b), "dot");
  Node n;
  n.op = Op::kDot;
  n.len = 1;
  n.a = a;
  n.b = b;
  const auto va = vals(a), vb = vals(b);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  n.val.assign(1, s);
  return push(std::move(n));
}

ValueId Tape::weighted_sum(ValueId weights, std::span<const ValueId> rows) {
  if (rows.empty())
    throw ContractError("Tape::weighted_sum needs at least one row");
  check_same_len(len(weights), static_cast<int>(rows.size()), "weighted_sum");
  Node n;
  n.op = Op::kWeightedSum;
  n.len = len(rows[0]);
  n.a = weights;
  n.args.assign(rows.begin(), rows.end());
  n.val.assign(n.len, 0.0);
  const auto vw = vals(weights);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    check_same_len(len(rows[j]), n.len, "weighted_sum");
    const auto vr = vals(rows[j]);
    for (int i = 0; i < n.len; ++i) n.val[i] += vw[j] * vr[i];
  }
  return push(std::move(n));
}

ValueId Tape::sigmoid(ValueId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = 1.0 / (1.0 + std::exp(-va[i]));
  return push(std::move(n));
}

ValueId Tape::tanh_(ValueId a) {
  Node n;
  n.op = Op::kTanh;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = std::tanh(va[i]);
  return push(std::move(n));
}

ValueId Tape::relu(ValueId a) {
  Node n;
  n.op = Op::kRelu;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = va[i] > 0.0 ? va[i] : 0.0;
  return push(std::move(n));
}

ValueId Tape::leaky_relu(ValueId a, double slope) {
  Node n;
  n.op = Op::kLeakyRelu;
  n.len = len(a);
  n.a = a;
  n.c0 = slope;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i)
    n.val[i] = va[i] > 0.0 ? va[i] : slope * va[i];
  return push(std::move(n));
}

ValueId Tape::exp_(ValueId a) {
  Node n;
  n.op = Op::kExp;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = std::exp(va[i]);
  return push(std::move(n));
}

ValueId Tape::log_(ValueId a) {
  Node n;
  n.op = Op::kLog;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = std::log(va[i]);
  return push(std::move(n));
}

ValueId Tape::softmax(ValueId a) {
  Node n;
  n.op = Op::kSoftmax;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  double mx = va[0];
  for (int i = 1; i < n.len; ++i) mx = std::max(mx, va[i]);
  double z = 0.0;
  for (int i = 0; i < n.len; ++i) {
    n.val[i] = std::exp(va[i] - mx);
    z += n.val[i];
  }
  for (int i = 0; i < n.len; ++i) n.val[i] /= z;
  return push(std::move(n));
}

ValueId Tape::log_softmax(ValueId a) {
  Node n;
  n.op = Op::kLogSoftmax;
  n.len = len(a);
  n.a = a;
  n.val.resize(n.len);
  const auto va = vals(a);
  double mx = va[0];
  for (int i = 1; i < n.len; ++i) mx = std::max(mx, va[i]);
  double z = 0.0;
  for (int i = 0; i < n.len; ++i) z += std::exp(va[i] - mx);
  const double logz = mx + std::log(z);
  for (int i = 0; i < n.len; ++i) n.val[i] = va[i] - logz;
  return push(std::move(n));
}

ValueId Tape::sum(ValueId a) {
  Node n;
  n.op = Op::kSum;
  n.len = 1;
  n.a = a;
  const auto va = vals(a);
  double s = 0.0;
  for (double v : va) s += v;
  n.val.assign(1, s);
  return push(std::move(n));
}

ValueId Tape::mean(ValueId a) {
  Node n;
  n.op = Op::kMean;
  n.len = 1;
  n.a = a;
  const auto va = vals(a);
  double s = 0.0;
  for (double v : va) s += v;
  n.val.assign(1, s / static_cast<double>(va.size()));
  return push(std::move(n));
}

ValueId Tape::clamp(ValueId a, double lo, double hi) {
  Node n;
  n.op = Op::kClamp;
  n.len = len(a);
  n.a = a;
  n.c0 = lo;
  n.c1 = hi;
  n.val.resize(n.len);
  const auto va = vals(a);
  for (int i = 0; i < n.len; ++i) n.val[i] = std::clamp(va[i], lo, hi);
  return push(std::move(n));
}

ValueId Tape::min2(ValueId a, ValueId b) {
  check_same_len(len(a), len(b), "min2");
  Node n;
  n.op = Op::kMin2;
  n.len = len(a);
  n.a = a;
  n.b = b;
  n.val.resize(n.len);
  const auto va = vals(a), vb = vals(b);
  for (int i = 0; i < n.len; ++i) n.val[i] = std::min(va[i], vb[i]);
  return push(std::move(n));
}

ValueId Tape::bce_logit(ValueId z, double label) {
  if (len(z) != 1) throw ContractError("Tape::bce_logit expects a scalar logit");
  Node n;
  n.op = Op::kBceLogit;
  n.len = 1;
  n.a = z;
  n.c0 = label;
  const double x = vals(z)[0];
  // -label*log(sigmoid(x)) - (1-label)*log(1-sigmoid(x)), stable form.
  const double loss =
      std::max(x, 0.0) - x * label + std::log1p(std::exp(-std::abs(x)));
  n.val.assign(1, loss);
  return push(std::move(n));
}

void Tape::backward(ValueId loss) {
  if (loss < 0 || loss >= static_cast<ValueId>(nodes_.size()))
    throw ContractError("Tape::backward: invalid id");
  if (nodes_[loss].len != 1)
    throw ContractError("Tape::backward requires a scalar loss");

  for (ValueId i = 0; i <= loss; ++i) nodes_[i].grad.assign(nodes_[i].len, 0.0);
  nodes_[loss].grad[0] = 1.0;

  for (ValueId i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    const auto& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        if (n.bound->requires_grad) {
          n.bound->ensure_grad();
          for (int k = 0; k < n.len; ++k) n.bound->grad[k] += n.grad[k];
        }
        break;
      case Op::kInput:
        break;
      case Op::kAdd:
        for (int k = 0; k < n.len; ++k) {
          nodes_[n.a].grad[k] += g[k];
          nodes_[n.b].grad[k] += g[k];
        }
        break;
      case Op::kSub:
        for (int k = 0; k < n.len; ++k) {
          nodes_[n.a].grad[k] += g[k];
          nodes_[n.b].grad[k] -= g[k];
        }
        break;
      case Op::kMul: {
        const auto va = vals(n.a), vb = vals(n.b);
        for (int k = 0; k < n.len; ++k) {
          nodes_[n.a].grad[k] += g[k] * vb[k];
          nodes_[n.b].grad[k] += g[k] * va[k];
        }
        break;
      }
      case Op::kScale:
        for (int k = 0; k < n.len; ++k) nodes_[n.a].grad[k] += n.c0 * g[k];
        break;
      case Op::kAddN:
        for (ValueId x : n.args)
          for (int k = 0; k < n.len; ++k) nodes_[x].grad[k] += g[k];
        break;
      case Op::kConcat: {
        int off = 0;
        for (ValueId x : n.args) {
          const int lx = nodes_[x].len;
          for (int k = 0; k < lx; ++k) nodes_[x].grad[k] += g[off + k];
          off += lx;
        }
        break;
      }
      case Op::kSlice:
        for (int k = 0; k < n.len; ++k) nodes_[n.a].grad[n.i0 + k] += g[k];
        break;
      case Op::kPick:
        nodes_[n.a].grad[n.i0] += g[0];
        break;
      case Op::kMatVec: {
        const int m = n.i0, cols = n.i1;
        const auto vw = vals(n.a), vx = vals(n.b);
        auto& gw = nodes_[n.a].grad;
        auto& gx = nodes_[n.b].grad;
        for (int r = 0; r < m; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          double* gw_row = gw.data() + static_cast<std::size_t>(r) * cols;
          const double* w_row = vw.data() + static_cast<std::size_t>(r) * cols;
          for (int c = 0; c < cols; ++c) {
            gw_row[c] += gr * vx[c];
            gx[c] += gr * w_row[c];
          }
        }
        break;
      }
      case Op::kDot: {
        const auto va = vals(n.a), vb = vals(n.b);
        for (std::size_t k = 0; k < va.size(); ++k) {
          nodes_[n.a].grad[k] += g[0] * vb[k];
          nodes_[n.b].grad[k] += g[0] * va[k];
        }
        break;
      }
      case Op::kWeightedSum: {
        const auto vw = vals(n.a);
        for (std::size_t j = 0; j < n.args.size(); ++j) {
          const auto vr = vals(n.args[j]);
          auto& gr = nodes_[n.args[j]].grad;
          double gw = 0.0;
          for (int k = 0; k < n.len; ++k) {
            gr[k] += vw[j] * g[k];
            gw += vr[k] * g[k];
          }
          nodes_[n.a].grad[j] += gw;
        }
        break;
      }
      case Op::kSigmoid:
        for (int k = 0; k < n.len; ++k) {
          const double y = n.val[k];
          nodes_[n.a].grad[k] += g[k] * y * (1.0 - y);
        }
        break;
      case Op::kTanh:
        for (int k = 0; k < n.len; ++k) {
          const double y = n.val[k];
          nodes_[n.a].grad[k] += g[k] * (1.0 - y * y);
        }
        break;
      case Op::kRelu: {
        const auto va = vals(n.a);
        for (int k = 0; k < n.len; ++k)
          if (va[k] > 0.0) nodes_[n.a].grad[k] += g[k];
        break;
      }
      case Op::kLeakyRelu: {
        const auto va = vals(n.a);
        for (int k = 0; k < n.len; ++k)
          nodes_[n.a].grad[k] += g[k] * (va[k] > 0.0 ? 1.0 : n.c0);
        break;
      }
      case Op::kExp:
        for (int k = 0; k < n.len; ++k) nodes_[n.a].grad[k] += g[k] * n.val[k];
        break;
      case Op::kLog: {
        const auto va = vals(n.a);
        for (int k = 0; k < n.len; ++k) nodes_[n.a].grad[k] += g[k] / va[k];
        break;
      }
      case Op::kSoftmax: {
        double dot_gy = 0.0;
        for (int k = 0; k < n.len; ++k) dot_gy += g[k] * n.val[k];
        for (int k = 0; k < n.len; ++k)
          nodes_[n.a].grad[k] += n.val[k] * (g[k] - dot_gy);
        break;
      }
      case Op::kLogSoftmax: {
        double gsum = 0.0;
        for (int k = 0; k < n.len; ++k) gsum += g[k];
        for (int k = 0; k < n.len; ++k)
          nodes_[n.a].grad[k] += g[k] - std::exp(n.val[k]) * gsum;
        break;
      }
      case Op::kSum:
        for (int k = 0; k < nodes_[n.a].len; ++k) nodes_[n.a].grad[k] += g[0];
        break;
      case Op::kMean: {
        const double inv = 1.0 / nodes_[n.a].len;
        for (int k = 0; k < nodes_[n.a].len; ++k)
          nodes_[n.a].grad[k] += g[0] * inv;
        break;
      }
      case Op::kClamp: {
        const auto va = vals(n.a);
        for (int k = 0; k < n.len; ++k)
          if (va[k] >= n.c0 && va[k] <= n.c1) nodes_[n.a].grad[k] += g[k];
        break;
      }
      case Op::kMin2: {
        const auto va = vals(n.a), vb = vals(n.b);
        for (int k = 0; k < n.len; ++k) {
          if (va[k] <= vb[k])
            nodes_[n.a].grad[k] += g[k];
          else
            nodes_[n.b].grad[k] += g[k];
        }
        break;
      }
      case Op::kBceLogit: {
        const double x = vals(n.a)[0];
        const double sig = 1.0 / (1.0 + std::exp(-x));
        nodes_[n.a].grad[0] += g[0] * (sig - n.c0);
        break;
      }
    }
  }
}

}  // namespace tsim::nn
