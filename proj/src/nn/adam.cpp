#include "tsim/nn/adam.hpp"

#include <cmath>

#include "tsim/error.hpp"

namespace tsim::nn {

AdamOptimizer::AdamOptimizer(std::vector<Tensor*> params, double lr,
                             double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* t : params_) {
    t->ensure_grad();
    m_.emplace_back(t->values.size(), 0.0);
    v_.emplace_back(t->values.size(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor& t = *params_[p];
    if (t.grad.size() != t.values.size())
      throw ContractError("AdamOptimizer::step: gradient shape mismatch");
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      const double g = t.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t.values[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (Tensor* t : params_) t->zero_grad();
}

std::vector<Tensor*> select_params(ParameterSet& set,
                                   const std::vector<std::string>& prefixes) {
  std::vector<Tensor*> out;
  for (auto& [path, tensor] : set) {
    if (prefixes.empty()) {
      out.push_back(&tensor);
      continue;
    }
    for (const auto& prefix : prefixes) {
      if (path.rfind(prefix, 0) == 0) {
        out.push_back(&tensor);
        break;
      }
    }
  }
  return out;
}

std::vector<Tensor*> select_params_except(
    ParameterSet& set, const std::vector<std::string>& excluded) {
  std::vector<Tensor*> out;
  for (auto& [path, tensor] : set) {
    bool skip = false;
    for (const auto& prefix : excluded) {
      if (path.rfind(prefix, 0) == 0) skip = true;
    }
    if (!skip) out.push_back(&tensor);
  }
  return out;
}

}  // namespace tsim::nn
