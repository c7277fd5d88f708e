#include "tsim/nn/tensor.hpp"

#include <cmath>
#include <cstring>

#include "tsim/error.hpp"

namespace tsim::nn {

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(shape_size(t.shape), 0.0);
  t.requires_grad = requires_grad;
  if (requires_grad) t.grad.assign(t.values.size(), 0.0);
  return t;
}

void Tensor::zero_grad() {
  grad.assign(values.size(), 0.0);
}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

Tensor& ParameterSet::create(const std::string& path, Shape shape) {
  auto [it, inserted] = items_.emplace(path, Tensor::zeros(shape, true));
  if (!inserted) throw ContractError("ParameterSet: duplicate path " + path);
  return it->second;
}

Tensor& ParameterSet::create_uniform(const std::string& path, Shape shape,
                                     int fan_in, Rng& rng) {
  Tensor& t = create(path, std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

Tensor& ParameterSet::at(const std::string& path) {
  auto it = items_.find(path);
  if (it == items_.end())
    throw ContractError("ParameterSet: unknown path " + path);
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& path) const {
  auto it = items_.find(path);
  if (it == items_.end())
    throw ContractError("ParameterSet: unknown path " + path);
  return it->second;
}

bool ParameterSet::contains(const std::string& path) const {
  return items_.count(path) > 0;
}

std::size_t ParameterSet::total_count() const {
  std::size_t n = 0;
  for (const auto& [path, t] : items_) n += t.values.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [path, t] : items_) t.zero_grad();
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [path, t] : items_) {
    mix(path.data(), path.size());
    mix(t.values.data(), t.values.size() * sizeof(double));
  }
  return h;
}

}  // namespace tsim::nn
