#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tsim/rng.hpp"

namespace tsim::nn {

using Shape = std::vector<int>;

inline int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

/// Dense 64-bit float tensor with an optional gradient buffer of the same
/// shape. Networks in this project are small enough that double precision
/// everywhere is cheap and makes strict gradient checks possible.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;

  static Tensor zeros(Shape shape, bool requires_grad = false);

  int size() const { return static_cast<int>(values.size()); }
  void zero_grad();
  void ensure_grad();
};

/// Named parameter store. Paths are slash-separated
/// (e.g. "policy/lstm0/w_ih"); iteration order is lexicographic, which keeps
/// optimizer updates and checksums deterministic.
class ParameterSet {
 public:
  /// Creates a zero tensor with requires_grad set. Throws on duplicates.
  Tensor& create(const std::string& path, Shape shape);

  /// Fan-in scaled uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor& create_uniform(const std::string& path, Shape shape, int fan_in,
                         Rng& rng);

  Tensor& at(const std::string& path);
  const Tensor& at(const std::string& path) const;
  bool contains(const std::string& path) const;

  std::size_t total_count() const;
  void zero_grad();

  /// Order-sensitive FNV-style hash of the raw parameter bits.
  std::uint64_t checksum() const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  std::size_t size() const { return items_.size(); }

 private:
  std::map<std::string, Tensor> items_;
};

}  // namespace tsim::nn
