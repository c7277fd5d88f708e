#include "tsim/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tsim/error.hpp"

namespace tsim::nn {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'C', 'K'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(
    const std::string& path, const nlohmann::json& header,
    const std::vector<std::pair<std::string, const ParameterSet*>>& sets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("checkpoint: cannot open " + path + " for write");
  out.write(kMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_string(out, header.dump());
  write_u32(out, static_cast<std::uint32_t>(sets.size()));
  for (const auto& [name, set] : sets) {
    write_string(out, name);
    write_u64(out, set->size());
    for (const auto& [param_path, tensor] : *set) {
      write_string(out, param_path);
      write_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
      for (int d : tensor.shape) write_u64(out, static_cast<std::uint64_t>(d));
      for (double v : tensor.values) write_f64(out, v);
    }
  }
  if (!out) throw ConfigError("checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ConfigError("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported version " +
                      std::to_string(version));
  CheckpointData data;
  data.header = nlohmann::json::parse(read_string(in));
  const std::uint32_t set_count = read_u32(in);
  for (std::uint32_t s = 0; s < set_count; ++s) {
    std::pair<std::string, ParameterSet> entry;
    entry.first = read_string(in);
    const std::uint64_t params = read_u64(in);
    for (std::uint64_t p = 0; p < params; ++p) {
      const std::string param_path = read_string(in);
      const std::uint32_t ndim = read_u32(in);
      Shape shape(ndim);
      for (std::uint32_t d = 0; d < ndim; ++d)
        shape[d] = static_cast<int>(read_u64(in));
      Tensor& t = entry.second.create(param_path, shape);
      for (auto& v : t.values) v = read_f64(in);
    }
    data.sets.push_back(std::move(entry));
  }
  if (!in) throw ConfigError("checkpoint: truncated file " + path);
  return data;
}

void restore_parameters(ParameterSet& dst, const ParameterSet& src) {
  if (dst.size() != src.size())
    throw ContractError("checkpoint restore: parameter count mismatch (have " +
                        std::to_string(dst.size()) + ", checkpoint has " +
                        std::to_string(src.size()) + ")");
  auto it = src.begin();
  for (auto& [path, tensor] : dst) {
    if (it->first != path)
      throw ContractError("checkpoint restore: path mismatch at '" + path +
                          "' vs '" + it->first + "'");
    if (it->second.shape != tensor.shape)
      throw ContractError("checkpoint restore: shape mismatch at '" + path + "'");
    tensor.values = it->second.values;
    ++it;
  }
}

}  // namespace tsim::nn
