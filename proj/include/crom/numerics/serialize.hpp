#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crom/numerics/mlp.hpp"

namespace crom {

using json = nlohmann::json;

/// Writes doubles as little-endian IEEE-754 binary64.
inline void write_f64_blob(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<double> read_f64_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % 8 != 0) throw IoError(path.string() + ": size is not a multiple of 8 bytes");
  in.seekg(0);
  std::vector<double> values(size / 8);
  for (auto& v : values) {
    char bytes[8];
    in.read(bytes, 8);
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (!in) throw IoError("read failed: " + path.string());
  return values;
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

/// Appends weights (row-major) then bias for every layer.
inline void append_flat(const MlpParams& p, std::vector<double>& out) {
  for (const auto& l : p.layers) {
    for (Index i = 0; i < l.weight.rows(); ++i)
      for (Index j = 0; j < l.weight.cols(); ++j) out.push_back(l.weight(i, j));
    for (Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias(i));
  }
}

inline json mlp_manifest(const MlpParams& p) {
  json shapes = json::array();
  for (const auto& l : p.layers) shapes.push_back({l.weight.rows(), l.weight.cols()});
  return {{"activation", to_string(p.activation.kind)},
          {"omega0", p.activation.omega0},
          {"elu_alpha", p.activation.elu_alpha},
          {"in_dim", p.in_dim()},
          {"out_dim", p.out_dim()},
          {"layer_shapes", shapes}};
}

/// Rebuilds an MLP from its manifest, consuming values from `blob` starting at `offset`.
inline MlpParams mlp_from_manifest(const json& j, const std::vector<double>& blob, std::size_t& offset) {
  MlpParams p;
  p.activation.kind = activation_from_string(j.at("activation").get<std::string>());
  p.activation.omega0 = j.at("omega0").get<double>();
  p.activation.elu_alpha = j.value("elu_alpha", 1.0);
  for (const auto& s : j.at("layer_shapes")) {
    const Index rows = s.at(0).get<Index>(), cols = s.at(1).get<Index>();
    const std::size_t need = static_cast<std::size_t>(rows * cols + rows);
    if (offset + need > blob.size()) throw IoError("weight blob shorter than manifest layer shapes");
    Layer l{DenseMatrix(rows, cols), Vector(rows)};
    for (Index i = 0; i < rows; ++i)
      for (Index k = 0; k < cols; ++k) l.weight(i, k) = blob[offset++];
    for (Index i = 0; i < rows; ++i) l.bias(i) = blob[offset++];
    p.layers.push_back(std::move(l));
  }
  return p;
}

}  // namespace crom
