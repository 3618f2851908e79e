#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceff/gnn_graph.hpp"

namespace ceff {

inline constexpr int kWeightFormatVersion = 1;

struct ArchitectureDescriptor {
  std::string conv = "GAT";
  int conv_layers = 3;
  int conv_channels = 32;
  int heads = 12;
  bool concat = true;
  double negative_slope = 0.2;
  int linear_layers = 3;
  int linear_channels = 64;
  std::string activation = "ELU";
  std::string final = "Sigmoid";
  int in_features = static_cast<int>(kFeatureCount);
  friend bool operator==(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
};

nlohmann::json descriptor_to_json(const ArchitectureDescriptor& d);
ArchitectureDescriptor descriptor_from_json(const nlohmann::json& j);

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;  // row-major
  std::size_t size() const { return values.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Tensor names and shapes in payload order:
///   conv{l}.weight [H*C, in], conv{l}.att_src [H, C], conv{l}.att_dst [H, C], conv{l}.bias [H*C]
///   aggr.gate.weight [1, H*C], aggr.gate.bias [1], aggr.nn.weight [H*C, H*C], aggr.nn.bias [H*C]
///   mlp.{m}.weight [out, in], mlp.{m}.bias [out]; widths H*C -> linear_channels ... -> 1
std::vector<std::pair<std::string, std::vector<std::int64_t>>> expected_tensors(const ArchitectureDescriptor& d);

std::int64_t parameter_count(const ArchitectureDescriptor& d);

struct WeightBundle {
  ArchitectureDescriptor descriptor;
  NormStats norm_stats;
  std::vector<std::string> feature_order;
  std::map<std::string, Tensor> tensors;
  std::string sha256;  // of the payload
};

/// File layout: one line of JSON header, then `payload_bytes` bytes of
/// little-endian float32 tensors in expected_tensors order.
WeightBundle parse_weights(std::string_view bytes);
WeightBundle load_weights(const std::string& path);
std::string serialize_weights(const WeightBundle& bundle);
void save_weights(const WeightBundle& bundle, const std::string& path);

}  // namespace ceff
