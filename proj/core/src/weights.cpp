#include "ceff/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ceff/error.hpp"
#include "ceff/hash.hpp"

namespace ceff {

using nlohmann::json;

namespace {

[[noreturn]] void shape_error(const std::string& what) { throw Error(ErrorKind::ShapeMismatch, what); }

std::int64_t elements(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return n;
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

json descriptor_to_json(const ArchitectureDescriptor& d) {
  return {{"conv", d.conv},
          {"conv_layers", d.conv_layers},
          {"conv_channels", d.conv_channels},
          {"heads", d.heads},
          {"concat", d.concat},
          {"negative_slope", d.negative_slope},
          {"linear_layers", d.linear_layers},
          {"linear_channels", d.linear_channels},
          {"activation", d.activation},
          {"final", d.final},
          {"in_features", d.in_features}};
}

ArchitectureDescriptor descriptor_from_json(const json& j) {
  ArchitectureDescriptor d;
  try {
    d.conv = j.at("conv").get<std::string>();
    d.conv_layers = j.at("conv_layers").get<int>();
    d.conv_channels = j.at("conv_channels").get<int>();
    d.heads = j.at("heads").get<int>();
    d.concat = j.value("concat", true);
    d.negative_slope = j.value("negative_slope", 0.2);
    d.linear_layers = j.at("linear_layers").get<int>();
    d.linear_channels = j.at("linear_channels").get<int>();
    d.activation = j.at("activation").get<std::string>();
    d.final = j.at("final").get<std::string>();
    d.in_features = j.value("in_features", static_cast<int>(kFeatureCount));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedDocument, std::string("descriptor: ") + e.what());
  }
  if (d.conv != "GAT" || !d.concat || d.activation != "ELU" || d.final != "Sigmoid")
    shape_error("unsupported architecture (expected concatenating GAT, ELU, Sigmoid)");
  if (d.conv_layers < 1 || d.conv_channels < 1 || d.heads < 1 || d.linear_layers < 1 || d.linear_channels < 1 ||
      d.in_features < 1)
    shape_error("descriptor dimensions must be positive");
  return d;
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> expected_tensors(const ArchitectureDescriptor& d) {
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  const std::int64_t width = static_cast<std::int64_t>(d.heads) * d.conv_channels;
  std::int64_t in = d.in_features;
  for (int l = 0; l < d.conv_layers; ++l) {
    const std::string p = "conv" + std::to_string(l) + ".";
    out.push_back({p + "weight", {width, in}});
    out.push_back({p + "att_src", {d.heads, d.conv_channels}});
    out.push_back({p + "att_dst", {d.heads, d.conv_channels}});
    out.push_back({p + "bias", {width}});
    in = width;
  }
  out.push_back({"aggr.gate.weight", {1, width}});
  out.push_back({"aggr.gate.bias", {1}});
  out.push_back({"aggr.nn.weight", {width, width}});
  out.push_back({"aggr.nn.bias", {width}});
  for (int m = 0; m < d.linear_layers; ++m) {
    const std::int64_t outw = m + 1 == d.linear_layers ? 1 : d.linear_channels;
    const std::string p = "mlp." + std::to_string(m) + ".";
    out.push_back({p + "weight", {outw, in}});
    out.push_back({p + "bias", {outw}});
    in = outw;
  }
  return out;
}

std::int64_t parameter_count(const ArchitectureDescriptor& d) {
  std::int64_t n = 0;
  for (const auto& [name, shape] : expected_tensors(d)) n += elements(shape);
  return n;
}

WeightBundle parse_weights(std::string_view bytes) {
  const std::size_t newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw Error(ErrorKind::MalformedDocument, "weight bundle has no header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedDocument, std::string("weight bundle header: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "ceffgnn-weights")
    throw Error(ErrorKind::MalformedDocument, "not a weight bundle");
  if (header.value("format_version", -1) != kWeightFormatVersion)
    throw Error(ErrorKind::VersionUnsupported,
                "weight bundle version " + header.value("format_version", json(-1)).dump() + " is not supported");

  WeightBundle b;
  b.descriptor = descriptor_from_json(header.at("descriptor"));
  try {
    b.feature_order = header.at("feature_order").get<std::vector<std::string>>();
    b.sha256 = header.at("sha256").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedDocument, std::string("weight bundle header: ") + e.what());
  }
  b.norm_stats = norm_stats_from_json(header.at("norm_stats"), false);

  const auto expected = expected_tensors(b.descriptor);
  const json& listed = header.at("tensors");
  if (!listed.is_array() || listed.size() != expected.size())
    shape_error("bundle lists " + std::to_string(listed.size()) + " tensors, descriptor implies " +
                std::to_string(expected.size()));
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& [name, shape] = expected[i];
    const std::string got = listed[i].value("name", "");
    const auto got_shape = listed[i].value("shape", std::vector<std::int64_t>{});
    if (got != name || got_shape != shape)
      shape_error("tensor " + std::to_string(i) + " is '" + got + "' " + json(got_shape).dump() + ", expected '" + name +
                  "' " + json(shape).dump());
    if (listed[i].value("offset", std::int64_t{-1}) != offset) shape_error("tensor '" + name + "' has a bad offset");
    offset += 4 * elements(shape);
  }
  if (header.value("payload_bytes", std::int64_t{-1}) != offset) shape_error("payload size does not match tensor shapes");

  const std::string_view payload = bytes.substr(newline + 1);
  if (sha256_hex(payload) != b.sha256 || static_cast<std::int64_t>(payload.size()) != offset)
    throw Error(ErrorKind::HashMismatch, "weight payload hash does not match the header");

  std::size_t pos = 0;
  for (const auto& [name, shape] : expected) {
    Tensor t;
    t.shape = shape;
    t.values.resize(static_cast<std::size_t>(elements(shape)));
    for (float& v : t.values) {
      std::uint32_t raw;
      std::memcpy(&raw, payload.data() + pos, 4);
      raw = to_little(raw);
      std::memcpy(&v, &raw, 4);
      pos += 4;
    }
    b.tensors.emplace(name, std::move(t));
  }
  return b;
}

WeightBundle load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open weight bundle " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_weights(bytes);
}

std::string serialize_weights(const WeightBundle& b) {
  std::string payload;
  json listed = json::array();
  for (const auto& [name, shape] : expected_tensors(b.descriptor)) {
    auto it = b.tensors.find(name);
    if (it == b.tensors.end() || it->second.shape != shape ||
        static_cast<std::int64_t>(it->second.values.size()) != elements(shape))
      shape_error("tensor '" + name + "' is missing or has the wrong shape");
    listed.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}});
    for (float v : it->second.values) {
      std::uint32_t raw;
      std::memcpy(&raw, &v, 4);
      raw = to_little(raw);
      payload.append(reinterpret_cast<const char*>(&raw), 4);
    }
  }
  const json header = {{"format", "ceffgnn-weights"},
                       {"format_version", kWeightFormatVersion},
                       {"descriptor", descriptor_to_json(b.descriptor)},
                       {"feature_order", b.feature_order},
                       {"norm_stats", norm_stats_to_json(b.norm_stats)},
                       {"tensors", listed},
                       {"payload_bytes", payload.size()},
                       {"sha256", sha256_hex(payload)}};
  return header.dump() + "\n" + payload;
}

void save_weights(const WeightBundle& b, const std::string& path) {
  const std::string bytes = serialize_weights(b);
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing weight bundle " + path);
}

}  // namespace ceff
