#pragma once

#include <cmath>
#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "ceff/gat.hpp"
#include "ceff/gnn_graph.hpp"
#include "ceff/weights.hpp"

namespace ceff::testing {

inline std::string golden_path(const std::string& file) { return std::string(CEFF_GOLDEN_DIR) + "/" + file; }

inline nlohmann::json golden_reference() {
  std::ifstream in(golden_path("golden_reference.json"));
  return nlohmann::json::parse(in);
}

/// Largest absolute difference between a float matrix and a nested JSON array.
inline double max_abs_diff(const FloatMatrix& m, const nlohmann::json& ref) {
  double worst = 0.0;
  if (static_cast<std::size_t>(m.rows()) != ref.size()) return INFINITY;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (static_cast<std::size_t>(m.cols()) != ref[static_cast<std::size_t>(r)].size()) return INFINITY;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      worst = std::max(worst, std::abs(m(r, c) - ref[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>()));
  }
  return worst;
}

inline double max_abs_diff(const Eigen::VectorXd& v, const nlohmann::json& ref) {
  if (static_cast<std::size_t>(v.size()) != ref.size()) return INFINITY;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    worst = std::max(worst, std::abs(v[i] - ref[static_cast<std::size_t>(i)].get<double>()));
  return worst;
}

/// Bundle with random weights for an arbitrary descriptor.
inline WeightBundle random_bundle(const ArchitectureDescriptor& d, unsigned seed, const NormStats& stats) {
  std::mt19937 rng(seed);
  WeightBundle b;
  b.descriptor = d;
  b.norm_stats = stats;
  b.feature_order.assign(feature_order().begin(), feature_order().end());
  for (const auto& [name, shape] : expected_tensors(d)) {
    Tensor t;
    t.shape = shape;
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    const double fan = static_cast<double>(shape.back() + shape.front());
    std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan)));
    for (std::int64_t i = 0; i < n; ++i) t.values.push_back(dist(rng));
    b.tensors[name] = std::move(t);
  }
  return b;
}

/// Same graph with rows relabelled and edges shuffled.
inline GnnGraph permuted(const GnnGraph& g, std::mt19937& rng) {
  std::vector<int> perm(g.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  GnnGraph p = g;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < kFeatureCount; ++c) p.at(static_cast<std::size_t>(perm[r]), c) = g.at(r, c);
  for (auto& [s, d] : p.edges) {
    s = perm[static_cast<std::size_t>(s)];
    d = perm[static_cast<std::size_t>(d)];
  }
  std::shuffle(p.edges.begin(), p.edges.end(), rng);
  return p;
}

}  // namespace ceff::testing
