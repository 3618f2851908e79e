#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceff/rc_network.hpp"

namespace ceff {

inline constexpr std::size_t kFeatureCount = 11;

enum Feature : std::size_t {
  kIsDriver = 0,
  kIsFanout,
  kSlew,
  kDriveResistance,
  kPinCap,
  kWireResistance,
  kWireCap,
  kUpstreamResistance,
  kDownstreamCap,
  kHops,
  kTotalCap,
};

/// Column names in storage order.
const std::array<std::string, kFeatureCount>& feature_order();

struct GraphMeta {
  std::string name;
  double c_total = 0.0;
  int degree = 0;          // driver + fanout pins
  int rc_nodes = 0;        // |V_RC|
  int pre_trim_nodes = 0;  // 2 |V_RC| - 1
  int segments = 0;
  int fanouts = 0;
  int virtuals = 0;
  friend bool operator==(const GraphMeta&, const GraphMeta&) = default;
};

struct GnnGraph {
  std::vector<double> x;  // row-major, rows() x kFeatureCount
  std::vector<std::pair<int, int>> edges;
  std::optional<double> label;  // Ceff / Ctotal
  GraphMeta meta;

  std::size_t rows() const { return x.size() / kFeatureCount; }
  double& at(std::size_t row, std::size_t col) { return x[row * kFeatureCount + col]; }
  double at(std::size_t row, std::size_t col) const { return x[row * kFeatureCount + col]; }
  friend bool operator==(const GnnGraph&, const GnnGraph&) = default;
};

struct GraphOptions {
  bool bidirectional = false;  // also store every edge reversed
};

/// Rows: driver first, then for each segment in canonical order its edge
/// row, the fanout pin it feeds (if any) and its coupling rows. Junctions are
/// removed; the edge row entering a junction connects straight to the edge
/// rows leaving it. Output does not depend on the input node order.
GnnGraph to_gnn_graph(const RcNetwork& net, const GraphOptions& options = {});

/// Sets label = ceff / c_total; requires 0 < ceff <= c_total.
GnnGraph attach_label(GnnGraph g, double ceff);

struct NormStats {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> stddev{};
  std::array<bool, kFeatureCount> scaled{};  // false: column passes through
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Streaming population mean/std over the rows of many graphs.
class NormAccumulator {
 public:
  void add(const GnnGraph& g);
  std::size_t graphs() const { return graphs_; }
  /// Throws EmptySplit when nothing was added.
  NormStats finish() const;

 private:
  std::size_t graphs_ = 0;
  double rows_ = 0.0;
  std::array<double, kFeatureCount> mean_{};
  std::array<double, kFeatureCount> m2_{};
};

NormStats fit_norm_stats(std::span<const GnnGraph> train);
GnnGraph apply_norm(GnnGraph g, const NormStats& stats);

nlohmann::json norm_stats_to_json(const NormStats& stats);
/// Throws FeatureOrderMismatch when `check_order` is set and the stored
/// order differs from feature_order().
NormStats norm_stats_from_json(const nlohmann::json& j, bool check_order = true);

nlohmann::json graph_to_json(const GnnGraph& g);
GnnGraph graph_from_json(const nlohmann::json& j);
std::string serialize_graph(const GnnGraph& g);

void for_each_graph(std::istream& in, const std::function<void(GnnGraph&&)>& sink);
std::vector<GnnGraph> read_graphs(const std::string& path);

/// Writes train.jsonl, test.jsonl and manifest.json into a directory,
/// accumulating normalization statistics over the train split as it goes.
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::string& directory);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  /// Throws MissingLabel for an unlabeled graph.
  void write(const GnnGraph& g, bool train);
  /// Closes the files and writes the manifest; `extra` is merged into it.
  nlohmann::json finish(const nlohmann::json& extra = nlohmann::json::object());

 private:
  struct Files;
  std::string directory_;
  std::unique_ptr<Files> files_;
  NormAccumulator stats_;
  std::size_t train_ = 0;
  std::size_t test_ = 0;
};

}  // namespace ceff
