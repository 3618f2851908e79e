#include "ceff/gnn_graph.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>

#include "ceff/error.hpp"

namespace ceff {

using nlohmann::json;

namespace {

bool passes_through(std::size_t col) { return col == kIsDriver || col == kIsFanout || col == kHops; }

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedDocument, what); }

}  // namespace

const std::array<std::string, kFeatureCount>& feature_order() {
  static const std::array<std::string, kFeatureCount> order{"f_d", "f_f", "t_slew", "R_d", "C_p",    "R_w",
                                                            "C_w", "R_u", "C_d",    "h_d", "C_total"};
  return order;
}

GnnGraph to_gnn_graph(const RcNetwork& input, const GraphOptions& options) {
  const RcNetwork net = is_canonical(input) ? input : canonicalize(input);
  const std::vector<NodeDerived> derived = derive_node_quantities(net);
  const double c_total = total_capacitance(net);
  const std::size_t n = net.nodes.size();

  GnnGraph g;
  g.meta.name = net.name;
  g.meta.c_total = c_total;
  g.meta.rc_nodes = static_cast<int>(n);
  g.meta.pre_trim_nodes = static_cast<int>(2 * n - 1);
  g.meta.segments = static_cast<int>(net.segments.size());
  g.meta.fanouts = fanout_count(net);
  g.meta.virtuals = static_cast<int>(net.coupling.size());
  g.meta.degree = g.meta.fanouts + 1;

  const std::size_t rows = 1 + static_cast<std::size_t>(g.meta.fanouts + g.meta.virtuals + g.meta.segments);
  g.x.assign(rows * kFeatureCount, 0.0);
  std::vector<int> hops(rows, 0);
  std::size_t next = 0;
  auto new_row = [&](int hop) {
    const std::size_t r = next++;
    g.at(r, kSlew) = net.driver.input_slew;
    g.at(r, kDriveResistance) = net.driver.drive_resistance;
    g.at(r, kHops) = hop;
    hops[r] = hop;
    return r;
  };

  const std::size_t driver = new_row(0);
  g.at(driver, kIsDriver) = 1.0;
  g.at(driver, kDownstreamCap) = c_total;
  g.at(driver, kTotalCap) = c_total;

  // row that stands for each RC node in the trimmed graph: the driver row for
  // the driver, the pin row for fanouts, the entering edge row for junctions
  std::vector<std::size_t> rep(n, driver);
  std::size_t coupling = 0;
  for (std::size_t s = 0; s < net.segments.size(); ++s) {
    const WireSegment& w = net.segments[s];
    const auto parent = static_cast<std::size_t>(w.from_node);
    const auto child = static_cast<std::size_t>(w.to_node);
    const std::size_t up = rep[parent];
    // an edge row sits one hop past its source; its own h_d is the hop count
    // of the node it feeds
    const int edge_hop = hops[up] + 1;
    const std::size_t e = new_row(edge_hop + 1);
    g.at(e, kWireResistance) = w.resistance;
    g.at(e, kWireCap) = w.capacitance;
    g.at(e, kUpstreamResistance) = derived[child].upstream_resistance;
    g.at(e, kDownstreamCap) = derived[child].downstream_capacitance + 0.5 * w.capacitance;
    hops[e] = edge_hop;
    g.edges.emplace_back(static_cast<int>(up), static_cast<int>(e));

    if (net.nodes[child].kind == NodeKind::Fanout) {
      const std::size_t pin = new_row(edge_hop + 1);
      g.at(pin, kIsFanout) = 1.0;
      g.at(pin, kPinCap) = net.nodes[child].pin_capacitance;
      g.at(pin, kUpstreamResistance) = derived[child].upstream_resistance;
      g.at(pin, kDownstreamCap) = derived[child].downstream_capacitance;
      g.edges.emplace_back(static_cast<int>(e), static_cast<int>(pin));
      rep[child] = pin;
    } else {
      rep[child] = e;
    }
    for (; coupling < net.coupling.size() && net.coupling[coupling].segment == w.id; ++coupling) {
      const std::size_t v = new_row(edge_hop + 1);
      g.at(v, kIsFanout) = 1.0;
      g.at(v, kPinCap) = net.coupling[coupling].capacitance;
      g.at(v, kUpstreamResistance) = derived[child].upstream_resistance;
      g.at(v, kDownstreamCap) = net.coupling[coupling].capacitance;
      g.edges.emplace_back(static_cast<int>(e), static_cast<int>(v));
    }
  }
  if (next != rows || coupling != net.coupling.size()) throw Error(ErrorKind::MalformedDocument, "graph row count mismatch");
  if (options.bidirectional) {
    const std::size_t forward = g.edges.size();
    for (std::size_t i = 0; i < forward; ++i) g.edges.emplace_back(g.edges[i].second, g.edges[i].first);
  }
  return g;
}

GnnGraph attach_label(GnnGraph g, double ceff) {
  if (!(ceff > 0.0 && ceff <= g.meta.c_total))
    throw Error(ErrorKind::OutOfRangeLabel, g.meta.name + ": ceff outside (0, c_total]");
  g.label = ceff / g.meta.c_total;
  return g;
}

void NormAccumulator::add(const GnnGraph& g) {
  ++graphs_;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    rows_ += 1.0;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const double v = g.at(r, c);
      const double delta = v - mean_[c];
      mean_[c] += delta / rows_;
      m2_[c] += delta * (v - mean_[c]);
    }
  }
}

NormStats NormAccumulator::finish() const {
  if (graphs_ == 0 || rows_ == 0.0) throw Error(ErrorKind::EmptySplit, "no training graphs to fit normalization");
  NormStats s;
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    s.mean[c] = mean_[c];
    s.stddev[c] = std::sqrt(std::max(0.0, m2_[c] / rows_));
    // a spread at rounding level means the column is constant
    s.scaled[c] = !passes_through(c) && s.stddev[c] > 1e-12 * std::abs(s.mean[c]) && s.stddev[c] > 0.0;
    if (!s.scaled[c]) {
      s.mean[c] = 0.0;
      s.stddev[c] = 1.0;
    }
  }
  return s;
}

NormStats fit_norm_stats(std::span<const GnnGraph> train) {
  NormAccumulator acc;
  for (const GnnGraph& g : train) acc.add(g);
  return acc.finish();
}

GnnGraph apply_norm(GnnGraph g, const NormStats& stats) {
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < kFeatureCount; ++c)
      if (stats.scaled[c]) g.at(r, c) = (g.at(r, c) - stats.mean[c]) / stats.stddev[c];
  return g;
}

json norm_stats_to_json(const NormStats& s) {
  return {{"feature_order", feature_order()}, {"mean", s.mean}, {"std", s.stddev}, {"scaled", s.scaled}};
}

NormStats norm_stats_from_json(const json& j, bool check_order) {
  NormStats s;
  try {
    if (check_order && j.at("feature_order").get<std::vector<std::string>>() !=
        std::vector<std::string>(feature_order().begin(), feature_order().end()))
      throw Error(ErrorKind::FeatureOrderMismatch, "normalization statistics use a different feature order");
    s.mean = j.at("mean").get<std::array<double, kFeatureCount>>();
    s.stddev = j.at("std").get<std::array<double, kFeatureCount>>();
    s.scaled = j.at("scaled").get<std::array<bool, kFeatureCount>>();
  } catch (const json::exception& e) {
    malformed(std::string("normalization statistics: ") + e.what());
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c)
    if (s.scaled[c] && !(s.stddev[c] > 0.0)) malformed("normalization std must be positive");
  return s;
}

json graph_to_json(const GnnGraph& g) {
  json x = json::array();
  for (std::size_t r = 0; r < g.rows(); ++r)
    x.push_back(std::vector<double>(g.x.begin() + static_cast<std::ptrdiff_t>(r * kFeatureCount),
                                    g.x.begin() + static_cast<std::ptrdiff_t>((r + 1) * kFeatureCount)));
  json edges = json::array();
  for (auto [s, d] : g.edges) edges.push_back({s, d});
  json out = {{"x", std::move(x)},
              {"edges", std::move(edges)},
              {"meta",
               {{"name", g.meta.name},
                {"c_total", g.meta.c_total},
                {"degree", g.meta.degree},
                {"rc_nodes", g.meta.rc_nodes},
                {"pre_trim_nodes", g.meta.pre_trim_nodes},
                {"segments", g.meta.segments},
                {"fanouts", g.meta.fanouts},
                {"virtuals", g.meta.virtuals}}}};
  if (g.label) out["y"] = *g.label;
  return out;
}

GnnGraph graph_from_json(const json& j) {
  GnnGraph g;
  try {
    const json& x = j.at("x");
    for (const json& row : x) {
      if (row.size() != kFeatureCount) throw Error(ErrorKind::ShapeMismatch, "graph row has the wrong number of features");
      for (const json& v : row) g.x.push_back(v.get<double>());
    }
    for (const json& e : j.at("edges")) {
      if (e.size() != 2) malformed("edge must be [src, dst]");
      g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    if (j.contains("y") && !j.at("y").is_null()) g.label = j.at("y").get<double>();
    const json& m = j.at("meta");
    g.meta.name = m.at("name").get<std::string>();
    g.meta.c_total = m.at("c_total").get<double>();
    g.meta.degree = m.value("degree", 0);
    g.meta.rc_nodes = m.value("rc_nodes", 0);
    g.meta.pre_trim_nodes = m.value("pre_trim_nodes", 0);
    g.meta.segments = m.value("segments", 0);
    g.meta.fanouts = m.value("fanouts", 0);
    g.meta.virtuals = m.value("virtuals", 0);
  } catch (const json::exception& e) {
    malformed(std::string("graph: ") + e.what());
  }
  const auto rows = static_cast<int>(g.rows());
  if (rows == 0) malformed("graph has no rows");
  for (auto [s, d] : g.edges)
    if (s < 0 || d < 0 || s >= rows || d >= rows) malformed("edge endpoint out of range");
  return g;
}

std::string serialize_graph(const GnnGraph& g) { return graph_to_json(g).dump(); }

void for_each_graph(std::istream& in, const std::function<void(GnnGraph&&)>& sink) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    GnnGraph g;
    try {
      g = graph_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::MalformedDocument, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
    }
    sink(std::move(g));
  }
}

std::vector<GnnGraph> read_graphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<GnnGraph> out;
  for_each_graph(in, [&](GnnGraph&& g) { out.push_back(std::move(g)); });
  return out;
}

struct DatasetWriter::Files {
  std::ofstream train;
  std::ofstream test;
};

DatasetWriter::DatasetWriter(const std::string& directory) : directory_(directory), files_(std::make_unique<Files>()) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  files_->train.open(directory + "/train.jsonl");
  files_->test.open(directory + "/test.jsonl");
  if (!files_->train || !files_->test) throw Error(ErrorKind::Io, "cannot create dataset files in " + directory);
}

DatasetWriter::~DatasetWriter() = default;

void DatasetWriter::write(const GnnGraph& g, bool train) {
  if (!g.label) throw Error(ErrorKind::MissingLabel, g.meta.name + ": graph has no label");
  std::ofstream& out = train ? files_->train : files_->test;
  out << serialize_graph(g) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing dataset");
  if (train) {
    stats_.add(g);
    ++train_;
  } else {
    ++test_;
  }
}

json DatasetWriter::finish(const json& extra) {
  files_->train.close();
  files_->test.close();
  json manifest = {{"format_version", 1},
                   {"kind", "gnn_dataset"},
                   {"feature_order", feature_order()},
                   {"counts", {{"train", train_}, {"test", test_}}},
                   {"split", {{"train", "train.jsonl"}, {"test", "test.jsonl"}}},
                   {"norm_stats", norm_stats_to_json(stats_.finish())}};
  for (const auto& [key, value] : extra.items()) manifest[key] = value;
  std::ofstream out(directory_ + "/manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing manifest");
  return manifest;
}

}  // namespace ceff
