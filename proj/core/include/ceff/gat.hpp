#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ceff/gnn_graph.hpp"
#include "ceff/weights.hpp"

namespace ceff {

using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Incoming neighbourhoods in compressed form: sources of node i are
/// src[offset[i] .. offset[i+1]). Self-loops are included.
struct Neighborhoods {
  std::vector<int> offset;
  std::vector<int> src;
};

/// Builds neighbourhoods for `nodes` nodes from directed (src, dst) pairs.
/// Existing self-loops are dropped and one is added per node.
Neighborhoods incoming_with_self_loops(std::size_t nodes, std::span<const std::pair<int, int>> edges);

struct GatLayerWeights {
  int heads = 0;
  int channels = 0;
  FloatMatrix weight_t;  // [in, heads*channels]
  std::vector<float> att_src, att_dst;  // [heads*channels]
  std::vector<float> bias;              // [heads*channels]
  double negative_slope = 0.2;
};

/// One attention layer with concatenated heads followed by ELU. When
/// `attention` is given it receives alpha per (neighbourhood slot, head).
FloatMatrix gat_layer(const FloatMatrix& h, const Neighborhoods& nbr, const GatLayerWeights& w,
                      std::vector<double>* attention = nullptr);

struct AggregationWeights {
  std::vector<float> gate;  // [width]
  float gate_bias = 0.0f;
  Eigen::MatrixXd transform;  // [width, width]
  Eigen::VectorXd transform_bias;
};

/// Softmax-gated sum over rows [begin, end) followed by the transform. The
/// transform is affine and the weights sum to one, so it is applied once to
/// the pooled vector. `weights` optionally receives the softmax values.
Eigen::VectorXd attentional_aggregation(const FloatMatrix& h, std::size_t begin, std::size_t end,
                                        const AggregationWeights& w, std::vector<double>* weights = nullptr);

struct Prediction {
  std::string name;
  double ratio = 0.0;
  double ceff = 0.0;
};

struct GatTrace {
  FloatMatrix input;  // normalized features
  std::vector<FloatMatrix> conv;
  Eigen::VectorXd pooled;  // after the aggregation transform
  std::vector<Eigen::VectorXd> mlp;  // each linear layer after its activation
  double ratio = 0.0;
};

struct PredictOptions {
  std::size_t batch_graphs = 128;
  unsigned workers = 1;
  bool check_invariants = false;  // assert attention and pooling weights sum to one
};

class GatModel {
 public:
  /// Throws FeatureOrderMismatch if the bundle was trained on another column order.
  explicit GatModel(const WeightBundle& bundle);

  std::vector<Prediction> predict(std::span<const GnnGraph> graphs, const PredictOptions& options = {}) const;
  GatTrace trace(const GnnGraph& graph) const;
  const ArchitectureDescriptor& descriptor() const { return descriptor_; }

 private:
  std::vector<Prediction> predict_batch(std::span<const GnnGraph> graphs, bool check, GatTrace* trace) const;

  ArchitectureDescriptor descriptor_;
  NormStats norm_;
  std::vector<GatLayerWeights> conv_;
  AggregationWeights aggr_;
  FloatMatrix aggr_transform_t_;  // [width, width], applied to a whole batch of pooled rows
  std::vector<Eigen::MatrixXd> mlp_weight_;
  std::vector<Eigen::VectorXd> mlp_bias_;
};

}  // namespace ceff
