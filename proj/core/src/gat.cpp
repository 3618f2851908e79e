#include "ceff/gat.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include <Eigen/Dense>

#include "ceff/error.hpp"
#include "ceff/parallel.hpp"

namespace ceff {

namespace {

// out = x * wt. Every output element is one float accumulator summed over k
// in ascending order, so a row's result does not depend on which other rows
// share the call.
template <int T, int CB>
inline void gemm_tile(const float* x, int in, const float* wt, int outc, float* out, int cb) {
  float acc[T][CB] = {};
  for (int k = 0; k < in; ++k) {
    const float* w = wt + static_cast<std::size_t>(k) * outc + cb;
    for (int t = 0; t < T; ++t) {
      const float xv = x[static_cast<std::size_t>(t) * in + k];
      for (int c = 0; c < CB; ++c) acc[t][c] += xv * w[c];
    }
  }
  for (int t = 0; t < T; ++t)
    std::memcpy(out + static_cast<std::size_t>(t) * outc + cb, acc[t], sizeof(float) * CB);
}

template <int T>
inline void gemm_rows(const float* x, int in, const float* wt, int outc, float* out) {
  int cb = 0;
  for (; cb + 64 <= outc; cb += 64) gemm_tile<T, 64>(x, in, wt, outc, out, cb);
  for (; cb + 16 <= outc; cb += 16) gemm_tile<T, 16>(x, in, wt, outc, out, cb);
  for (; cb < outc; ++cb) gemm_tile<T, 1>(x, in, wt, outc, out, cb);
}

FloatMatrix gemm(const FloatMatrix& x, const FloatMatrix& wt) {
  const int rows = static_cast<int>(x.rows()), in = static_cast<int>(x.cols()), outc = static_cast<int>(wt.cols());
  FloatMatrix out(rows, outc);
  constexpr int kTile = 6;
  int r = 0;
  for (; r + kTile <= rows; r += kTile)
    gemm_rows<kTile>(x.data() + static_cast<std::size_t>(r) * in, in, wt.data(), outc,
                     out.data() + static_cast<std::size_t>(r) * outc);
  for (; r < rows; ++r)
    gemm_rows<1>(x.data() + static_cast<std::size_t>(r) * in, in, wt.data(), outc,
                 out.data() + static_cast<std::size_t>(r) * outc);
  return out;
}

inline double elu(double v) { return v > 0.0 ? v : std::expm1(v); }

// Vectorized float ELU over one row. Applied row by row so every element takes
// the same code path whatever the batch layout.
inline void elu_row(float* row, int width) {
  Eigen::Map<Eigen::ArrayXf> a(row, width);
  a = a.max(0.0f) + (a.min(0.0f).exp() - 1.0f);
}

void check_sum(double s, const char* what) {
  if (std::abs(s - 1.0) > 1e-12) throw std::logic_error(std::string(what) + " weights do not sum to one");
}

const Tensor& tensor(const WeightBundle& b, const std::string& name) {
  auto it = b.tensors.find(name);
  if (it == b.tensors.end()) throw Error(ErrorKind::ShapeMismatch, "missing tensor " + name);
  return it->second;
}

}  // namespace

Neighborhoods incoming_with_self_loops(std::size_t nodes, std::span<const std::pair<int, int>> edges) {
  Neighborhoods nbr;
  nbr.offset.assign(nodes + 1, 0);
  for (auto [s, d] : edges)
    if (s != d) ++nbr.offset[static_cast<std::size_t>(d) + 1];
  for (std::size_t i = 0; i < nodes; ++i) nbr.offset[i + 1] += nbr.offset[i] + 1;
  nbr.src.assign(static_cast<std::size_t>(nbr.offset[nodes]), 0);
  std::vector<int> fill(nbr.offset.begin(), nbr.offset.end() - 1);
  for (auto [s, d] : edges)
    if (s != d) nbr.src[static_cast<std::size_t>(fill[static_cast<std::size_t>(d)]++)] = s;
  for (std::size_t i = 0; i < nodes; ++i) nbr.src[static_cast<std::size_t>(fill[i])] = static_cast<int>(i);
  return nbr;
}

FloatMatrix gat_layer(const FloatMatrix& h, const Neighborhoods& nbr, const GatLayerWeights& w,
                      std::vector<double>* attention) {
  const auto n = static_cast<std::size_t>(h.rows());
  const int heads = w.heads, ch = w.channels, width = heads * ch;
  const FloatMatrix hw = gemm(h, w.weight_t);

  // per-node source and destination scores, heads contiguous
  std::vector<double> s_src(n * heads, 0.0), s_dst(n * heads, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = hw.data() + i * width;
    double* a = s_src.data() + i * heads;
    double* b = s_dst.data() + i * heads;
    for (int k = 0; k < heads; ++k)
      for (int c = 0; c < ch; ++c) {
        const double v = row[k * ch + c];
        a[k] += v * w.att_src[k * ch + c];
        b[k] += v * w.att_dst[k * ch + c];
      }
  }
  if (attention) attention->assign(nbr.src.size() * heads, 0.0);

  FloatMatrix out(static_cast<Eigen::Index>(n), width);
  Eigen::ArrayXd logit;
  std::vector<double> top(heads), total(heads), acc(width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = static_cast<std::size_t>(nbr.offset[i]), hi = static_cast<std::size_t>(nbr.offset[i + 1]);
    const auto slots = static_cast<Eigen::Index>(hi - lo);
    logit.resize(slots * heads);
    std::fill(top.begin(), top.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t s = lo; s < hi; ++s) {
      const double* src = s_src.data() + static_cast<std::size_t>(nbr.src[s]) * heads;
      const double* dst = s_dst.data() + i * heads;
      double* e = logit.data() + (s - lo) * heads;
      for (int k = 0; k < heads; ++k) {
        const double v = src[k] + dst[k];
        e[k] = v > 0.0 ? v : w.negative_slope * v;
        top[k] = std::max(top[k], e[k]);
      }
    }
    for (Eigen::Index s = 0; s < slots; ++s)
      for (int k = 0; k < heads; ++k) logit[s * heads + k] -= top[k];
    logit = logit.exp();
    std::fill(total.begin(), total.end(), 0.0);
    for (Eigen::Index s = 0; s < slots; ++s)
      for (int k = 0; k < heads; ++k) total[k] += logit[s * heads + k];
    for (Eigen::Index s = 0; s < slots; ++s)
      for (int k = 0; k < heads; ++k) logit[s * heads + k] /= total[k];

    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t s = lo; s < hi; ++s) {
      const double* alpha = logit.data() + (s - lo) * heads;
      const float* src = hw.data() + static_cast<std::size_t>(nbr.src[s]) * width;
      for (int k = 0; k < heads; ++k)
        for (int c = 0; c < ch; ++c) acc[k * ch + c] += alpha[k] * src[k * ch + c];
    }
    if (attention) {
      for (std::size_t s = lo; s < hi; ++s)
        for (int k = 0; k < heads; ++k) (*attention)[s * heads + k] = logit[(s - lo) * heads + k];
      for (int k = 0; k < heads; ++k) {
        double sum = 0.0;
        for (std::size_t s = lo; s < hi; ++s) sum += (*attention)[s * heads + k];
        check_sum(sum, "attention");
      }
    }
    float* row = out.data() + i * width;
    for (int c = 0; c < width; ++c) row[c] = static_cast<float>(acc[c] + w.bias[c]);
    elu_row(row, width);
  }
  return out;
}

namespace {

// Softmax-gated mean of rows [begin, end) before the transform.
Eigen::VectorXd gated_mean(const FloatMatrix& h, std::size_t begin, std::size_t end, const AggregationWeights& w,
                           std::vector<double>* weights) {
  const auto width = static_cast<std::size_t>(h.cols());
  std::vector<double> score(end - begin);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = begin; i < end; ++i) {
    double s = w.gate_bias;
    const float* row = h.data() + i * width;
    for (std::size_t c = 0; c < width; ++c) s += static_cast<double>(row[c]) * w.gate[c];
    score[i - begin] = s;
    top = std::max(top, s);
  }
  double total = 0.0;
  for (double& s : score) total += (s = std::exp(s - top));
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
  for (std::size_t i = begin; i < end; ++i) {
    const double alpha = score[i - begin] / total;
    score[i - begin] = alpha;
    const float* row = h.data() + i * width;
    for (std::size_t c = 0; c < width; ++c) pooled[static_cast<Eigen::Index>(c)] += alpha * row[c];
  }
  if (weights) *weights = score;
  return pooled;
}

}  // namespace

Eigen::VectorXd attentional_aggregation(const FloatMatrix& h, std::size_t begin, std::size_t end,
                                        const AggregationWeights& w, std::vector<double>* weights) {
  return w.transform * gated_mean(h, begin, end, w, weights) + w.transform_bias;
}

GatModel::GatModel(const WeightBundle& b) : descriptor_(b.descriptor), norm_(b.norm_stats) {
  if (b.feature_order != std::vector<std::string>(feature_order().begin(), feature_order().end()) ||
      descriptor_.in_features != static_cast<int>(kFeatureCount))
    throw Error(ErrorKind::FeatureOrderMismatch, "weight bundle expects a different feature order");
  const int width = descriptor_.heads * descriptor_.conv_channels;
  for (int l = 0; l < descriptor_.conv_layers; ++l) {
    const std::string p = "conv" + std::to_string(l) + ".";
    const Tensor& weight = tensor(b, p + "weight");
    GatLayerWeights g;
    g.heads = descriptor_.heads;
    g.channels = descriptor_.conv_channels;
    g.negative_slope = descriptor_.negative_slope;
    const auto in = static_cast<Eigen::Index>(weight.shape[1]);
    g.weight_t = Eigen::Map<const FloatMatrix>(weight.values.data(), width, in).transpose();
    g.att_src = tensor(b, p + "att_src").values;
    g.att_dst = tensor(b, p + "att_dst").values;
    g.bias = tensor(b, p + "bias").values;
    conv_.push_back(std::move(g));
  }
  aggr_.gate = tensor(b, "aggr.gate.weight").values;
  aggr_.gate_bias = tensor(b, "aggr.gate.bias").values[0];
  aggr_.transform = Eigen::Map<const FloatMatrix>(tensor(b, "aggr.nn.weight").values.data(), width, width).cast<double>();
  aggr_transform_t_ = aggr_.transform.transpose().cast<float>();
  aggr_.transform_bias =
      Eigen::Map<const Eigen::VectorXf>(tensor(b, "aggr.nn.bias").values.data(), width).cast<double>();
  for (int m = 0; m < descriptor_.linear_layers; ++m) {
    const std::string p = "mlp." + std::to_string(m) + ".";
    const Tensor& weight = tensor(b, p + "weight");
    const auto rows = static_cast<Eigen::Index>(weight.shape[0]), cols = static_cast<Eigen::Index>(weight.shape[1]);
    mlp_weight_.push_back(Eigen::Map<const FloatMatrix>(weight.values.data(), rows, cols).cast<double>());
    mlp_bias_.push_back(Eigen::Map<const Eigen::VectorXf>(tensor(b, p + "bias").values.data(), rows).cast<double>());
  }
}

std::vector<Prediction> GatModel::predict_batch(std::span<const GnnGraph> graphs, bool check, GatTrace* trace) const {
  std::size_t rows = 0, edges = 0;
  for (const GnnGraph& g : graphs) {
    rows += g.rows();
    edges += g.edges.size();
  }
  FloatMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(kFeatureCount));
  std::vector<std::pair<int, int>> all_edges;
  all_edges.reserve(edges);
  std::vector<std::size_t> start;
  std::size_t base = 0;
  for (const GnnGraph& g : graphs) {
    start.push_back(base);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        const double v = norm_.scaled[c] ? (g.at(r, c) - norm_.mean[c]) / norm_.stddev[c] : g.at(r, c);
        x(static_cast<Eigen::Index>(base + r), static_cast<Eigen::Index>(c)) = static_cast<float>(v);
      }
    for (auto [s, d] : g.edges) all_edges.emplace_back(s + static_cast<int>(base), d + static_cast<int>(base));
    base += g.rows();
  }
  start.push_back(base);
  if (trace) trace->input = x;

  const Neighborhoods nbr = incoming_with_self_loops(rows, all_edges);
  std::vector<double> attention;
  FloatMatrix h = std::move(x);
  for (const GatLayerWeights& layer : conv_) {
    h = gat_layer(h, nbr, layer, check ? &attention : nullptr);
    if (trace) trace->conv.push_back(h);
  }

  // pool every graph, then run the aggregation transform as one product
  FloatMatrix pooled(static_cast<Eigen::Index>(graphs.size()), h.cols());
  std::vector<double> pool_weights;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Eigen::VectorXd p = gated_mean(h, start[gi], start[gi + 1], aggr_, check ? &pool_weights : nullptr);
    if (check) {
      double s = 0.0;
      for (double a : pool_weights) s += a;
      check_sum(s, "aggregation");
    }
    pooled.row(static_cast<Eigen::Index>(gi)) = p.transpose().cast<float>();
  }
  const FloatMatrix transformed = gemm(pooled, aggr_transform_t_);

  std::vector<Prediction> out;
  out.reserve(graphs.size());
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    Eigen::VectorXd z =
        transformed.row(static_cast<Eigen::Index>(gi)).transpose().cast<double>() + aggr_.transform_bias;
    if (trace) trace->pooled = z;
    for (std::size_t m = 0; m < mlp_weight_.size(); ++m) {
      z = mlp_weight_[m] * z + mlp_bias_[m];
      if (m + 1 < mlp_weight_.size())
        z = z.unaryExpr([](double v) { return elu(v); });
      else
        z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      if (trace) trace->mlp.push_back(z);
    }
    const double ratio = z[0];
    out.push_back({graphs[gi].meta.name, ratio, ratio * graphs[gi].meta.c_total});
    if (trace) trace->ratio = ratio;
  }
  return out;
}

std::vector<Prediction> GatModel::predict(std::span<const GnnGraph> graphs, const PredictOptions& options) const {
  const std::size_t per = std::max<std::size_t>(1, options.batch_graphs);
  const std::size_t batches = (graphs.size() + per - 1) / per;
  std::vector<Prediction> out;
  out.reserve(graphs.size());
  parallel_for_ordered(
      batches, options.workers,
      [&](std::size_t b) {
        const std::size_t lo = b * per, hi = std::min(graphs.size(), lo + per);
        return predict_batch(graphs.subspan(lo, hi - lo), options.check_invariants, nullptr);
      },
      [&](std::size_t, std::vector<Prediction>&& part) {
        for (auto& p : part) out.push_back(std::move(p));
      },
      std::max<std::size_t>(1, options.workers));
  return out;
}

GatTrace GatModel::trace(const GnnGraph& graph) const {
  GatTrace t;
  predict_batch(std::span<const GnnGraph>(&graph, 1), true, &t);
  return t;
}

}  // namespace ceff
