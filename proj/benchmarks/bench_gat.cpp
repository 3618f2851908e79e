#include <benchmark/benchmark.h>

#include "ceff/gat.hpp"
#include "ceff/gnn_graph.hpp"
#include "corpus.hpp"

using namespace ceff;

namespace {

std::vector<GnnGraph> small_graphs(std::size_t count) {
  GenSpec spec;
  spec.seed = 99;
  const TechProfile tech = default_tech_profile();
  std::vector<GnnGraph> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(to_gnn_graph(generate_net(spec, tech, 3 + static_cast<int>(i % 8), static_cast<std::int64_t>(i))));
  return out;
}

void BM_GraphBuild(benchmark::State& state) {
  const auto nets = bench::nets_of_degree(static_cast<int>(state.range(0)), 64);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(to_gnn_graph(nets[i++ % nets.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GraphBuild)->Arg(3)->Arg(10)->Arg(30);

void BM_GatPredict(benchmark::State& state) {
  static const GatModel model(load_weights(CEFF_GOLDEN_BUNDLE));
  static const auto graphs = small_graphs(1024);
  PredictOptions opts;
  opts.batch_graphs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(graphs, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(graphs.size()));
}
BENCHMARK(BM_GatPredict)->Arg(1)->Arg(32)->Arg(128)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_GatLayer(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  GatLayerWeights w;
  w.heads = 12;
  w.channels = 32;
  w.weight_t = FloatMatrix::Random(384, 384) * 0.05f;
  w.att_src.assign(384, 0.05f);
  w.att_dst.assign(384, -0.05f);
  w.bias.assign(384, 0.0f);
  const FloatMatrix h = FloatMatrix::Random(rows, 384);
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < rows; ++i) edges.emplace_back(i / 2, i);
  const Neighborhoods nbr = incoming_with_self_loops(static_cast<std::size_t>(rows), edges);
  for (auto _ : state) benchmark::DoNotOptimize(gat_layer(h, nbr, w));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_GatLayer)->Arg(16)->Arg(1024)->Unit(benchmark::kMicrosecond);

}  // namespace
