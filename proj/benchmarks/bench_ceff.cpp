#include <benchmark/benchmark.h>

#include "ceff/dartu.hpp"
#include "ceff/pi_model.hpp"
#include "ceff/rsmt.hpp"
#include "ceff/transient.hpp"
#include "corpus.hpp"

using namespace ceff;

namespace {

void BM_Moments(benchmark::State& state) {
  const auto nets = bench::nets_of_degree(static_cast<int>(state.range(0)), 64);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(reduce_network(nets[i++ % nets.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Moments)->Arg(3)->Arg(10)->Arg(30);

void BM_Dartu(benchmark::State& state) {
  const auto nets = bench::nets_of_degree(static_cast<int>(state.range(0)), 64);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(compute_ceff_dartu(nets[i++ % nets.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Dartu)->Arg(3)->Arg(10)->Arg(30);

void BM_DartuPiOnly(benchmark::State& state) {
  const auto nets = bench::nets_of_degree(10, 64);
  std::vector<PiModel> pis;
  for (const auto& n : nets) pis.push_back(reduce_network(n));
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t k = i++ % nets.size();
    benchmark::DoNotOptimize(compute_ceff_dartu(pis[k], nets[k].driver));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DartuPiOnly);

void BM_Simulate(benchmark::State& state) {
  const auto nets = bench::nets_of_degree(static_cast<int>(state.range(0)), 16);
  TransientOptions opts;
  opts.record_waveforms = false;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(nets[i++ % nets.size()], opts).t50_root);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Simulate)->Arg(3)->Arg(10)->Arg(30)->Unit(benchmark::kMicrosecond);

void BM_OracleCeff(benchmark::State& state) {
  const auto nets = bench::nets_of_degree(static_cast<int>(state.range(0)), 8);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(oracle_ceff(nets[i++ % nets.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_OracleCeff)->Arg(3)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Rsmt(benchmark::State& state) {
  GenSpec spec;
  const int degree = static_cast<int>(state.range(0));
  std::vector<std::vector<Point>> sets;
  for (int i = 0; i < 8; ++i) {
    KeyedRng rng(spec.seed, static_cast<std::uint64_t>(degree), static_cast<std::uint64_t>(i));
    sets.push_back(generate_terminals(spec, degree, rng));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_rsmt(sets[i++ % sets.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Rsmt)->Arg(5)->Arg(9)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
