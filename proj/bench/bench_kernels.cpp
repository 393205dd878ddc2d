// Serial reference kernels against their OpenMP counterparts, and a meta-step
// with candidate scoring run serially or in parallel.
#include <benchmark/benchmark.h>

#include <vector>

#include "autohas/engine.hpp"
#include "autohas/kernels.hpp"
#include "support.hpp"

namespace {

using namespace autohas;
using Kernel = void (*)(std::span<const double>, std::span<const double>, std::span<double>, kernels::MatDims);

void run_matmul(benchmark::State& state, Kernel kernel) {
  const auto n = static_cast<std::size_t>(state.range(0));
  testing::Gen g(1, "bench");
  std::vector<double> a(n * n), b(n * n), out(n * n);
  for (double& v : a) v = g.normal();
  for (double& v : b) v = g.normal();
  for (auto _ : state) {
    kernel(a, b, out, {n, n, n});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

void BM_MatmulSerial(benchmark::State& s) { run_matmul(s, kernels::matmul_serial); }
void BM_MatmulParallel(benchmark::State& s) { run_matmul(s, kernels::matmul_parallel); }
void BM_MatmulBtSerial(benchmark::State& s) { run_matmul(s, kernels::matmul_bt_serial); }
void BM_MatmulBtParallel(benchmark::State& s) { run_matmul(s, kernels::matmul_bt_parallel); }
void BM_MatmulAtSerial(benchmark::State& s) { run_matmul(s, kernels::matmul_at_serial); }
void BM_MatmulAtParallel(benchmark::State& s) { run_matmul(s, kernels::matmul_at_parallel); }

BENCHMARK(BM_MatmulSerial)->RangeMultiplier(2)->Range(16, 256);
BENCHMARK(BM_MatmulParallel)->RangeMultiplier(2)->Range(16, 256);
BENCHMARK(BM_MatmulBtSerial)->Arg(128);
BENCHMARK(BM_MatmulBtParallel)->Arg(128);
BENCHMARK(BM_MatmulAtSerial)->Arg(128);
BENCHMARK(BM_MatmulAtParallel)->Arg(128);

SearchSpace bench_space() {
  SpaceConfig cfg;
  cfg.input_width = 2;
  cfg.classes = 2;
  for (int l = 0; l < 2; ++l) {
    LayerConfig layer;
    layer.candidates = {{OpKind::identity, 0}, {OpKind::affine_relu, 32}, {OpKind::affine_tanh, 64}};
    layer.adapter = ShapeAdapter::zero_pad;
    layer.width = 64;
    cfg.layers.push_back(layer);
  }
  cfg.hyperparameters.push_back(testing::real_hyper("learning_rate", {0.01, 0.05, 0.2}));
  return build_space(cfg);
}

// One meta-step per iteration; range(0) toggles parallel candidate scoring.
void BM_MetaStep(benchmark::State& state) {
  const SearchSpace space = bench_space();
  const DataSplit data = split(two_moons(1000, 0.1, 1), {0.6, 0.2, 0.2}, 1);
  SearchOptions o;
  o.total_meta_steps = 1u << 30;
  o.pairs_per_step = 8;
  o.trainer.inner_steps = 3;
  o.parallel = state.range(0) != 0;
  SupernetBackend backend(space, data, o);
  SearchState st = init_search_state(space, o);
  for (auto _ : state) benchmark::DoNotOptimize(run_meta_step(space, st, backend, o));
}
BENCHMARK(BM_MetaStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
