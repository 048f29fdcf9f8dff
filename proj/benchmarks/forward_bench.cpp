#include <random>

#include <benchmark/benchmark.h>

#include "adamra/adamra.hpp"
#include "adamra/attention.hpp"
#include "adamra/bench.hpp"

namespace {

using namespace adamra;

void BM_AdamraForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const AdamraConfig cfg = bench::bench_adamra_config();
  std::mt19937_64 rng(42);
  const AdamraParams p = AdamraParams::init(cfg, rng);
  const Matrix x = random_uniform(n, cfg.d, -1.0, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(adamra_forward(x, p, cfg));
  state.SetComplexityN(state.range(0));
}

template <AttentionMode Mode>
void BM_Baseline(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(42);
  const MultiHeadParams p = MultiHeadParams::init(64, 4, rng);
  const Matrix x = random_uniform(n, 64, -1.0, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(multi_head_attention(x, p, Mode));
  state.SetComplexityN(state.range(0));
}

void BM_AdamraBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const AdamraConfig cfg = bench::bench_adamra_config();
  std::mt19937_64 rng(7);
  const AdamraParams p = AdamraParams::init(cfg, rng);
  const Matrix x = random_uniform(n, cfg.d, -1.0, 1.0, rng);
  const Matrix upstream = random_uniform(n, cfg.d, -1.0, 1.0, rng);
  const ForwardResult fwd = adamra_forward(x, p, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(adamra_backward(fwd.trace, p, upstream));
  state.SetComplexityN(state.range(0));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Matrix a = random_uniform(n, 64, -1.0, 1.0, rng);
  const Matrix b = random_uniform(64, 64, -1.0, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * 64 * 64);
}

BENCHMARK(BM_AdamraForward)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oN)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Baseline<AttentionMode::kernel>)->Name("BM_KernelForward")->RangeMultiplier(2)
    ->Range(256, 4096)->Complexity(benchmark::oN)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Baseline<AttentionMode::softmax>)->Name("BM_SoftmaxForward")->RangeMultiplier(2)
    ->Range(256, 2048)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdamraBackward)->RangeMultiplier(2)->Range(256, 2048)->Complexity(benchmark::oN)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Matmul)->RangeMultiplier(4)->Range(64, 4096);

}  // namespace

BENCHMARK_MAIN();
