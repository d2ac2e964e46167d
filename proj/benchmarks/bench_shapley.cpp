#include <benchmark/benchmark.h>

#include "trajshap/rng.hpp"
#include "trajshap/shapley.hpp"

using namespace trajshap;

namespace {

CoalitionValue hash_game(uint64_t seed) {
  return [seed](Coalition c) { return 2.0 * RngStream::root(seed).uniform(c) - 1.0; };
}

void BM_ShapleyExact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto nu = hash_game(7);
  for (auto _ : state) {
    const auto result = shapley_exact_game(n, nu, {14, 1});
    benchmark::DoNotOptimize(result.phi.data());
  }
}

void BM_ShapleySampled(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto nu = hash_game(7);
  for (auto _ : state) {
    const auto result = shapley_sampled_game(12, nu, {m, 3, 1});
    benchmark::DoNotOptimize(result.phi.data());
  }
}

}  // namespace

BENCHMARK(BM_ShapleyExact)->DenseRange(6, 14, 2);
BENCHMARK(BM_ShapleySampled)->Arg(200)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
