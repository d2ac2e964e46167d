#include <benchmark/benchmark.h>

#include "trajshap/synth.hpp"

using namespace trajshap;

namespace {

void BM_SocialForceStep(benchmark::State& state) {
  const int agents = static_cast<int>(state.range(0));
  SynthConfig cfg;
  const RngStream s = RngStream::root(5);
  std::vector<Vec2> pos(agents), vel(agents), goals(agents), next_pos, next_vel;
  for (int a = 0; a < agents; ++a) {
    pos[a] = {20.0 * s.uniform(2 * a) - 10.0, 20.0 * s.uniform(2 * a + 1) - 10.0};
    goals[a] = {20.0 * s.uniform(100 + 2 * a) - 10.0, 20.0 * s.uniform(101 + 2 * a) - 10.0};
  }
  for (auto _ : state) {
    social_force_step(pos, vel, goals, cfg, s.sub(1), next_pos, next_vel);
    benchmark::DoNotOptimize(next_pos.data());
  }
}

void BM_GenerateDataset(benchmark::State& state) {
  SynthConfig cfg;
  cfg.num_scenes = 8;
  cfg.seed = 11;
  for (auto _ : state) {
    auto [dataset, labels] = generate_dataset(cfg, true, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(dataset.scenes.data());
    benchmark::DoNotOptimize(labels.scenes.data());
  }
}

}  // namespace

BENCHMARK(BM_SocialForceStep)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK(BM_GenerateDataset)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
