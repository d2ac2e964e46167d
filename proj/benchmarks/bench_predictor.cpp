#include <benchmark/benchmark.h>

#include "trajshap/attribution.hpp"
#include "trajshap/predictor.hpp"
#include "trajshap/synth.hpp"
#include "trajshap/train.hpp"

using namespace trajshap;

namespace {

struct Fixture {
  Dataset dataset;
  ModelParams params;
  std::vector<PredictionQuery> queries;

  Fixture() {
    SynthConfig cfg;
    cfg.num_scenes = 4;
    cfg.agents_per_scene = 8;
    cfg.steps = 28;
    cfg.seed = 13;
    dataset = generate_dataset(cfg, true).first;
    params = init_params({16, 32, 32}, 6, 8, cfg.interaction_radius, 3);
    queries = enumerate_queries(dataset, 6, 8, 3);
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_SocialPredict(benchmark::State& state) {
  const auto& f = fixture();
  const SocialPredictor model(f.params);
  const Scene& scene = f.dataset.scenes[0];
  const FeatureMask mask = FeatureMask::full(scene);
  size_t i = 0;
  for (auto _ : state) {
    const auto dist = model.predict(scene, f.queries[i % f.queries.size()], mask);
    benchmark::DoNotOptimize(dist.steps.data());
    ++i;
  }
}

void BM_NllGradientBatch(benchmark::State& state) {
  const auto& f = fixture();
  const size_t batch = std::min<size_t>(32, f.queries.size());
  const std::span<const PredictionQuery> span(f.queries.data(), batch);
  for (auto _ : state) {
    const LossGrad lg = nll_gradient(f.params, f.dataset, span, 1);
    benchmark::DoNotOptimize(lg.grad.data());
  }
}

void BM_AttributeExactQuery(benchmark::State& state) {
  const auto& f = fixture();
  const SocialPredictor model(f.params);
  AttributionOptions options;
  options.metric = {MetricKind::nll, 20, 3};
  // the densest query keeps the coalition count honest
  FeatureSpec spec;
  for (const auto& q : f.queries) {
    FeatureSpec candidate = build_feature_spec(f.dataset.scenes[q.scene_index], q, 4.0);
    if (candidate.size() > spec.size() && candidate.size() <= options.exact_cap) spec = candidate;
  }
  for (auto _ : state) {
    const auto local = attribute_exact(model, f.dataset, spec, options);
    benchmark::DoNotOptimize(local.phi.data());
  }
  state.counters["features"] = spec.size();
}

}  // namespace

BENCHMARK(BM_SocialPredict);
BENCHMARK(BM_NllGradientBatch)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AttributeExactQuery)->Unit(benchmark::kMicrosecond);
