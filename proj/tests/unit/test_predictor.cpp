#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "trajshap/errors.hpp"
#include "trajshap/predictor.hpp"
#include "trajshap/synth.hpp"
#include "trajshap/train.hpp"
#include "test_helpers.hpp"

using namespace trajshap;

TEST_SUITE_BEGIN("predictor");

namespace {

ModelDims tiny_dims() { return {5, 6, 7}; }

ModelParams random_params(ModelDims dims, int h, int horizon, uint64_t seed, double scale = 0.5) {
  ModelParams p = init_params(dims, h, horizon, 4.0, seed);
  std::vector<double> flat = flatten_params(p);
  const RngStream s = RngStream::root(seed ^ 0xabcdef);
  for (size_t i = 0; i < flat.size(); ++i) flat[i] = scale * (2.0 * s.uniform(i) - 1.0);
  unflatten_params(p, flat);
  return p;
}

// scene with a target and two nearby neighbors, everyone present
Dataset neighbor_dataset(uint64_t seed = 1) {
  Dataset dataset;
  dataset.scenes.push_back(testing::random_scene(seed, 4, 14));
  dataset.n_max = 4;
  return dataset;
}

// central finite differences of the batch NLL
std::vector<double> fd_gradient(const ModelParams& params, const Dataset& dataset,
                                std::span<const PredictionQuery> batch, double step) {
  std::vector<double> flat = flatten_params(params);
  std::vector<double> grad(flat.size());
  ModelParams probe = params;
  for (size_t k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + step;
    unflatten_params(probe, flat);
    const double up = nll_loss(probe, dataset, batch);
    flat[k] = saved - step;
    unflatten_params(probe, flat);
    const double down = nll_loss(probe, dataset, batch);
    flat[k] = saved;
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

double max_rel_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double denom = std::max({std::abs(a[k]), std::abs(b[k]), 1e-6});
    worst = std::max(worst, std::abs(a[k] - b[k]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("apply_mask full mask reproduces the scene") {
  const Dataset dataset = neighbor_dataset();
  const Scene& scene = dataset.scenes[0];
  const PredictionQuery query{0, 0, 6, 4, 5};
  const auto adjacency = neighbors_of(scene, query, 50.0);
  const auto inputs = apply_mask(scene, query, adjacency, FeatureMask::full(scene));

  CHECK(inputs.neighbors.size() == 3);
  CHECK(inputs.anchor_position == scene.tracks[0].states[6].position);
  CHECK(inputs.anchor_velocity == scene.tracks[0].states[6].velocity);
  for (int k = 0; k < 4; ++k) {
    CHECK(inputs.target_history[k].position == scene.tracks[0].states[3 + k].position);
    CHECK(inputs.target_history[k].velocity == scene.tracks[0].states[3 + k].velocity);
  }
}

TEST_CASE("apply_mask drops neighbors and freezes history") {
  const Dataset dataset = neighbor_dataset();
  const Scene& scene = dataset.scenes[0];
  const PredictionQuery query{0, 0, 6, 4, 5};
  const auto adjacency = neighbors_of(scene, query, 50.0);

  const auto empty = apply_mask(scene, query, adjacency, FeatureMask::neighbors_off(scene));
  CHECK(empty.neighbors.empty());

  FeatureMask no_history = FeatureMask::full(scene);
  no_history.include_target_history = false;
  const auto frozen = apply_mask(scene, query, adjacency, no_history);
  CHECK(frozen.anchor_velocity == Vec2{0, 0});
  for (const auto& s : frozen.target_history) {
    CHECK(s.position == scene.tracks[0].states[6].position);
    CHECK(s.velocity == Vec2{0, 0});
    CHECK(s.acceleration == Vec2{0, 0});
  }
}

TEST_CASE("aggregate_edges means included edges") {
  CHECK(aggregate_edges({{1.0, 2.0}}, {1}, 2) == std::vector<double>{1.0, 2.0});
  CHECK(aggregate_edges({{1.0, 0.0}, {3.0, 0.0}}, {1, 1}, 2) == std::vector<double>{2.0, 0.0});
  CHECK(aggregate_edges({}, {}, 3) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(aggregate_edges({{5.0, 5.0}, {1.0, 1.0}}, {0, 1}, 2) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("constant-velocity extrapolation") {
  Scene scene = testing::make_scene({testing::line_track({-0.4, 0}, {0.4, 0}, 5)}, 0.4);
  const PredictionQuery query{0, 0, 1, 2, 3};
  const ConstantVelocityPredictor model(1.0);
  const auto dist = model.predict(scene, query, FeatureMask::full(scene));
  REQUIRE(dist.steps.size() == 3);
  // position (0,0) at t=1, velocity (1,0)
  CHECK(dist.steps[0].means[0].x == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(dist.steps[1].means[0].x == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(dist.steps[2].means[0].x == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(dist.steps[0].means[0].y == 0.0);
  CHECK(dist.steps[0].variances[0].x == 1.0);
}

TEST_CASE("constant-velocity ignores neighbor masking") {
  const Dataset dataset = neighbor_dataset();
  const Scene& scene = dataset.scenes[0];
  const PredictionQuery query{0, 1, 6, 4, 5};
  const ConstantVelocityPredictor model;
  const auto full = model.predict(scene, query, FeatureMask::full(scene));
  const auto none = model.predict(scene, query, FeatureMask::neighbors_off(scene));
  for (int k = 0; k < 5; ++k) {
    CHECK(full.steps[k].means[0] == none.steps[k].means[0]);
    CHECK(full.steps[k].variances[0] == none.steps[k].variances[0]);
  }
}

TEST_CASE("zero decoder weights reduce to constant velocity means") {
  const Dataset dataset = neighbor_dataset();
  const Scene& scene = dataset.scenes[0];
  const PredictionQuery query{0, 0, 6, 4, 5};

  ModelParams params = random_params(tiny_dims(), 4, 5, 3);
  std::fill(params.dec_w1.begin(), params.dec_w1.end(), 0.0);
  std::fill(params.dec_b1.begin(), params.dec_b1.end(), 0.0);
  std::fill(params.dec_w2.begin(), params.dec_w2.end(), 0.0);
  std::fill(params.dec_b2.begin(), params.dec_b2.end(), 0.0);
  const SocialPredictor social(params);
  const ConstantVelocityPredictor cv(1.0);  // exp(0) = 1 matches the zero log-variance

  const auto a = social.predict(scene, query, FeatureMask::full(scene));
  const auto b = cv.predict(scene, query, FeatureMask::full(scene));
  for (int k = 0; k < 5; ++k) {
    CHECK(a.steps[k].means[0] == b.steps[k].means[0]);
    CHECK(a.steps[k].variances[0] == b.steps[k].variances[0]);
  }
}

TEST_CASE("mask locality: bits of non-adjacent tracks are inert") {
  const Dataset dataset = neighbor_dataset(7);
  const Scene& scene = dataset.scenes[0];
  const PredictionQuery query{0, 0, 6, 4, 5};
  ModelParams params = random_params(tiny_dims(), 4, 5, 11);
  params.interaction_radius = 2.0;
  const SocialPredictor model(params);
  const auto adjacency = neighbors_of(scene, query, params.interaction_radius);

  FeatureMask mask = FeatureMask::full(scene);
  const auto base = model.predict(scene, query, mask);
  for (int j = 0; j < scene.n_max(); ++j) {
    if (adjacency[j] || j == query.target) continue;
    FeatureMask toggled = mask;
    toggled.neighbor_included[j] = 0;
    const auto out = model.predict(scene, query, toggled);
    for (int k = 0; k < 5; ++k) {
      CHECK(out.steps[k].means[0] == base.steps[k].means[0]);
      CHECK(out.steps[k].variances[0] == base.steps[k].variances[0]);
    }
  }
}

TEST_CASE("dummy tracks are invisible") {
  Dataset dataset = neighbor_dataset(9);
  const PredictionQuery query{0, 0, 6, 4, 5};
  const ModelParams params = random_params(tiny_dims(), 4, 5, 13);
  const SocialPredictor model(params);
  const auto before = model.predict(dataset.scenes[0], query, FeatureMask::full(dataset.scenes[0]));

  Scene padded = dataset.scenes[0];
  for (int extra = 0; extra < 3; ++extra) {
    AgentTrack dummy;
    dummy.states.resize(padded.num_frames());
    padded.tracks.push_back(std::move(dummy));
  }
  const auto after = model.predict(padded, query, FeatureMask::full(padded));
  for (int k = 0; k < 5; ++k) CHECK(before.steps[k].means[0] == after.steps[k].means[0]);
}

TEST_CASE("predictions satisfy the distribution invariants") {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const Dataset dataset = neighbor_dataset(seed);
    const ModelParams params = random_params(tiny_dims(), 4, 5, seed, 2.0);
    const SocialPredictor model(params);
    const PredictionQuery query{0, static_cast<int>(seed % 4), 6, 4, 5};
    const auto dist = model.predict(dataset.scenes[0], query, FeatureMask::full(dataset.scenes[0]));
    std::string why;
    CHECK_MESSAGE(dist.valid(&why), why);
  }
}

TEST_CASE("checkpoint round-trip preserves every weight bit") {
  const auto dir = std::filesystem::temp_directory_path() / "trajshap_ckpt_test";
  std::filesystem::create_directories(dir);
  const ModelParams params = random_params(tiny_dims(), 4, 5, 21);
  save_social_checkpoint(dir / "social.json", params);
  const auto loaded = load_checkpoint(dir / "social.json");
  REQUIRE(loaded->kind() == "social");
  const auto& social = dynamic_cast<const SocialPredictor&>(*loaded);
  CHECK(flatten_params(social.params()) == flatten_params(params));
  CHECK(social.params().interaction_radius == params.interaction_radius);

  save_cv_checkpoint(dir / "cv.json", 0.81);
  const auto cv = load_checkpoint(dir / "cv.json");
  REQUIRE(cv->kind() == "constant_velocity");
  CHECK(dynamic_cast<const ConstantVelocityPredictor&>(*cv).sigma0_sq() == 0.81);
  std::filesystem::remove_all(dir);
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const Dataset dataset = neighbor_dataset(seed + 30);
    const ModelParams params = random_params(tiny_dims(), 4, 5, seed + 50);
    const std::vector<PredictionQuery> batch{{0, 0, 6, 4, 5}};
    const LossGrad lg = nll_gradient(params, dataset, batch);
    const auto fd = fd_gradient(params, dataset, batch, 1e-5);
    CHECK(max_rel_error(lg.grad, fd) < 1e-4);
  }
}

TEST_CASE("all-zero parameters give finite loss and gradient") {
  const Dataset dataset = neighbor_dataset(2);
  const ModelParams params = zero_params(tiny_dims(), 4, 5, 4.0);
  const std::vector<PredictionQuery> batch{{0, 0, 6, 4, 5}, {0, 1, 6, 4, 5}};
  const LossGrad lg = nll_gradient(params, dataset, batch);
  CHECK(std::isfinite(lg.loss));
  for (double g : lg.grad) CHECK(std::isfinite(g));
}

TEST_CASE("duplicated query leaves the mean gradient unchanged") {
  const Dataset dataset = neighbor_dataset(3);
  const ModelParams params = random_params(tiny_dims(), 4, 5, 77);
  const std::vector<PredictionQuery> one{{0, 2, 6, 4, 5}};
  const std::vector<PredictionQuery> two{{0, 2, 6, 4, 5}, {0, 2, 6, 4, 5}};
  const LossGrad a = nll_gradient(params, dataset, one);
  const LossGrad b = nll_gradient(params, dataset, two);
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
}

TEST_CASE("gradient batches are worker-count invariant") {
  const Dataset dataset = neighbor_dataset(4);
  const ModelParams params = random_params(tiny_dims(), 4, 5, 78);
  std::vector<PredictionQuery> batch;
  for (int a = 0; a < 4; ++a) batch.push_back({0, a, 6, 4, 5});
  const LossGrad serial = nll_gradient(params, dataset, batch, 1);
  const LossGrad parallel = nll_gradient(params, dataset, batch, 3);
  CHECK(serial.loss == parallel.loss);
  CHECK(serial.grad == parallel.grad);
}

TEST_CASE("train contract: zero epochs, determinism, loss decrease") {
  SynthConfig cfg;
  cfg.num_scenes = 8;
  cfg.agents_per_scene = 4;
  cfg.steps = 16;
  cfg.seed = 5;
  const auto [dataset, labels] = generate_dataset(cfg, true);

  const ModelParams params = init_params(tiny_dims(), 4, 5, cfg.interaction_radius, 9);
  TrainOptions options;
  options.epochs = 0;
  CHECK(flatten_params(train(params, dataset, options)) == flatten_params(params));

  options.epochs = 8;
  options.seed = 123;
  const ModelParams a = train(params, dataset, options);
  const ModelParams b = train(params, dataset, options);
  CHECK(flatten_params(a) == flatten_params(b));

  options.workers = 3;
  const ModelParams c = train(params, dataset, options);
  CHECK(flatten_params(a) == flatten_params(c));

  const auto queries = enumerate_queries(dataset, 4, 5, 1);
  CHECK(nll_loss(a, dataset, queries) < nll_loss(params, dataset, queries));
}

TEST_CASE("mismatched query window is rejected") {
  const Dataset dataset = neighbor_dataset(6);
  const SocialPredictor model(random_params(tiny_dims(), 4, 5, 1));
  const PredictionQuery wrong{0, 0, 6, 5, 5};
  CHECK_THROWS_AS(model.predict(dataset.scenes[0], wrong, FeatureMask::full(dataset.scenes[0])),
                  Error);
}

TEST_SUITE_END();
