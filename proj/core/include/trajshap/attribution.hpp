#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajshap/metrics.hpp"
#include "trajshap/predictor.hpp"
#include "trajshap/scene.hpp"
#include "trajshap/shapley.hpp"

namespace trajshap {

enum class FeatureKind { history, neighbor, injected };

std::string feature_kind_name(FeatureKind kind);

struct Feature {
  FeatureKind kind = FeatureKind::history;
  int track_index = -1;   // neighbors only
  int64_t agent_id = -1;  // reported identity (source id for injected tracks)
  AgentTrack injected_track;  // injected only; aligned to the query scene frames
  int align_frame = -1;
};

// The players of one query's game: feature 0 is the target history, then one
// feature per adjacent real neighbor (ascending track index), then any
// injected random agents.
struct FeatureSpec {
  PredictionQuery query;
  AdjacencyRow adjacency;
  std::vector<Feature> features;

  int size() const { return static_cast<int>(features.size()); }
  int neighbor_count() const;
  int injected_count() const;
};

FeatureSpec build_feature_spec(const Scene& scene, const PredictionQuery& query, double radius);

enum class AttributionMethod { exact, permutation, marginal };

std::string method_name(AttributionMethod method);

struct FeatureInfo {
  FeatureKind kind;
  int64_t agent_id;
};

struct LocalAttribution {
  PredictionQuery query;
  std::string scene_id;
  AttributionMethod method = AttributionMethod::exact;
  std::vector<FeatureInfo> features;
  std::vector<double> phi;
  std::vector<double> stderr_;  // sampling methods only
  double nu_empty = 0.0;
  double nu_full = 0.0;
  int64_t evaluations = 0;
};

// Coalition payout: run the predictor with exactly the features in S present
// (history via the static baseline, neighbors via adjacency zeroing, injected
// tracks attached only when chosen) and return the negative loss against the
// ground-truth future. Positive Shapley values therefore mean the feature
// helps the model.
double nu_value(const Predictor& predictor, const Scene& scene, const FeatureSpec& spec,
                Coalition coalition, const MetricSpec& metric);

struct AttributionOptions {
  MetricSpec metric;
  int exact_cap = 12;
  int workers = 1;
};

LocalAttribution attribute_exact(const Predictor& predictor, const Dataset& dataset,
                                 const FeatureSpec& spec, const AttributionOptions& options);

LocalAttribution attribute_sampled(const Predictor& predictor, const Dataset& dataset,
                                   const FeatureSpec& spec, int permutations, uint64_t seed,
                                   const AttributionOptions& options);

// Marginal (randomization) variant: a dropped neighbor keeps its edge but its
// track is replaced by a seeded random window from another scene, averaged
// over `replacements` draws; the history feature still drops to the static
// baseline and injected features detach as usual.
LocalAttribution attribute_marginal(const Predictor& predictor, const Dataset& dataset,
                                    const FeatureSpec& spec, const Dataset& pool, int replacements,
                                    uint64_t seed, const AttributionOptions& options);

// Robustness probe: appends `count` injected features drawn from windows of
// other scenes, relocated so their position at frame t is uniform within
// `radius` of the target.
FeatureSpec inject_random_agents(const Dataset& dataset, const FeatureSpec& spec,
                                 const Dataset& pool, int count, double radius, uint64_t seed);

// JSON: {query, method, phi: [{kind, agent_id, value, stderr}], nu_empty,
// nu_full, evaluations} on one line.
std::string attribution_to_json(const LocalAttribution& local);
LocalAttribution attribution_from_json(const std::string& text);

}  // namespace trajshap
