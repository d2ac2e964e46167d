#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajshap/predictor.hpp"
#include "trajshap/rng.hpp"
#include "trajshap/scene.hpp"

namespace trajshap {

enum class MetricKind { min_ade, min_fde, nll };

std::string metric_name(MetricKind kind);          // "minADE" / "minFDE" / "NLL"
MetricKind metric_from_name(const std::string& name);

// Which loss scores a prediction. For the min-of-K metrics, trajectories are
// sampled per-step independently from the mixture with a stream keyed by
// (seed, query), so the same draws are reused across feature masks and the
// loss is a deterministic function of the distribution.
struct MetricSpec {
  MetricKind kind = MetricKind::nll;
  int num_samples = 20;  // K for the min-based metrics
  uint64_t seed = 0;
};

// min over samples of the mean-over-steps L2 distance to the ground truth
double min_ade(const std::vector<std::vector<Vec2>>& samples, const std::vector<Vec2>& ground_truth);

// min over samples of the L2 distance at the final step only
double min_fde(const std::vector<std::vector<Vec2>>& samples, const std::vector<Vec2>& ground_truth);

// mean over steps of -log sum_c w_c N(gt; mean_c, diag var_c), variances
// clamped to the floor before evaluation
double nll(const PredictiveDistribution& dist, const std::vector<Vec2>& ground_truth);

std::vector<std::vector<Vec2>> sample_trajectories(const PredictiveDistribution& dist, int count,
                                                   const RngStream& stream);

RngStream metric_stream(const MetricSpec& spec, const PredictionQuery& query);

double evaluate_loss(const MetricSpec& spec, const PredictiveDistribution& dist,
                     const std::vector<Vec2>& ground_truth, const PredictionQuery& query);

// Mean loss under the full mask vs. the mask with every neighbor dropped
// (history kept), and their difference.
struct DiffRow {
  MetricKind loss;
  double with_interaction = 0.0;
  double without_interaction = 0.0;
  double diff = 0.0;  // with - without
};

std::vector<DiffRow> interaction_diff_table(const Predictor& predictor, const Dataset& dataset,
                                            std::span<const PredictionQuery> queries,
                                            std::span<const MetricKind> losses, int num_samples,
                                            uint64_t metric_seed, int workers = 1);

std::string diff_table_csv(const std::vector<DiffRow>& rows);

}  // namespace trajshap
