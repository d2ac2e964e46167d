#include "trajshap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "trajshap/errors.hpp"
#include "trajshap/parallel.hpp"

namespace trajshap {
namespace {

void check_lengths(size_t got, size_t expected, const char* what) {
  if (got != expected)
    throw LengthMismatchError(std::string(what) + ": got " + std::to_string(got) + ", expected " +
                              std::to_string(expected));
}

double log_normal_density(Vec2 x, Vec2 mean, Vec2 var) {
  const double vx = std::max(var.x, kVarianceFloor);
  const double vy = std::max(var.y, kVarianceFloor);
  const double dx = x.x - mean.x;
  const double dy = x.y - mean.y;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * (std::log(vx) + std::log(vy)) -
         0.5 * (dx * dx / vx + dy * dy / vy);
}

}  // namespace

std::string metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::min_ade: return "minADE";
    case MetricKind::min_fde: return "minFDE";
    case MetricKind::nll: return "NLL";
  }
  return "?";
}

MetricKind metric_from_name(const std::string& name) {
  if (name == "minADE" || name == "min_ade" || name == "minade") return MetricKind::min_ade;
  if (name == "minFDE" || name == "min_fde" || name == "minfde") return MetricKind::min_fde;
  if (name == "NLL" || name == "nll") return MetricKind::nll;
  throw Error("unknown loss kind: " + name);
}

double min_ade(const std::vector<std::vector<Vec2>>& samples, const std::vector<Vec2>& ground_truth) {
  if (samples.empty()) throw LengthMismatchError("min_ade: no samples");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& sample : samples) {
    check_lengths(sample.size(), ground_truth.size(), "min_ade sample length");
    double sum = 0.0;
    for (size_t k = 0; k < sample.size(); ++k) sum += distance(sample[k], ground_truth[k]);
    best = std::min(best, sum / static_cast<double>(sample.size()));
  }
  return best;
}

double min_fde(const std::vector<std::vector<Vec2>>& samples, const std::vector<Vec2>& ground_truth) {
  if (samples.empty()) throw LengthMismatchError("min_fde: no samples");
  if (ground_truth.empty()) throw LengthMismatchError("min_fde: empty ground truth");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& sample : samples) {
    check_lengths(sample.size(), ground_truth.size(), "min_fde sample length");
    best = std::min(best, distance(sample.back(), ground_truth.back()));
  }
  return best;
}

double nll(const PredictiveDistribution& dist, const std::vector<Vec2>& ground_truth) {
  check_lengths(dist.steps.size(), ground_truth.size(), "nll horizon");
  double total = 0.0;
  for (size_t k = 0; k < dist.steps.size(); ++k) {
    const auto& step = dist.steps[k];
    // log-sum-exp over mixture components
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(step.weights.size());
    for (size_t c = 0; c < step.weights.size(); ++c) {
      if (step.weights[c] <= 0.0) continue;
      const double t =
          std::log(step.weights[c]) + log_normal_density(ground_truth[k], step.means[c], step.variances[c]);
      terms.push_back(t);
      max_term = std::max(max_term, t);
    }
    if (terms.empty()) throw Error("nll: step has no positive-weight component");
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - max_term);
    total += -(max_term + std::log(sum));
  }
  return total / static_cast<double>(dist.steps.size());
}

std::vector<std::vector<Vec2>> sample_trajectories(const PredictiveDistribution& dist, int count,
                                                   const RngStream& stream) {
  std::vector<std::vector<Vec2>> samples(count);
  for (int s = 0; s < count; ++s) {
    const RngStream per_sample = stream.sub(static_cast<uint64_t>(s));
    auto& traj = samples[s];
    traj.resize(dist.steps.size());
    for (size_t k = 0; k < dist.steps.size(); ++k) {
      const RngStream draw = per_sample.sub(k);
      const auto& step = dist.steps[k];
      size_t comp = 0;
      if (step.weights.size() > 1) {
        const double u = draw.uniform(0);
        double acc = 0.0;
        for (size_t c = 0; c < step.weights.size(); ++c) {
          acc += step.weights[c];
          comp = c;
          if (u < acc) break;
        }
      }
      const auto [zx, zy] = draw.normal_pair(1);
      traj[k] = {step.means[comp].x + std::sqrt(std::max(step.variances[comp].x, kVarianceFloor)) * zx,
                 step.means[comp].y + std::sqrt(std::max(step.variances[comp].y, kVarianceFloor)) * zy};
    }
  }
  return samples;
}

RngStream metric_stream(const MetricSpec& spec, const PredictionQuery& query) {
  return RngStream::root(spec.seed)
      .sub(static_cast<uint64_t>(query.scene_index))
      .sub(static_cast<uint64_t>(query.target))
      .sub(static_cast<uint64_t>(query.t));
}

double evaluate_loss(const MetricSpec& spec, const PredictiveDistribution& dist,
                     const std::vector<Vec2>& ground_truth, const PredictionQuery& query) {
  if (spec.kind == MetricKind::nll) return nll(dist, ground_truth);
  const auto samples = sample_trajectories(dist, spec.num_samples, metric_stream(spec, query));
  return spec.kind == MetricKind::min_ade ? min_ade(samples, ground_truth)
                                          : min_fde(samples, ground_truth);
}

std::vector<DiffRow> interaction_diff_table(const Predictor& predictor, const Dataset& dataset,
                                            std::span<const PredictionQuery> queries,
                                            std::span<const MetricKind> losses, int num_samples,
                                            uint64_t metric_seed, int workers) {
  struct PerQuery {
    std::vector<double> with_loss, without_loss;
  };
  std::vector<PerQuery> rows(queries.size());
  parallel_for(queries.size(), workers, [&](size_t i) {
    const PredictionQuery& query = queries[i];
    const Scene& scene = dataset.scenes[query.scene_index];
    const auto gt = future_positions(scene, query);
    const auto dist_with = predictor.predict(scene, query, FeatureMask::full(scene));
    const auto dist_without = predictor.predict(scene, query, FeatureMask::neighbors_off(scene));
    for (MetricKind kind : losses) {
      const MetricSpec spec{kind, num_samples, metric_seed};
      rows[i].with_loss.push_back(evaluate_loss(spec, dist_with, gt, query));
      rows[i].without_loss.push_back(evaluate_loss(spec, dist_without, gt, query));
    }
  });

  std::vector<DiffRow> table;
  for (size_t li = 0; li < losses.size(); ++li) {
    DiffRow row;
    row.loss = losses[li];
    for (const auto& r : rows) {
      row.with_interaction += r.with_loss[li];
      row.without_interaction += r.without_loss[li];
    }
    if (!rows.empty()) {
      row.with_interaction /= static_cast<double>(rows.size());
      row.without_interaction /= static_cast<double>(rows.size());
    }
    row.diff = row.with_interaction - row.without_interaction;
    table.push_back(row);
  }
  return table;
}

std::string diff_table_csv(const std::vector<DiffRow>& rows) {
  std::string out = "loss,with,without,diff\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g\n", metric_name(row.loss).c_str(),
                  row.with_interaction, row.without_interaction, row.diff);
    out += buf;
  }
  return out;
}

}  // namespace trajshap
