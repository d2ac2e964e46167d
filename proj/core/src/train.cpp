#include "trajshap/train.hpp"

#include <cmath>
#include <numbers>

#include "trajshap/errors.hpp"
#include "trajshap/parallel.hpp"
#include "trajshap/rng.hpp"
#include "social_forward.hpp"

namespace trajshap {
namespace {

using detail::SocialTrace;

std::vector<std::vector<double>*> param_arrays(ModelParams& p) {
  return {&p.psi,    &p.xi_w1,  &p.xi_b1,  &p.xi_w2, &p.xi_b2,
          &p.dec_w1, &p.dec_b1, &p.dec_w2, &p.dec_b2};
}

std::vector<const std::vector<double>*> param_arrays(const ModelParams& p) {
  return {&p.psi,    &p.xi_w1,  &p.xi_b1,  &p.xi_w2, &p.xi_b2,
          &p.dec_w1, &p.dec_b1, &p.dec_w2, &p.dec_b2};
}

// Per-query NLL and gradient accumulation into grad (same layout as params).
double backward_query(const ModelParams& params, const Scene& scene, const PredictionQuery& query,
                      ModelParams& grad) {
  const AdjacencyRow adjacency = neighbors_of(scene, query, params.interaction_radius);
  const FeatureMask mask = FeatureMask::full(scene);
  const EffectiveInputs inputs = apply_mask(scene, query, adjacency, mask);
  const SocialTrace trace = detail::social_forward(params, inputs, scene.dt);
  const std::vector<Vec2> gt = future_positions(scene, query);

  const int d_f = params.dims.d_f;
  const int d_e = params.dims.d_e;
  const int d_dec = params.dims.d_dec;
  const int horizon = params.horizon;
  const double inv_h = 1.0 / horizon;

  // loss and d loss / d decoder_out
  double loss = 0.0;
  std::vector<double> d_out(4 * horizon, 0.0);
  for (int k = 0; k < horizon; ++k) {
    const double* o = trace.decoder_out.data() + 4 * k;
    const Vec2 mean = trace.cv_means[k] + Vec2{o[0], o[1]};
    for (int axis = 0; axis < 2; ++axis) {
      const double lv = o[2 + axis];
      const double ev = std::exp(lv);
      const bool clamped = ev < kVarianceFloor;
      const double var = clamped ? kVarianceFloor : ev;
      const double diff = (axis == 0 ? mean.x - gt[k].x : mean.y - gt[k].y);
      loss += 0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var) + diff * diff / var);
      d_out[4 * k + axis] = inv_h * diff / var;
      d_out[4 * k + 2 + axis] = clamped ? 0.0 : inv_h * 0.5 * (1.0 - diff * diff / var);
    }
  }
  loss *= inv_h;

  // decoder
  std::vector<double> d_hidden(d_dec, 0.0);
  detail::matvec_transposed_add(params.dec_w2, d_out.data(), 4 * horizon, d_dec, d_hidden.data());
  detail::outer_add(grad.dec_w2, d_out.data(), trace.decoder_hidden.data(), 4 * horizon, d_dec, 1.0);
  for (int i = 0; i < 4 * horizon; ++i) grad.dec_b2[i] += d_out[i];

  std::vector<double> d_pre(d_dec);
  for (int i = 0; i < d_dec; ++i)
    d_pre[i] = d_hidden[i] * (1.0 - trace.decoder_hidden[i] * trace.decoder_hidden[i]);
  std::vector<double> d_z(2 * d_f, 0.0);
  detail::matvec_transposed_add(params.dec_w1, d_pre.data(), d_dec, 2 * d_f, d_z.data());
  detail::outer_add(grad.dec_w1, d_pre.data(), trace.decoder_in.data(), d_dec, 2 * d_f, 1.0);
  for (int i = 0; i < d_dec; ++i) grad.dec_b1[i] += d_pre[i];

  // history encoder
  detail::outer_add(grad.psi, d_z.data(), trace.displacement.data(), d_f,
                    2 * params.history, 1.0);

  // edge encoder through the mean aggregation
  if (!trace.edges.empty()) {
    const double inv_m = 1.0 / static_cast<double>(trace.edges.size());
    std::vector<double> d_edge(d_f);
    std::vector<double> d_eh(d_e);
    std::vector<double> d_epre(d_e);
    for (size_t i = 0; i < static_cast<size_t>(d_f); ++i) d_edge[i] = d_z[d_f + i] * inv_m;
    for (const auto& edge : trace.edges) {
      std::fill(d_eh.begin(), d_eh.end(), 0.0);
      detail::matvec_transposed_add(params.xi_w2, d_edge.data(), d_f, d_e, d_eh.data());
      detail::outer_add(grad.xi_w2, d_edge.data(), edge.hidden.data(), d_f, d_e, 1.0);
      for (int i = 0; i < d_f; ++i) grad.xi_b2[i] += d_edge[i];
      for (int i = 0; i < d_e; ++i)
        d_epre[i] = d_eh[i] * (1.0 - edge.hidden[i] * edge.hidden[i]);
      detail::outer_add(grad.xi_w1, d_epre.data(), edge.input.data(), d_e, 4, 1.0);
      for (int i = 0; i < d_e; ++i) grad.xi_b1[i] += d_epre[i];
    }
  }
  return loss;
}

}  // namespace

std::vector<double> flatten_params(const ModelParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (const auto* arr : param_arrays(params)) flat.insert(flat.end(), arr->begin(), arr->end());
  return flat;
}

void unflatten_params(ModelParams& params, std::span<const double> flat) {
  size_t offset = 0;
  for (auto* arr : param_arrays(params)) {
    std::copy(flat.begin() + offset, flat.begin() + offset + arr->size(), arr->begin());
    offset += arr->size();
  }
}

LossGrad nll_gradient(const ModelParams& params, const Dataset& dataset,
                      std::span<const PredictionQuery> batch, int workers) {
  if (batch.empty()) throw Error("nll_gradient: empty batch");

  std::vector<double> losses(batch.size(), 0.0);
  std::vector<ModelParams> grads(batch.size());
  parallel_for(batch.size(), workers, [&](size_t i) {
    grads[i] = zero_params(params.dims, params.history, params.horizon, params.interaction_radius);
    losses[i] =
        backward_query(params, dataset.scenes[batch[i].scene_index], batch[i], grads[i]);
  });

  LossGrad result;
  result.grad.assign(params.parameter_count(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    result.loss += losses[i];
    const std::vector<double> flat = flatten_params(grads[i]);
    for (size_t k = 0; k < flat.size(); ++k) result.grad[k] += flat[k];
  }
  result.loss *= inv_b;
  for (double& g : result.grad) g *= inv_b;
  if (!std::isfinite(result.loss)) throw NonFiniteLossError("training loss is not finite");
  return result;
}

double nll_loss(const ModelParams& params, const Dataset& dataset,
                std::span<const PredictionQuery> batch, int workers) {
  if (batch.empty()) throw Error("nll_loss: empty batch");
  std::vector<double> losses(batch.size(), 0.0);
  parallel_for(batch.size(), workers, [&](size_t i) {
    ModelParams scratch =
        zero_params(params.dims, params.history, params.horizon, params.interaction_radius);
    losses[i] =
        backward_query(params, dataset.scenes[batch[i].scene_index], batch[i], scratch);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(batch.size());
}

ModelParams train(ModelParams params, const Dataset& dataset, const TrainOptions& options) {
  const std::vector<PredictionQuery> queries =
      enumerate_queries(dataset, params.history, params.horizon, options.stride);
  if (queries.empty()) throw Error("train: dataset yields no queries");

  std::vector<double> flat = flatten_params(params);
  // distinct substream so the shuffle never aliases init_params draws
  const RngStream shuffle_root = RngStream::root(options.seed).sub(0x73687566);

  std::vector<size_t> order(queries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<PredictionQuery> batch;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    seeded_shuffle(order, shuffle_root.sub(static_cast<uint64_t>(epoch)));
    for (size_t start = 0; start < order.size(); start += options.batch_size) {
      const size_t end = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(queries[order[i]]);

      unflatten_params(params, flat);
      LossGrad lg = nll_gradient(params, dataset, batch, options.workers);

      double norm_sq = 0.0;
      for (double g : lg.grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      const double scale =
          (options.clip_norm > 0.0 && norm > options.clip_norm) ? options.clip_norm / norm : 1.0;
      for (size_t k = 0; k < flat.size(); ++k) flat[k] -= options.learning_rate * scale * lg.grad[k];
    }
  }
  unflatten_params(params, flat);
  return params;
}

}  // namespace trajshap
