#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trajshap/predictor.hpp"
#include "trajshap/scene.hpp"

namespace trajshap {

// Flat parameter vector in a fixed array order (psi, xi_w1, xi_b1, xi_w2,
// xi_b2, dec_w1, dec_b1, dec_w2, dec_b2); gradients use the same layout.
std::vector<double> flatten_params(const ModelParams& params);
void unflatten_params(ModelParams& params, std::span<const double> flat);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean per-step NLL of the ground truth over the batch, with the analytic
// reverse-mode gradient through the decoder, the edge aggregation, and both
// encoders. Queries are evaluated under the full feature mask. Throws
// NonFiniteLossError when the loss is not finite.
LossGrad nll_gradient(const ModelParams& params, const Dataset& dataset,
                      std::span<const PredictionQuery> batch, int workers = 1);

double nll_loss(const ModelParams& params, const Dataset& dataset,
                std::span<const PredictionQuery> batch, int workers = 1);

struct TrainOptions {
  double learning_rate = 0.02;
  int epochs = 60;
  int batch_size = 64;
  uint64_t seed = 0;
  int stride = 1;       // query enumeration stride over the training dataset
  double clip_norm = 5.0;
  int workers = 1;
};

// Mini-batch gradient descent on the NLL with global gradient-norm clipping.
// Deterministic given the seed, for any worker count.
ModelParams train(ModelParams params, const Dataset& dataset, const TrainOptions& options);

}  // namespace trajshap
