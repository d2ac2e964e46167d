#pragma once

// Internal forward pass of the social model with all intermediates kept for
// backpropagation. Not installed.

#include <array>
#include <vector>

#include "trajshap/predictor.hpp"

namespace trajshap::detail {

// y = W x, W row-major (rows x cols)
inline void matvec(const std::vector<double>& w, const double* x, int rows, int cols, double* y) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = w.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// y += W^T d
inline void matvec_transposed_add(const std::vector<double>& w, const double* d, int rows, int cols,
                                  double* y) {
  for (int r = 0; r < rows; ++r) {
    const double* row = w.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) y[c] += row[c] * d[r];
  }
}

// W += scale * d x^T
inline void outer_add(std::vector<double>& w, const double* d, const double* x, int rows, int cols,
                      double scale) {
  for (int r = 0; r < rows; ++r) {
    double* row = w.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) row[c] += scale * d[r] * x[c];
  }
}

struct EdgeTrace {
  std::array<double, 4> input;  // rel pos, rel vel at t
  std::vector<double> hidden;   // tanh activations, d_e
  std::vector<double> feature;  // E, d_f
};

struct SocialTrace {
  std::vector<double> displacement;  // 2h
  std::vector<double> history_feature;  // F, d_f
  std::vector<EdgeTrace> edges;
  std::vector<double> edge_mean;  // Ebar, d_f
  std::vector<double> decoder_in;  // [F; Ebar], 2*d_f
  std::vector<double> decoder_hidden;  // tanh activations, d_dec
  std::vector<double> decoder_out;  // 4*horizon
  std::vector<Vec2> cv_means;
};

SocialTrace social_forward(const ModelParams& params, const EffectiveInputs& inputs, double dt);

PredictiveDistribution trace_to_distribution(const ModelParams& params, const SocialTrace& trace);

}  // namespace trajshap::detail
