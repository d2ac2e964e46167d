#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "trajshap/scene.hpp"

namespace trajshap {

// Which input features the model may see. Dropping a neighbor zeroes its
// adjacency entry; dropping the target history replaces it with a static
// stay-in-place trajectory anchored at the last observed position. Injected
// tracks are extra incoming edges used by robustness probes.
struct FeatureMask {
  bool include_target_history = true;
  std::vector<uint8_t> neighbor_included;  // one bit per track index

  struct Injected {
    AgentTrack track;     // states aligned to the query scene's frame indices
    int align_frame = 0;  // the query time t this track was placed at
  };
  std::vector<Injected> injected;

  // All real-track bits on, history on. Dummy bits stay 0.
  static FeatureMask full(const Scene& scene);
  // History on, every neighbor bit 0.
  static FeatureMask neighbors_off(const Scene& scene);
};

inline constexpr double kVarianceFloor = 1e-6;  // m^2

// Per-step Gaussian mixture over future positions (diagonal covariance).
struct StepMixture {
  std::vector<double> weights;
  std::vector<Vec2> means;
  std::vector<Vec2> variances;  // per-axis
};

struct PredictiveDistribution {
  std::vector<StepMixture> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
  // weights nonnegative and normalized within 1e-12, variances at the floor
  bool valid(std::string* why = nullptr) const;
};

// Model inputs after masking: the (possibly statically replaced) target
// history window and the states at time t of every admitted neighbor edge.
struct EffectiveInputs {
  std::vector<AgentState> target_history;  // frames t-h+1..t
  Vec2 anchor_position;                    // target position at t (mask-independent)
  Vec2 anchor_velocity;                    // target velocity at t, zero when history is off

  struct Neighbor {
    int64_t agent_id = -1;
    bool injected = false;
    Vec2 position;
    Vec2 velocity;
  };
  std::vector<Neighbor> neighbors;  // masked adjacency order, injected last
};

EffectiveInputs apply_mask(const Scene& scene, const PredictionQuery& query,
                           const AdjacencyRow& adjacency, const FeatureMask& mask);

// Mean edge aggregation: sum_j A[j]*E[j] / sum_j A[j]; zero vector when no
// edge is admitted. edges[j] may be empty when A[j] == 0.
std::vector<double> aggregate_edges(const std::vector<std::vector<double>>& edges,
                                    const AdjacencyRow& adjacency, size_t feature_dim);

struct ModelDims {
  int d_f = 16;
  int d_e = 32;
  int d_dec = 32;
};

// Weights of the social encoder-decoder, flat row-major.
//   psi:    d_f x 2h linear map over the history displacement window
//   xi:     4 -> d_e (tanh) -> d_f perceptron over [rel pos, rel vel] at t
//   dec:    2*d_f -> d_dec (tanh) -> 4*horizon (mean offsets and log-variances)
struct ModelParams {
  ModelDims dims;
  int history = 8;
  int horizon = 12;
  double interaction_radius = 4.0;  // edge admission radius

  std::vector<double> psi;
  std::vector<double> xi_w1, xi_b1, xi_w2, xi_b2;
  std::vector<double> dec_w1, dec_b1, dec_w2, dec_b2;

  size_t parameter_count() const;
};

ModelParams zero_params(ModelDims dims, int history, int horizon, double radius);
ModelParams init_params(ModelDims dims, int history, int horizon, double radius, uint64_t seed);

// Contract shared by every model: a deterministic map from (masked inputs) to
// a predictive distribution.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictiveDistribution predict(const Scene& scene, const PredictionQuery& query,
                                         const FeatureMask& mask) const = 0;
  virtual std::string kind() const = 0;
};

// Linear extrapolation of the masked anchor state; ignores all neighbors.
class ConstantVelocityPredictor final : public Predictor {
 public:
  explicit ConstantVelocityPredictor(double sigma0_sq = 1.0) : sigma0_sq_(sigma0_sq) {}
  PredictiveDistribution predict(const Scene& scene, const PredictionQuery& query,
                                 const FeatureMask& mask) const override;
  std::string kind() const override { return "constant_velocity"; }
  double sigma0_sq() const { return sigma0_sq_; }

 private:
  double sigma0_sq_;
};

// History encoder + radius-gated edge encoder with mean aggregation + residual
// decoder on top of the constant-velocity extrapolation.
class SocialPredictor final : public Predictor {
 public:
  explicit SocialPredictor(ModelParams params);
  PredictiveDistribution predict(const Scene& scene, const PredictionQuery& query,
                                 const FeatureMask& mask) const override;
  std::string kind() const override { return "social"; }
  const ModelParams& params() const { return params_; }

 private:
  ModelParams params_;
};

// Checkpoints: JSON with a format_version, the model kind, dims and
// hyperparameters, and flat row-major weight arrays.
void save_social_checkpoint(const std::filesystem::path& path, const ModelParams& params);
void save_cv_checkpoint(const std::filesystem::path& path, double sigma0_sq);
std::unique_ptr<Predictor> load_checkpoint(const std::filesystem::path& path);

}  // namespace trajshap
