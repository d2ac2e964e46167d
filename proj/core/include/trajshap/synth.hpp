#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "trajshap/rng.hpp"
#include "trajshap/scene.hpp"

namespace trajshap {

// Goal-seeking agents with radius-gated inverse-square repulsion. The known
// repulsion events double as a causal ground truth for attribution checks.
struct SynthConfig {
  int num_scenes = 80;
  int agents_per_scene = 8;
  int steps = 28;
  double dt = 0.4;
  double goal_gain = 0.3;         // beta, 1/s
  double repulsion_gain = 3.0;    // alpha, m^2/s^2
  double interaction_radius = 4.0;  // rho, m
  double noise_std = 0.05;        // sigma
  uint64_t seed = 1;
};

// influencers[target][frame] = sorted track indices whose repulsion on the
// target was nonzero during the step out of that frame.
struct SceneLabels {
  std::vector<std::vector<std::vector<int32_t>>> influencers;
};

struct GroundTruthLabels {
  std::vector<SceneLabels> scenes;
};

// One Euler step of the social-force dynamics:
//   v' = v + dt * [ beta*(goal - pos - v)
//                   + sum_{j != i, d <= rho} alpha*(pos_i - pos_j)/max(d^2, eps) ]
//        + sigma * eta,   eta ~ N(0, I2) from the per-(frame) noise stream
//   pos' = pos + dt * v'
// eps = 1e-6 m^2. influencers, when non-null, records the j with nonzero
// repulsion terms per agent.
void social_force_step(const std::vector<Vec2>& positions, const std::vector<Vec2>& velocities,
                       const std::vector<Vec2>& goals, const SynthConfig& config,
                       const RngStream& noise, std::vector<Vec2>& next_positions,
                       std::vector<Vec2>& next_velocities,
                       std::vector<std::vector<int32_t>>* influencers = nullptr);

// interactive=false forces repulsion_gain to 0 (control corpus). Start
// positions and goals are uniform in a 20 m x 20 m box. Deterministic given
// config.seed; scenes may be generated in parallel.
std::pair<Dataset, GroundTruthLabels> generate_dataset(const SynthConfig& config, bool interactive,
                                                       int workers = 1);

// Labels file: {scene_id: {agent_id: {frame: [influencer agent ids]}}},
// empty sets omitted.
void save_labels(const GroundTruthLabels& labels, const Dataset& dataset,
                 const std::filesystem::path& path);
GroundTruthLabels load_labels(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace trajshap
