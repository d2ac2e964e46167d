#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajshap/vec2.hpp"

namespace trajshap {

enum class AgentType { pedestrian, vehicle, other, dummy };

// One agent at one frame. Absent frames keep present=false and all kinematic
// fields exactly zero; dummy padding tracks are absent at every frame.
struct AgentState {
  Vec2 position;
  Vec2 velocity;
  Vec2 acceleration;
  bool present = false;
};

struct AgentTrack {
  int64_t agent_id = -1;
  AgentType agent_type = AgentType::dummy;
  std::vector<AgentState> states;  // contiguous in frame index, one entry per scene frame

  bool is_dummy() const { return agent_type == AgentType::dummy; }
  bool present_at(int frame) const {
    return frame >= 0 && frame < static_cast<int>(states.size()) && states[frame].present;
  }
  bool present_over(int first, int last) const {
    for (int f = first; f <= last; ++f)
      if (!present_at(f)) return false;
    return true;
  }
};

// Joint trajectories of all agents over a shared frame range at fixed frame
// spacing. tracks always has exactly n_max entries; indices >= n_real are
// dummy padding.
struct Scene {
  std::string scene_id;
  double dt = 0.4;
  std::vector<AgentTrack> tracks;
  int n_real = 0;

  int num_frames() const { return tracks.empty() ? 0 : static_cast<int>(tracks.front().states.size()); }
  int n_max() const { return static_cast<int>(tracks.size()); }
};

struct Dataset {
  std::vector<Scene> scenes;
  int n_max = 0;
  std::string source;
};

// One prediction problem: history frames t-h+1..t, future frames t+1..t+horizon.
struct PredictionQuery {
  int scene_index = 0;
  int target = 0;  // track index
  int t = 0;
  int history = 0;
  int horizon = 0;

  int first_history_frame() const { return t - history + 1; }
  int last_future_frame() const { return t + horizon; }
};

// Fills velocity/acceleration by forward finite differences of the positions.
// The first present frame of each contiguous present run gets zero velocity;
// same convention one level up for acceleration. Absent and dummy states are
// left untouched. Idempotent for fixed positions.
Scene derive_kinematics(Scene scene);

// All (scene, real agent, t) windows where the target is present over the full
// history+future span and t lies on the stride grid starting at history-1.
// Deterministic order: scene, agent, t ascending.
std::vector<PredictionQuery> enumerate_queries(const Dataset& dataset, int history, int horizon,
                                               int stride);

bool query_valid(const Scene& scene, const PredictionQuery& query);

using AdjacencyRow = std::vector<uint8_t>;

// A[j] = 1 iff j != target, track j is present at frame t, and its position at
// t lies within radius of the target. Dummy tracks always get 0.
AdjacencyRow neighbors_of(const Scene& scene, const PredictionQuery& query, double radius);

// Ground-truth future positions of the target, frames t+1..t+horizon.
std::vector<Vec2> future_positions(const Scene& scene, const PredictionQuery& query);

}  // namespace trajshap
