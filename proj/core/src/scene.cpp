#include "trajshap/scene.hpp"

#include <cassert>

namespace trajshap {

Scene derive_kinematics(Scene scene) {
  for (auto& track : scene.tracks) {
    if (track.is_dummy()) continue;
    const int n = static_cast<int>(track.states.size());
    for (int f = 0; f < n; ++f) {
      auto& s = track.states[f];
      if (!s.present) continue;
      const bool run_start = (f == 0) || !track.states[f - 1].present;
      s.velocity = run_start ? Vec2{} : (1.0 / scene.dt) * (s.position - track.states[f - 1].position);
    }
    for (int f = 0; f < n; ++f) {
      auto& s = track.states[f];
      if (!s.present) continue;
      const bool run_start = (f == 0) || !track.states[f - 1].present;
      s.acceleration = run_start ? Vec2{} : (1.0 / scene.dt) * (s.velocity - track.states[f - 1].velocity);
    }
  }
  return scene;
}

bool query_valid(const Scene& scene, const PredictionQuery& query) {
  if (query.target < 0 || query.target >= scene.n_max()) return false;
  const auto& track = scene.tracks[query.target];
  if (track.is_dummy()) return false;
  const int first = query.first_history_frame();
  const int last = query.last_future_frame();
  if (first < 0 || last >= scene.num_frames()) return false;
  return track.present_over(first, last);
}

std::vector<PredictionQuery> enumerate_queries(const Dataset& dataset, int history, int horizon,
                                               int stride) {
  assert(history >= 1 && horizon >= 1 && stride >= 1);
  std::vector<PredictionQuery> queries;
  for (int s = 0; s < static_cast<int>(dataset.scenes.size()); ++s) {
    const Scene& scene = dataset.scenes[s];
    const int frames = scene.num_frames();
    for (int a = 0; a < scene.n_real; ++a) {
      for (int t = history - 1; t + horizon < frames; t += stride) {
        PredictionQuery q{s, a, t, history, horizon};
        if (query_valid(scene, q)) queries.push_back(q);
      }
    }
  }
  return queries;
}

AdjacencyRow neighbors_of(const Scene& scene, const PredictionQuery& query, double radius) {
  AdjacencyRow row(scene.n_max(), 0);
  const Vec2 target_pos = scene.tracks[query.target].states[query.t].position;
  for (int j = 0; j < scene.n_max(); ++j) {
    if (j == query.target) continue;
    const auto& track = scene.tracks[j];
    if (track.is_dummy() || !track.present_at(query.t)) continue;
    if (distance(track.states[query.t].position, target_pos) <= radius) row[j] = 1;
  }
  return row;
}

std::vector<Vec2> future_positions(const Scene& scene, const PredictionQuery& query) {
  std::vector<Vec2> gt;
  gt.reserve(query.horizon);
  for (int k = 1; k <= query.horizon; ++k)
    gt.push_back(scene.tracks[query.target].states[query.t + k].position);
  return gt;
}

}  // namespace trajshap
