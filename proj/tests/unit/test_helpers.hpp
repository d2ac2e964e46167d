#pragma once

#include <cmath>
#include <vector>

#include "trajshap/rng.hpp"
#include "trajshap/scene.hpp"
#include "trajshap/shapley.hpp"

namespace trajshap::testing {

// Scene with one track per position list; every listed frame is present.
inline Scene make_scene(const std::vector<std::vector<Vec2>>& positions, double dt = 0.4,
                        int n_max = -1) {
  Scene scene;
  scene.scene_id = "test";
  scene.dt = dt;
  scene.n_real = static_cast<int>(positions.size());
  size_t frames = 0;
  for (const auto& track : positions) frames = std::max(frames, track.size());
  for (size_t a = 0; a < positions.size(); ++a) {
    AgentTrack track;
    track.agent_id = static_cast<int64_t>(a);
    track.agent_type = AgentType::pedestrian;
    track.states.resize(frames);
    for (size_t f = 0; f < positions[a].size(); ++f) {
      track.states[f].position = positions[a][f];
      track.states[f].present = true;
    }
    scene.tracks.push_back(std::move(track));
  }
  const int pad = n_max < 0 ? scene.n_real : n_max;
  for (int j = scene.n_real; j < pad; ++j) {
    AgentTrack dummy;
    dummy.states.resize(frames);
    scene.tracks.push_back(std::move(dummy));
  }
  return derive_kinematics(std::move(scene));
}

// Straight-line track: start + k*step for `frames` frames.
inline std::vector<Vec2> line_track(Vec2 start, Vec2 step, int frames) {
  std::vector<Vec2> track;
  for (int k = 0; k < frames; ++k) track.push_back(start + static_cast<double>(k) * step);
  return track;
}

// Random scene with independently wandering agents; every agent present
// throughout.
inline Scene random_scene(uint64_t seed, int agents, int frames, double dt = 0.4) {
  const RngStream s = RngStream::root(seed);
  std::vector<std::vector<Vec2>> positions(agents);
  for (int a = 0; a < agents; ++a) {
    const RngStream sa = s.sub(a);
    Vec2 pos{20.0 * sa.uniform(0) - 10.0, 20.0 * sa.uniform(1) - 10.0};
    Vec2 vel{2.0 * sa.uniform(2) - 1.0, 2.0 * sa.uniform(3) - 1.0};
    for (int f = 0; f < frames; ++f) {
      positions[a].push_back(pos);
      vel += Vec2{0.4 * sa.uniform(10 + 2 * f) - 0.2, 0.4 * sa.uniform(11 + 2 * f) - 0.2};
      pos += dt * vel;
    }
  }
  return make_scene(positions, dt);
}

// Direct evaluation of the subset-weighted Shapley formula with binomial
// coefficients; independent of the engine's factorial weighting.
inline std::vector<double> brute_force_shapley(int n, const CoalitionValue& nu) {
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  std::vector<double> phi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    for (Coalition mask = 0; mask < (Coalition{1} << n); ++mask) {
      if (mask & bit) continue;
      int size = 0;
      for (int j = 0; j < n; ++j)
        if ((mask >> j) & 1) ++size;
      phi[i] += (nu(mask | bit) - nu(mask)) / (n * binom(n - 1, size));
    }
  }
  return phi;
}

}  // namespace trajshap::testing
