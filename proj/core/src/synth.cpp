#include "trajshap/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "trajshap/errors.hpp"
#include "trajshap/parallel.hpp"

namespace trajshap {
namespace {

constexpr uint64_t kInitTag = 0x01;
constexpr uint64_t kNoiseTag = 0x02;
constexpr double kRepulsionEps = 1e-6;  // m^2
constexpr double kBoxHalf = 10.0;       // 20 m x 20 m box

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  return buf;
}

Scene simulate_scene(const SynthConfig& cfg, int scene_index, SceneLabels& labels) {
  const int n = cfg.agents_per_scene;
  const RngStream init = RngStream::root(cfg.seed).sub(kInitTag).sub(static_cast<uint64_t>(scene_index));
  const RngStream noise_root =
      RngStream::root(cfg.seed).sub(kNoiseTag).sub(static_cast<uint64_t>(scene_index));

  std::vector<Vec2> pos(n), vel(n), goals(n);
  for (int a = 0; a < n; ++a) {
    const RngStream s = init.sub(static_cast<uint64_t>(a));
    pos[a] = {kBoxHalf * (2.0 * s.uniform(0) - 1.0), kBoxHalf * (2.0 * s.uniform(1) - 1.0)};
    goals[a] = {kBoxHalf * (2.0 * s.uniform(2) - 1.0), kBoxHalf * (2.0 * s.uniform(3) - 1.0)};
  }

  Scene scene;
  scene.scene_id = scene_name(scene_index);
  scene.dt = cfg.dt;
  scene.n_real = n;
  scene.tracks.resize(n);
  for (int a = 0; a < n; ++a) {
    scene.tracks[a].agent_id = a;
    scene.tracks[a].agent_type = AgentType::pedestrian;
    scene.tracks[a].states.resize(cfg.steps);
  }
  labels.influencers.assign(n, std::vector<std::vector<int32_t>>(cfg.steps));

  std::vector<Vec2> next_pos(n), next_vel(n);
  std::vector<std::vector<int32_t>> step_influencers;
  for (int f = 0; f < cfg.steps; ++f) {
    for (int a = 0; a < n; ++a) {
      scene.tracks[a].states[f].position = pos[a];
      scene.tracks[a].states[f].present = true;
    }
    if (f + 1 >= cfg.steps) break;
    social_force_step(pos, vel, goals, cfg, noise_root.sub(static_cast<uint64_t>(f)), next_pos,
                      next_vel, &step_influencers);
    for (int a = 0; a < n; ++a) labels.influencers[a][f] = step_influencers[a];
    pos.swap(next_pos);
    vel.swap(next_vel);
  }
  return derive_kinematics(std::move(scene));
}

}  // namespace

void social_force_step(const std::vector<Vec2>& positions, const std::vector<Vec2>& velocities,
                       const std::vector<Vec2>& goals, const SynthConfig& config,
                       const RngStream& noise, std::vector<Vec2>& next_positions,
                       std::vector<Vec2>& next_velocities,
                       std::vector<std::vector<int32_t>>* influencers) {
  const size_t n = positions.size();
  next_positions.resize(n);
  next_velocities.resize(n);
  if (influencers) influencers->assign(n, {});

  for (size_t i = 0; i < n; ++i) {
    Vec2 accel = config.goal_gain * (goals[i] - positions[i] - velocities[i]);
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec2 offset = positions[i] - positions[j];
      const double d2 = offset.squared_norm();
      if (d2 > config.interaction_radius * config.interaction_radius) continue;
      const Vec2 term = (config.repulsion_gain / std::max(d2, kRepulsionEps)) * offset;
      if (term.x == 0.0 && term.y == 0.0) continue;
      accel += term;
      if (influencers) (*influencers)[i].push_back(static_cast<int32_t>(j));
    }
    Vec2 v = velocities[i] + config.dt * accel;
    if (config.noise_std > 0.0) {
      const auto [nx, ny] = noise.sub(i).normal_pair(0);
      v += config.noise_std * Vec2{nx, ny};
    }
    next_velocities[i] = v;
    next_positions[i] = positions[i] + config.dt * v;
  }
}

std::pair<Dataset, GroundTruthLabels> generate_dataset(const SynthConfig& config, bool interactive,
                                                       int workers) {
  SynthConfig cfg = config;
  if (!interactive) cfg.repulsion_gain = 0.0;

  Dataset dataset;
  dataset.n_max = cfg.agents_per_scene;
  dataset.source = "synth";
  dataset.scenes.resize(cfg.num_scenes);
  GroundTruthLabels labels;
  labels.scenes.resize(cfg.num_scenes);

  parallel_for(static_cast<size_t>(cfg.num_scenes), workers, [&](size_t s) {
    dataset.scenes[s] = simulate_scene(cfg, static_cast<int>(s), labels.scenes[s]);
  });
  return {std::move(dataset), std::move(labels)};
}

void save_labels(const GroundTruthLabels& labels, const Dataset& dataset,
                 const std::filesystem::path& path) {
  nlohmann::json root = nlohmann::json::object();
  for (size_t s = 0; s < labels.scenes.size(); ++s) {
    const Scene& scene = dataset.scenes[s];
    nlohmann::json per_scene = nlohmann::json::object();
    const auto& infl = labels.scenes[s].influencers;
    for (size_t a = 0; a < infl.size(); ++a) {
      nlohmann::json per_target = nlohmann::json::object();
      for (size_t f = 0; f < infl[a].size(); ++f) {
        if (infl[a][f].empty()) continue;
        auto ids = nlohmann::json::array();
        for (int32_t j : infl[a][f]) ids.push_back(scene.tracks[j].agent_id);
        per_target[std::to_string(f)] = ids;
      }
      if (!per_target.empty()) per_scene[std::to_string(scene.tracks[a].agent_id)] = per_target;
    }
    root[scene.scene_id] = per_scene;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write labels: " + path.string());
  out << root.dump(2) << "\n";
}

GroundTruthLabels load_labels(const std::filesystem::path& path, const Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open labels: " + path.string());
  nlohmann::json root = nlohmann::json::parse(in);

  GroundTruthLabels labels;
  labels.scenes.resize(dataset.scenes.size());
  for (size_t s = 0; s < dataset.scenes.size(); ++s) {
    const Scene& scene = dataset.scenes[s];
    std::map<int64_t, int> track_of_id;
    for (int j = 0; j < scene.n_real; ++j) track_of_id[scene.tracks[j].agent_id] = j;
    labels.scenes[s].influencers.assign(scene.n_max(),
                                        std::vector<std::vector<int32_t>>(scene.num_frames()));
    if (!root.contains(scene.scene_id)) continue;
    for (const auto& [agent_key, per_target] : root[scene.scene_id].items()) {
      const int target = track_of_id.at(std::stoll(agent_key));
      for (const auto& [frame_key, ids] : per_target.items()) {
        const int frame = std::stoi(frame_key);
        auto& entry = labels.scenes[s].influencers[target][frame];
        for (const auto& id : ids) entry.push_back(track_of_id.at(id.get<int64_t>()));
        std::sort(entry.begin(), entry.end());
      }
    }
  }
  return labels;
}

}  // namespace trajshap
