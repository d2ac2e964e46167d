#include "trajshap/scene_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "trajshap/errors.hpp"

namespace trajshap {
namespace {

struct Observation {
  int64_t frame;
  Vec2 position;
};

bool parse_double(std::string_view token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

bool parse_integral(std::string_view token, int64_t& out) {
  double v = 0.0;
  if (!parse_double(token, v)) return false;
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || std::abs(r) > 9.0e15) return false;
  out = static_cast<int64_t>(r);
  return true;
}

std::vector<std::string_view> split_blanks(std::string_view line) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace

Scene parse_scene_text(std::istream& input, double dt, int n_max) {
  std::map<int64_t, std::vector<Observation>> by_agent;
  std::map<int64_t, int64_t> first_frame;
  int64_t min_frame = 0, max_frame = 0;
  bool any = false;

  std::string line;
  size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    const auto tokens = split_blanks(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 4)
      throw MalformedLineError(line_no, "expected 4 fields, got " + std::to_string(tokens.size()));
    int64_t frame = 0, agent = 0;
    Vec2 pos;
    if (!parse_integral(tokens[0], frame)) throw MalformedLineError(line_no, "bad frame field");
    if (!parse_integral(tokens[1], agent)) throw MalformedLineError(line_no, "bad agent_id field");
    if (!parse_double(tokens[2], pos.x)) throw MalformedLineError(line_no, "bad x field");
    if (!parse_double(tokens[3], pos.y)) throw MalformedLineError(line_no, "bad y field");

    auto& obs = by_agent[agent];
    for (const auto& o : obs)
      if (o.frame == frame) throw MalformedLineError(line_no, "duplicate observation for agent " + std::to_string(agent));
    obs.push_back({frame, pos});
    if (!first_frame.count(agent) || frame < first_frame[agent]) first_frame[agent] = frame;
    min_frame = any ? std::min(min_frame, frame) : frame;
    max_frame = any ? std::max(max_frame, frame) : frame;
    any = true;
  }
  if (!any) throw EmptyInputError("scene text contains no observations");
  if (static_cast<int>(by_agent.size()) > n_max)
    throw TooManyAgentsError("scene has " + std::to_string(by_agent.size()) + " agents, n_max is " +
                             std::to_string(n_max));

  // Uniform grid step: gcd of all offsets from the earliest frame.
  int64_t step = 0;
  for (const auto& [agent, obs] : by_agent)
    for (const auto& o : obs) step = std::gcd(step, o.frame - min_frame);
  if (step == 0) step = 1;
  const int num_frames = static_cast<int>((max_frame - min_frame) / step) + 1;

  std::vector<int64_t> agent_order;
  for (const auto& [agent, obs] : by_agent) agent_order.push_back(agent);
  std::sort(agent_order.begin(), agent_order.end(), [&](int64_t a, int64_t b) {
    if (first_frame[a] != first_frame[b]) return first_frame[a] < first_frame[b];
    return a < b;
  });

  Scene scene;
  scene.dt = dt;
  scene.n_real = static_cast<int>(agent_order.size());
  scene.tracks.reserve(n_max);
  for (int64_t agent : agent_order) {
    AgentTrack track;
    track.agent_id = agent;
    track.agent_type = AgentType::pedestrian;
    track.states.resize(num_frames);
    for (const auto& o : by_agent[agent]) {
      auto& s = track.states[(o.frame - min_frame) / step];
      s.position = o.position;
      s.present = true;
    }
    scene.tracks.push_back(std::move(track));
  }
  for (int j = scene.n_real; j < n_max; ++j) {
    AgentTrack dummy;
    dummy.agent_id = -1;
    dummy.agent_type = AgentType::dummy;
    dummy.states.resize(num_frames);
    scene.tracks.push_back(std::move(dummy));
  }
  return scene;
}

std::string serialize_scene_text(const Scene& scene) {
  std::string out;
  char buf[128];
  for (int f = 0; f < scene.num_frames(); ++f) {
    for (int j = 0; j < scene.n_real; ++j) {
      const auto& track = scene.tracks[j];
      if (!track.present_at(f)) continue;
      const auto& s = track.states[f];
      std::snprintf(buf, sizeof(buf), "%d\t%lld\t%.6f\t%.6f\n", f,
                    static_cast<long long>(track.agent_id), s.position.x, s.position.y);
      out += buf;
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest: " + manifest_path.string());
  nlohmann::json manifest = nlohmann::json::parse(in);

  Dataset dataset;
  dataset.n_max = manifest.at("n_max").get<int>();
  dataset.source = manifest_path.string();
  const double dt = manifest.at("dt").get<double>();
  if (!(dt > 0.0)) throw Error("manifest dt must be positive");
  if (dataset.n_max < 1) throw Error("manifest n_max must be at least 1");
  const auto base = manifest_path.parent_path();
  for (const auto& entry : manifest.at("scenes")) {
    const auto path = base / entry.get<std::string>();
    std::ifstream scene_in(path);
    if (!scene_in) throw Error("cannot open scene file: " + path.string());
    Scene scene = parse_scene_text(scene_in, dt, dataset.n_max);
    scene.scene_id = path.stem().string();
    dataset.scenes.push_back(derive_kinematics(std::move(scene)));
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  nlohmann::json manifest;
  manifest["n_max"] = dataset.n_max;
  manifest["dt"] = dataset.scenes.empty() ? 0.4 : dataset.scenes.front().dt;
  auto scene_names = nlohmann::json::array();
  for (const auto& scene : dataset.scenes) {
    const std::string name = scene.scene_id + ".txt";
    std::ofstream out(directory / name, std::ios::binary);
    out << serialize_scene_text(scene);
    scene_names.push_back(name);
  }
  manifest["scenes"] = scene_names;
  std::ofstream out(directory / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
}

}  // namespace trajshap
