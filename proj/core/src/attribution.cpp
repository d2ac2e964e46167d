#include "trajshap/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "trajshap/errors.hpp"

namespace trajshap {
namespace {

struct PoolWindow {
  int scene_index;
  int track_index;
  int start_frame;
};

// All (scene, track, start) windows of window_len consecutive present frames,
// excluding scenes that share the query scene's id. Deterministic order.
std::vector<PoolWindow> collect_pool_windows(const Dataset& pool, const std::string& exclude_scene,
                                             int window_len) {
  std::vector<PoolWindow> windows;
  for (int s = 0; s < static_cast<int>(pool.scenes.size()); ++s) {
    const Scene& scene = pool.scenes[s];
    if (scene.scene_id == exclude_scene) continue;
    for (int a = 0; a < scene.n_real; ++a) {
      const auto& track = scene.tracks[a];
      for (int start = 0; start + window_len <= scene.num_frames(); ++start) {
        if (track.present_over(start, start + window_len - 1)) windows.push_back({s, a, start});
      }
    }
  }
  return windows;
}

size_t distinct_sources(const std::vector<PoolWindow>& windows) {
  size_t count = 0;
  int last_scene = -1, last_track = -1;
  for (const auto& w : windows) {
    if (w.scene_index != last_scene || w.track_index != last_track) {
      ++count;
      last_scene = w.scene_index;
      last_track = w.track_index;
    }
  }
  return count;
}

// Copies a pool window into a track aligned with the query window
// [t-h+1, t+h orizon], shifted by a constant offset. Kinematics move unchanged.
AgentTrack make_window_track(const Scene& source_scene, const PoolWindow& window,
                             const PredictionQuery& query, int scene_frames, Vec2 offset) {
  const AgentTrack& source = source_scene.tracks[window.track_index];
  AgentTrack track;
  track.agent_id = source.agent_id;
  track.agent_type = source.agent_type;
  track.states.resize(scene_frames);
  const int first = query.first_history_frame();
  const int window_len = query.history + query.horizon;
  for (int k = 0; k < window_len; ++k) {
    const int dest = first + k;
    if (dest < 0 || dest >= scene_frames) continue;
    AgentState s = source.states[window.start_frame + k];
    s.position += offset;
    track.states[dest] = s;
  }
  return track;
}

FeatureMask mask_for_coalition(const Scene& scene, const FeatureSpec& spec, Coalition coalition,
                               bool replace_neighbors) {
  FeatureMask mask = FeatureMask::full(scene);
  for (int k = 0; k < spec.size(); ++k) {
    const Feature& f = spec.features[k];
    const bool included = (coalition >> k) & 1;
    switch (f.kind) {
      case FeatureKind::history:
        mask.include_target_history = included;
        break;
      case FeatureKind::neighbor:
        // under the marginal variant exclusion happens by track replacement
        if (!replace_neighbors) mask.neighbor_included[f.track_index] = included ? 1 : 0;
        break;
      case FeatureKind::injected:
        if (included) mask.injected.push_back({f.injected_track, f.align_frame});
        break;
    }
  }
  return mask;
}

LocalAttribution make_local(const Scene& scene, const FeatureSpec& spec, AttributionMethod method,
                            const ShapleyResult& game) {
  LocalAttribution local;
  local.query = spec.query;
  local.scene_id = scene.scene_id;
  local.method = method;
  for (const Feature& f : spec.features) local.features.push_back({f.kind, f.agent_id});
  local.phi = game.phi;
  local.nu_empty = game.nu_empty;
  local.nu_full = game.nu_full;
  local.evaluations = game.evaluations;
  return local;
}

}  // namespace

std::string feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::history: return "history";
    case FeatureKind::neighbor: return "neighbor";
    case FeatureKind::injected: return "injected";
  }
  return "?";
}

std::string method_name(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::exact: return "exact";
    case AttributionMethod::permutation: return "permutation";
    case AttributionMethod::marginal: return "marginal";
  }
  return "?";
}

int FeatureSpec::neighbor_count() const {
  return static_cast<int>(
      std::count_if(features.begin(), features.end(),
                    [](const Feature& f) { return f.kind == FeatureKind::neighbor; }));
}

int FeatureSpec::injected_count() const {
  return static_cast<int>(
      std::count_if(features.begin(), features.end(),
                    [](const Feature& f) { return f.kind == FeatureKind::injected; }));
}

FeatureSpec build_feature_spec(const Scene& scene, const PredictionQuery& query, double radius) {
  FeatureSpec spec;
  spec.query = query;
  spec.adjacency = neighbors_of(scene, query, radius);
  Feature history;
  history.kind = FeatureKind::history;
  history.agent_id = scene.tracks[query.target].agent_id;
  spec.features.push_back(std::move(history));
  for (int j = 0; j < scene.n_max(); ++j) {
    if (!spec.adjacency[j]) continue;
    Feature f;
    f.kind = FeatureKind::neighbor;
    f.track_index = j;
    f.agent_id = scene.tracks[j].agent_id;
    spec.features.push_back(std::move(f));
  }
  return spec;
}

double nu_value(const Predictor& predictor, const Scene& scene, const FeatureSpec& spec,
                Coalition coalition, const MetricSpec& metric) {
  const FeatureMask mask = mask_for_coalition(scene, spec, coalition, false);
  const auto dist = predictor.predict(scene, spec.query, mask);
  const auto gt = future_positions(scene, spec.query);
  return -evaluate_loss(metric, dist, gt, spec.query);
}

LocalAttribution attribute_exact(const Predictor& predictor, const Dataset& dataset,
                                 const FeatureSpec& spec, const AttributionOptions& options) {
  const Scene& scene = dataset.scenes[spec.query.scene_index];
  const auto game = shapley_exact_game(
      spec.size(),
      [&](Coalition c) { return nu_value(predictor, scene, spec, c, options.metric); },
      {options.exact_cap, options.workers});
  return make_local(scene, spec, AttributionMethod::exact, game);
}

LocalAttribution attribute_sampled(const Predictor& predictor, const Dataset& dataset,
                                   const FeatureSpec& spec, int permutations, uint64_t seed,
                                   const AttributionOptions& options) {
  const Scene& scene = dataset.scenes[spec.query.scene_index];
  const auto game = shapley_sampled_game(
      spec.size(),
      [&](Coalition c) { return nu_value(predictor, scene, spec, c, options.metric); },
      {permutations, seed, options.workers});
  LocalAttribution local = make_local(scene, spec, AttributionMethod::permutation, game);
  local.stderr_ = game.stderr_;
  return local;
}

LocalAttribution attribute_marginal(const Predictor& predictor, const Dataset& dataset,
                                    const FeatureSpec& spec, const Dataset& pool, int replacements,
                                    uint64_t seed, const AttributionOptions& options) {
  const Scene& scene = dataset.scenes[spec.query.scene_index];
  const int window_len = spec.query.history + spec.query.horizon;
  const auto windows = collect_pool_windows(pool, scene.scene_id, window_len);
  if (distinct_sources(windows) < static_cast<size_t>(std::max(1, replacements)))
    throw InsufficientPoolError("replacement pool has " + std::to_string(distinct_sources(windows)) +
                                " usable tracks, need " + std::to_string(replacements));

  // One replacement track per (neighbor feature, draw), fixed across
  // coalitions so coalition values share their random draws.
  const RngStream root = RngStream::root(seed)
                             .sub(static_cast<uint64_t>(spec.query.scene_index))
                             .sub(static_cast<uint64_t>(spec.query.target))
                             .sub(static_cast<uint64_t>(spec.query.t));
  std::vector<std::vector<AgentTrack>> replacement(spec.size());
  for (int k = 0; k < spec.size(); ++k) {
    if (spec.features[k].kind != FeatureKind::neighbor) continue;
    replacement[k].reserve(replacements);
    const RngStream per_feature = root.sub(static_cast<uint64_t>(k));
    for (int r = 0; r < replacements; ++r) {
      const auto& w = windows[per_feature.uniform_int(static_cast<uint64_t>(r),
                                                      static_cast<uint64_t>(windows.size()))];
      replacement[k].push_back(
          make_window_track(pool.scenes[w.scene_index], w, spec.query, scene.num_frames(), Vec2{}));
    }
  }

  const auto gt = future_positions(scene, spec.query);
  // Always the same R-term average, so coalitions that happen to produce equal
  // payouts produce bit-equal values and inert features get exactly zero.
  auto nu_marginal = [&](Coalition coalition) {
    const FeatureMask mask = mask_for_coalition(scene, spec, coalition, true);
    std::vector<int> dropped;
    for (int k = 0; k < spec.size(); ++k)
      if (spec.features[k].kind == FeatureKind::neighbor && !((coalition >> k) & 1))
        dropped.push_back(k);
    double total = 0.0;
    if (dropped.empty()) {
      const auto dist = predictor.predict(scene, spec.query, mask);
      const double payout = -evaluate_loss(options.metric, dist, gt, spec.query);
      for (int r = 0; r < replacements; ++r) total += payout;
    } else {
      for (int r = 0; r < replacements; ++r) {
        Scene modified = scene;
        for (int k : dropped) modified.tracks[spec.features[k].track_index] = replacement[k][r];
        const auto dist = predictor.predict(modified, spec.query, mask);
        total += -evaluate_loss(options.metric, dist, gt, spec.query);
      }
    }
    return total / static_cast<double>(replacements);
  };

  const auto game =
      shapley_exact_game(spec.size(), nu_marginal, {options.exact_cap, options.workers});
  return make_local(scene, spec, AttributionMethod::marginal, game);
}

FeatureSpec inject_random_agents(const Dataset& dataset, const FeatureSpec& spec,
                                 const Dataset& pool, int count, double radius, uint64_t seed) {
  if (count <= 0) return spec;
  const Scene& scene = dataset.scenes[spec.query.scene_index];
  const int window_len = spec.query.history + spec.query.horizon;
  const auto windows = collect_pool_windows(pool, scene.scene_id, window_len);
  if (windows.empty()) throw InsufficientPoolError("injection pool has no usable windows");

  const Vec2 target_pos = scene.tracks[spec.query.target].states[spec.query.t].position;
  const RngStream root = RngStream::root(seed)
                             .sub(static_cast<uint64_t>(spec.query.scene_index))
                             .sub(static_cast<uint64_t>(spec.query.target))
                             .sub(static_cast<uint64_t>(spec.query.t));
  FeatureSpec out = spec;
  for (int i = 0; i < count; ++i) {
    const RngStream s = root.sub(static_cast<uint64_t>(i));
    const auto& w = windows[s.uniform_int(0, static_cast<uint64_t>(windows.size()))];
    // uniform position in the disk of `radius` around the target at frame t
    const double rr = radius * std::sqrt(s.uniform(1));
    const double angle = 2.0 * std::numbers::pi * s.uniform(2);
    const Vec2 placed = target_pos + Vec2{rr * std::cos(angle), rr * std::sin(angle)};
    const Vec2 source_at_t =
        pool.scenes[w.scene_index].tracks[w.track_index].states[w.start_frame + spec.query.history - 1]
            .position;
    Feature f;
    f.kind = FeatureKind::injected;
    f.agent_id = pool.scenes[w.scene_index].tracks[w.track_index].agent_id;
    f.align_frame = spec.query.t;
    f.injected_track = make_window_track(pool.scenes[w.scene_index], w, spec.query,
                                         scene.num_frames(), placed - source_at_t);
    out.features.push_back(std::move(f));
  }
  return out;
}

std::string attribution_to_json(const LocalAttribution& local) {
  nlohmann::json j;
  j["query"] = {{"scene_index", local.query.scene_index}, {"scene_id", local.scene_id},
                {"target", local.query.target},           {"t", local.query.t},
                {"h", local.query.history},               {"horizon", local.query.horizon}};
  j["method"] = method_name(local.method);
  auto phi = nlohmann::json::array();
  for (size_t k = 0; k < local.phi.size(); ++k) {
    nlohmann::json f;
    f["kind"] = feature_kind_name(local.features[k].kind);
    f["agent_id"] = local.features[k].agent_id;
    f["value"] = local.phi[k];
    if (!local.stderr_.empty()) f["stderr"] = local.stderr_[k];
    phi.push_back(std::move(f));
  }
  j["phi"] = std::move(phi);
  j["nu_empty"] = local.nu_empty;
  j["nu_full"] = local.nu_full;
  j["evaluations"] = local.evaluations;
  return j.dump();
}

LocalAttribution attribution_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  LocalAttribution local;
  const auto& q = j.at("query");
  local.query.scene_index = q.at("scene_index").get<int>();
  local.scene_id = q.at("scene_id").get<std::string>();
  local.query.target = q.at("target").get<int>();
  local.query.t = q.at("t").get<int>();
  local.query.history = q.at("h").get<int>();
  local.query.horizon = q.at("horizon").get<int>();
  const std::string method = j.at("method").get<std::string>();
  if (method == "exact") local.method = AttributionMethod::exact;
  else if (method == "permutation") local.method = AttributionMethod::permutation;
  else if (method == "marginal") local.method = AttributionMethod::marginal;
  else throw Error("unknown attribution method: " + method);
  for (const auto& f : j.at("phi")) {
    FeatureInfo info;
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "history") info.kind = FeatureKind::history;
    else if (kind == "neighbor") info.kind = FeatureKind::neighbor;
    else if (kind == "injected") info.kind = FeatureKind::injected;
    else throw Error("unknown feature kind: " + kind);
    info.agent_id = f.at("agent_id").get<int64_t>();
    local.features.push_back(info);
    local.phi.push_back(f.at("value").get<double>());
    if (f.contains("stderr")) local.stderr_.push_back(f.at("stderr").get<double>());
  }
  local.nu_empty = j.at("nu_empty").get<double>();
  local.nu_full = j.at("nu_full").get<double>();
  local.evaluations = j.at("evaluations").get<int64_t>();
  return local;
}

}  // namespace trajshap
