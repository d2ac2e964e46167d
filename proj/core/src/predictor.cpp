#include "trajshap/predictor.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "trajshap/errors.hpp"
#include "trajshap/rng.hpp"
#include "social_forward.hpp"

namespace trajshap {

FeatureMask FeatureMask::full(const Scene& scene) {
  FeatureMask mask;
  mask.neighbor_included.assign(scene.n_max(), 0);
  for (int j = 0; j < scene.n_max(); ++j)
    if (!scene.tracks[j].is_dummy()) mask.neighbor_included[j] = 1;
  return mask;
}

FeatureMask FeatureMask::neighbors_off(const Scene& scene) {
  FeatureMask mask;
  mask.neighbor_included.assign(scene.n_max(), 0);
  return mask;
}

bool PredictiveDistribution::valid(std::string* why) const {
  auto fail = [&](const std::string& reason) {
    if (why) *why = reason;
    return false;
  };
  if (steps.empty()) return fail("no steps");
  for (const auto& step : steps) {
    const size_t k = step.weights.size();
    if (k == 0 || step.means.size() != k || step.variances.size() != k)
      return fail("component arrays inconsistent");
    double sum = 0.0;
    for (double w : step.weights) {
      if (w < 0.0) return fail("negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) return fail("weights not normalized");
    for (const auto& v : step.variances)
      if (!(v.x >= kVarianceFloor) || !(v.y >= kVarianceFloor)) return fail("variance below floor");
  }
  return true;
}

EffectiveInputs apply_mask(const Scene& scene, const PredictionQuery& query,
                           const AdjacencyRow& adjacency, const FeatureMask& mask) {
  EffectiveInputs inputs;
  const AgentTrack& target = scene.tracks[query.target];
  const AgentState& at_t = target.states[query.t];
  inputs.anchor_position = at_t.position;
  inputs.anchor_velocity = mask.include_target_history ? at_t.velocity : Vec2{};

  inputs.target_history.resize(query.history);
  for (int k = 0; k < query.history; ++k) {
    if (mask.include_target_history) {
      inputs.target_history[k] = target.states[query.first_history_frame() + k];
    } else {
      inputs.target_history[k] = AgentState{at_t.position, {}, {}, true};
    }
  }

  for (size_t j = 0; j < adjacency.size(); ++j) {
    if (!adjacency[j]) continue;
    if (j < mask.neighbor_included.size() && !mask.neighbor_included[j]) continue;
    const AgentState& s = scene.tracks[j].states[query.t];
    inputs.neighbors.push_back(
        {scene.tracks[j].agent_id, false, s.position, s.velocity});
  }
  for (const auto& injected : mask.injected) {
    if (!injected.track.present_at(query.t)) continue;
    const AgentState& s = injected.track.states[query.t];
    inputs.neighbors.push_back({injected.track.agent_id, true, s.position, s.velocity});
  }
  return inputs;
}

std::vector<double> aggregate_edges(const std::vector<std::vector<double>>& edges,
                                    const AdjacencyRow& adjacency, size_t feature_dim) {
  std::vector<double> mean(feature_dim, 0.0);
  double count = 0.0;
  for (size_t j = 0; j < adjacency.size(); ++j) {
    if (!adjacency[j]) continue;
    for (size_t d = 0; d < feature_dim; ++d) mean[d] += edges[j][d];
    count += 1.0;
  }
  if (count > 0.0)
    for (double& v : mean) v /= count;
  return mean;
}

size_t ModelParams::parameter_count() const {
  return psi.size() + xi_w1.size() + xi_b1.size() + xi_w2.size() + xi_b2.size() + dec_w1.size() +
         dec_b1.size() + dec_w2.size() + dec_b2.size();
}

ModelParams zero_params(ModelDims dims, int history, int horizon, double radius) {
  ModelParams p;
  p.dims = dims;
  p.history = history;
  p.horizon = horizon;
  p.interaction_radius = radius;
  p.psi.assign(static_cast<size_t>(dims.d_f) * 2 * history, 0.0);
  p.xi_w1.assign(static_cast<size_t>(dims.d_e) * 4, 0.0);
  p.xi_b1.assign(dims.d_e, 0.0);
  p.xi_w2.assign(static_cast<size_t>(dims.d_f) * dims.d_e, 0.0);
  p.xi_b2.assign(dims.d_f, 0.0);
  p.dec_w1.assign(static_cast<size_t>(dims.d_dec) * 2 * dims.d_f, 0.0);
  p.dec_b1.assign(dims.d_dec, 0.0);
  p.dec_w2.assign(static_cast<size_t>(4 * horizon) * dims.d_dec, 0.0);
  p.dec_b2.assign(4 * horizon, 0.0);
  return p;
}

ModelParams init_params(ModelDims dims, int history, int horizon, double radius, uint64_t seed) {
  ModelParams p = zero_params(dims, history, horizon, radius);
  const RngStream root = RngStream::root(seed);
  uint64_t array_id = 0;
  auto fill = [&](std::vector<double>& w, int fan_in) {
    const RngStream s = root.sub(array_id++);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (size_t i = 0; i < w.size(); ++i) w[i] = scale * (2.0 * s.uniform(i) - 1.0);
  };
  fill(p.psi, 2 * history);
  fill(p.xi_w1, 4);
  fill(p.dec_w1, 2 * dims.d_f);
  // xi_w2 and the decoder output layer stay zero: the fresh model is exactly
  // the constant-velocity baseline and the edge pathway only grows when it
  // actually reduces the loss
  return p;
}

PredictiveDistribution ConstantVelocityPredictor::predict(const Scene& scene,
                                                          const PredictionQuery& query,
                                                          const FeatureMask& mask) const {
  const AdjacencyRow none(scene.n_max(), 0);
  const EffectiveInputs inputs = apply_mask(scene, query, none, mask);
  PredictiveDistribution dist;
  dist.steps.resize(query.horizon);
  const double var = std::max(sigma0_sq_, kVarianceFloor);
  for (int k = 0; k < query.horizon; ++k) {
    auto& step = dist.steps[k];
    step.weights = {1.0};
    step.means = {inputs.anchor_position + (k + 1) * scene.dt * inputs.anchor_velocity};
    step.variances = {{var, var}};
  }
  return dist;
}

namespace detail {

SocialTrace social_forward(const ModelParams& params, const EffectiveInputs& inputs, double dt) {
  const int d_f = params.dims.d_f;
  const int d_e = params.dims.d_e;
  const int d_dec = params.dims.d_dec;
  const int h = params.history;

  SocialTrace trace;
  trace.displacement.resize(2 * h);
  for (int k = 0; k < h; ++k) {
    trace.displacement[2 * k] = dt * inputs.target_history[k].velocity.x;
    trace.displacement[2 * k + 1] = dt * inputs.target_history[k].velocity.y;
  }
  trace.history_feature.resize(d_f);
  matvec(params.psi, trace.displacement.data(), d_f, 2 * h, trace.history_feature.data());

  trace.edges.reserve(inputs.neighbors.size());
  std::vector<std::vector<double>> edge_features;
  for (const auto& nb : inputs.neighbors) {
    EdgeTrace edge;
    const Vec2 rel_pos = nb.position - inputs.anchor_position;
    const Vec2 rel_vel = nb.velocity - inputs.anchor_velocity;
    edge.input = {rel_pos.x, rel_pos.y, rel_vel.x, rel_vel.y};
    edge.hidden.resize(d_e);
    matvec(params.xi_w1, edge.input.data(), d_e, 4, edge.hidden.data());
    for (int i = 0; i < d_e; ++i) edge.hidden[i] = std::tanh(edge.hidden[i] + params.xi_b1[i]);
    edge.feature.resize(d_f);
    matvec(params.xi_w2, edge.hidden.data(), d_f, d_e, edge.feature.data());
    for (int i = 0; i < d_f; ++i) edge.feature[i] += params.xi_b2[i];
    edge_features.push_back(edge.feature);
    trace.edges.push_back(std::move(edge));
  }
  trace.edge_mean = aggregate_edges(edge_features, AdjacencyRow(edge_features.size(), 1),
                                    static_cast<size_t>(d_f));

  trace.decoder_in.resize(2 * d_f);
  std::copy(trace.history_feature.begin(), trace.history_feature.end(), trace.decoder_in.begin());
  std::copy(trace.edge_mean.begin(), trace.edge_mean.end(), trace.decoder_in.begin() + d_f);

  trace.decoder_hidden.resize(d_dec);
  matvec(params.dec_w1, trace.decoder_in.data(), d_dec, 2 * d_f, trace.decoder_hidden.data());
  for (int i = 0; i < d_dec; ++i)
    trace.decoder_hidden[i] = std::tanh(trace.decoder_hidden[i] + params.dec_b1[i]);

  trace.decoder_out.resize(4 * params.horizon);
  matvec(params.dec_w2, trace.decoder_hidden.data(), 4 * params.horizon, d_dec,
         trace.decoder_out.data());
  for (int i = 0; i < 4 * params.horizon; ++i) trace.decoder_out[i] += params.dec_b2[i];

  trace.cv_means.resize(params.horizon);
  for (int k = 0; k < params.horizon; ++k)
    trace.cv_means[k] = inputs.anchor_position + (k + 1) * dt * inputs.anchor_velocity;
  return trace;
}

PredictiveDistribution trace_to_distribution(const ModelParams& params, const SocialTrace& trace) {
  PredictiveDistribution dist;
  dist.steps.resize(params.horizon);
  for (int k = 0; k < params.horizon; ++k) {
    auto& step = dist.steps[k];
    const double* o = trace.decoder_out.data() + 4 * k;
    step.weights = {1.0};
    step.means = {trace.cv_means[k] + Vec2{o[0], o[1]}};
    step.variances = {{std::max(std::exp(o[2]), kVarianceFloor),
                       std::max(std::exp(o[3]), kVarianceFloor)}};
  }
  return dist;
}

}  // namespace detail

SocialPredictor::SocialPredictor(ModelParams params) : params_(std::move(params)) {}

PredictiveDistribution SocialPredictor::predict(const Scene& scene, const PredictionQuery& query,
                                                const FeatureMask& mask) const {
  if (query.history != params_.history || query.horizon != params_.horizon)
    throw Error("query window (h=" + std::to_string(query.history) + ", horizon=" +
                std::to_string(query.horizon) + ") does not match checkpoint (h=" +
                std::to_string(params_.history) + ", horizon=" + std::to_string(params_.horizon) +
                ")");
  const AdjacencyRow adjacency = neighbors_of(scene, query, params_.interaction_radius);
  const EffectiveInputs inputs = apply_mask(scene, query, adjacency, mask);
  const detail::SocialTrace trace = detail::social_forward(params_, inputs, scene.dt);
  return detail::trace_to_distribution(params_, trace);
}

namespace {

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_social_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["model"] = "social";
  j["dims"] = {{"d_f", params.dims.d_f}, {"d_e", params.dims.d_e}, {"d_dec", params.dims.d_dec}};
  j["history"] = params.history;
  j["horizon"] = params.horizon;
  j["interaction_radius"] = params.interaction_radius;
  j["weights"] = {{"psi", params.psi},       {"xi_w1", params.xi_w1}, {"xi_b1", params.xi_b1},
                  {"xi_w2", params.xi_w2},   {"xi_b2", params.xi_b2}, {"dec_w1", params.dec_w1},
                  {"dec_b1", params.dec_b1}, {"dec_w2", params.dec_w2}, {"dec_b2", params.dec_b2}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

void save_cv_checkpoint(const std::filesystem::path& path, double sigma0_sq) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["model"] = "constant_velocity";
  j["sigma0_sq"] = sigma0_sq;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

std::unique_ptr<Predictor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format_version").get<int>() != kCheckpointVersion)
    throw Error("unsupported checkpoint format_version");
  const std::string model = j.at("model").get<std::string>();
  if (model == "constant_velocity")
    return std::make_unique<ConstantVelocityPredictor>(j.at("sigma0_sq").get<double>());
  if (model != "social") throw Error("unknown model kind in checkpoint: " + model);

  ModelParams p;
  p.dims.d_f = j.at("dims").at("d_f").get<int>();
  p.dims.d_e = j.at("dims").at("d_e").get<int>();
  p.dims.d_dec = j.at("dims").at("d_dec").get<int>();
  p.history = j.at("history").get<int>();
  p.horizon = j.at("horizon").get<int>();
  p.interaction_radius = j.at("interaction_radius").get<double>();
  const auto& w = j.at("weights");
  auto read = [&](const char* key, std::vector<double>& dst, size_t expected) {
    dst = w.at(key).get<std::vector<double>>();
    if (dst.size() != expected)
      throw Error(std::string("checkpoint weight array ") + key + " has wrong size");
  };
  const ModelParams shape = zero_params(p.dims, p.history, p.horizon, p.interaction_radius);
  read("psi", p.psi, shape.psi.size());
  read("xi_w1", p.xi_w1, shape.xi_w1.size());
  read("xi_b1", p.xi_b1, shape.xi_b1.size());
  read("xi_w2", p.xi_w2, shape.xi_w2.size());
  read("xi_b2", p.xi_b2, shape.xi_b2.size());
  read("dec_w1", p.dec_w1, shape.dec_w1.size());
  read("dec_b1", p.dec_b1, shape.dec_b1.size());
  read("dec_w2", p.dec_w2, shape.dec_w2.size());
  read("dec_b2", p.dec_b2, shape.dec_b2.size());
  return std::make_unique<SocialPredictor>(std::move(p));
}

}  // namespace trajshap
