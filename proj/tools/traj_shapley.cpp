// traj-shapley: generate synthetic corpora, train reference predictors, and
// attribute model performance to input features with baseline Shapley values.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajshap/aggregate.hpp"
#include "trajshap/attribution.hpp"
#include "trajshap/errors.hpp"
#include "trajshap/metrics.hpp"
#include "trajshap/predictor.hpp"
#include "trajshap/scene_io.hpp"
#include "trajshap/synth.hpp"
#include "trajshap/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajshap;

namespace {

struct RunConfig {
  std::string out_dir = "out";
  std::string manifest;
  std::string checkpoint;
  int n_max = 8;
  int h = 6;
  int horizon = 8;
  int stride = 5;
  double radius = 4.0;
  std::string loss = "NLL";
  int k_samples = 20;
  std::string method = "exact";
  int permutations = 2000;
  int replacements = 10;
  int exact_cap = 12;
  int inject_count = 1;
  int workers = 1;

  uint64_t seed_synth = 1;
  uint64_t seed_train = 2;
  uint64_t seed_metric = 3;
  uint64_t seed_attribution = 4;
  uint64_t seed_injection = 5;
  uint64_t seed_marginal = 6;

  int synth_num_scenes = 80;
  int synth_agents = 8;
  int synth_steps = 28;
  double synth_dt = 0.4;
  double synth_goal_gain = 0.3;
  double synth_repulsion = 3.0;
  double synth_noise = 0.05;
  bool synth_interactive = true;

  std::string train_model = "social";
  double learning_rate = 0.02;
  int epochs = 60;
  int batch_size = 64;
  int train_stride = 1;
  int d_f = 16;
  int d_e = 32;
  int d_dec = 32;
  double sigma0_sq = 1.0;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void config_from_json(const json& j, RunConfig& cfg) {
  maybe(j, "out_dir", cfg.out_dir);
  maybe(j, "manifest", cfg.manifest);
  maybe(j, "checkpoint", cfg.checkpoint);
  maybe(j, "n_max", cfg.n_max);
  maybe(j, "h", cfg.h);
  maybe(j, "horizon", cfg.horizon);
  maybe(j, "stride", cfg.stride);
  maybe(j, "radius", cfg.radius);
  maybe(j, "loss", cfg.loss);
  maybe(j, "k_samples", cfg.k_samples);
  maybe(j, "method", cfg.method);
  maybe(j, "permutations", cfg.permutations);
  maybe(j, "replacements", cfg.replacements);
  maybe(j, "exact_cap", cfg.exact_cap);
  maybe(j, "inject_count", cfg.inject_count);
  maybe(j, "workers", cfg.workers);
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    maybe(s, "synth", cfg.seed_synth);
    maybe(s, "train", cfg.seed_train);
    maybe(s, "metric", cfg.seed_metric);
    maybe(s, "attribution", cfg.seed_attribution);
    maybe(s, "injection", cfg.seed_injection);
    maybe(s, "marginal", cfg.seed_marginal);
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    maybe(s, "num_scenes", cfg.synth_num_scenes);
    maybe(s, "agents_per_scene", cfg.synth_agents);
    maybe(s, "steps", cfg.synth_steps);
    maybe(s, "dt", cfg.synth_dt);
    maybe(s, "goal_gain", cfg.synth_goal_gain);
    maybe(s, "repulsion_gain", cfg.synth_repulsion);
    maybe(s, "noise_std", cfg.synth_noise);
    maybe(s, "interactive", cfg.synth_interactive);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    maybe(t, "model", cfg.train_model);
    maybe(t, "learning_rate", cfg.learning_rate);
    maybe(t, "epochs", cfg.epochs);
    maybe(t, "batch_size", cfg.batch_size);
    maybe(t, "stride", cfg.train_stride);
    maybe(t, "d_f", cfg.d_f);
    maybe(t, "d_e", cfg.d_e);
    maybe(t, "d_dec", cfg.d_dec);
    maybe(t, "sigma0_sq", cfg.sigma0_sq);
  }
}

// Everything that determines the outputs; `workers` only schedules work, so it
// is deliberately left out to keep reruns byte-comparable across settings.
json resolved_json(const RunConfig& cfg) {
  json j;
  j["out_dir"] = cfg.out_dir;
  j["manifest"] = cfg.manifest;
  j["checkpoint"] = cfg.checkpoint;
  j["n_max"] = cfg.n_max;
  j["h"] = cfg.h;
  j["horizon"] = cfg.horizon;
  j["stride"] = cfg.stride;
  j["radius"] = cfg.radius;
  j["loss"] = cfg.loss;
  j["k_samples"] = cfg.k_samples;
  j["method"] = cfg.method;
  j["permutations"] = cfg.permutations;
  j["replacements"] = cfg.replacements;
  j["exact_cap"] = cfg.exact_cap;
  j["inject_count"] = cfg.inject_count;
  j["seeds"] = {{"synth", cfg.seed_synth},           {"train", cfg.seed_train},
                {"metric", cfg.seed_metric},         {"attribution", cfg.seed_attribution},
                {"injection", cfg.seed_injection},   {"marginal", cfg.seed_marginal}};
  j["synth"] = {{"num_scenes", cfg.synth_num_scenes},
                {"agents_per_scene", cfg.synth_agents},
                {"steps", cfg.synth_steps},
                {"dt", cfg.synth_dt},
                {"goal_gain", cfg.synth_goal_gain},
                {"repulsion_gain", cfg.synth_repulsion},
                {"noise_std", cfg.synth_noise},
                {"interactive", cfg.synth_interactive}};
  j["train"] = {{"model", cfg.train_model},   {"learning_rate", cfg.learning_rate},
                {"epochs", cfg.epochs},       {"batch_size", cfg.batch_size},
                {"stride", cfg.train_stride}, {"d_f", cfg.d_f},
                {"d_e", cfg.d_e},             {"d_dec", cfg.d_dec},
                {"sigma0_sq", cfg.sigma0_sq}};
  return j;
}

void echo_config(const RunConfig& cfg) {
  const std::string text = resolved_json(cfg).dump(2) + "\n";
  fs::create_directories(cfg.out_dir);
  std::ofstream out(fs::path(cfg.out_dir) / "run_config.json", std::ios::binary);
  out << text;
  std::cout << text;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::unique_ptr<Predictor> load_model(const RunConfig& cfg) {
  auto predictor = load_checkpoint(cfg.checkpoint);
  if (predictor->kind() == "social") {
    const auto& params = dynamic_cast<const SocialPredictor&>(*predictor).params();
    if (params.history != cfg.h || params.horizon != cfg.horizon)
      throw Error("config window (h=" + std::to_string(cfg.h) + ", horizon=" +
                  std::to_string(cfg.horizon) + ") does not match checkpoint (h=" +
                  std::to_string(params.history) + ", horizon=" + std::to_string(params.horizon) +
                  ")");
    if (params.interaction_radius != cfg.radius)
      throw Error("config radius " + std::to_string(cfg.radius) +
                  " does not match checkpoint radius " +
                  std::to_string(params.interaction_radius));
  }
  return predictor;
}

int cmd_synth(const RunConfig& cfg) {
  SynthConfig synth;
  synth.num_scenes = cfg.synth_num_scenes;
  synth.agents_per_scene = cfg.synth_agents;
  synth.steps = cfg.synth_steps;
  synth.dt = cfg.synth_dt;
  synth.goal_gain = cfg.synth_goal_gain;
  synth.repulsion_gain = cfg.synth_repulsion;
  synth.interaction_radius = cfg.radius;
  synth.noise_std = cfg.synth_noise;
  synth.seed = cfg.seed_synth;

  echo_config(cfg);
  auto [dataset, labels] = generate_dataset(synth, cfg.synth_interactive, cfg.workers);
  if (cfg.n_max > dataset.n_max) {
    for (Scene& scene : dataset.scenes) {
      for (int j = scene.n_max(); j < cfg.n_max; ++j) {
        AgentTrack dummy;
        dummy.states.resize(scene.num_frames());
        scene.tracks.push_back(std::move(dummy));
      }
    }
    dataset.n_max = cfg.n_max;
  }
  save_dataset(dataset, cfg.out_dir);
  save_labels(labels, dataset, fs::path(cfg.out_dir) / "labels.json");
  std::cout << "wrote " << dataset.scenes.size() << " scenes to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  echo_config(cfg);
  if (cfg.train_model == "cv") {
    save_cv_checkpoint(cfg.checkpoint, cfg.sigma0_sq);
    std::cout << "wrote constant-velocity checkpoint to " << cfg.checkpoint << "\n";
    return 0;
  }
  if (cfg.train_model != "social") throw Error("unknown train model: " + cfg.train_model);

  const Dataset dataset = load_dataset(cfg.manifest);
  ModelParams params =
      init_params({cfg.d_f, cfg.d_e, cfg.d_dec}, cfg.h, cfg.horizon, cfg.radius, cfg.seed_train);
  TrainOptions options;
  options.learning_rate = cfg.learning_rate;
  options.epochs = cfg.epochs;
  options.batch_size = cfg.batch_size;
  options.seed = cfg.seed_train;
  options.stride = cfg.train_stride;
  options.workers = cfg.workers;
  params = train(std::move(params), dataset, options);
  save_social_checkpoint(cfg.checkpoint, params);

  const auto queries = enumerate_queries(dataset, cfg.h, cfg.horizon, cfg.train_stride);
  std::cout << "final training NLL " << nll_loss(params, dataset, queries, cfg.workers) << " over "
            << queries.size() << " queries\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  echo_config(cfg);
  const Dataset dataset = load_dataset(cfg.manifest);
  const auto predictor = load_model(cfg);
  const auto queries = enumerate_queries(dataset, cfg.h, cfg.horizon, cfg.stride);
  if (queries.empty()) throw Error("no valid queries in the dataset");
  const std::vector<MetricKind> losses{MetricKind::min_ade, MetricKind::min_fde, MetricKind::nll};
  const auto table = interaction_diff_table(*predictor, dataset, queries, losses, cfg.k_samples,
                                            cfg.seed_metric, cfg.workers);
  const std::string csv = diff_table_csv(table);
  write_file(fs::path(cfg.out_dir) / "diff_table.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_attribute(const RunConfig& cfg, bool inject, const std::string& output_name) {
  echo_config(cfg);
  const Dataset dataset = load_dataset(cfg.manifest);
  const auto predictor = load_model(cfg);
  const auto queries = enumerate_queries(dataset, cfg.h, cfg.horizon, cfg.stride);
  if (queries.empty()) throw Error("no valid queries in the dataset");

  AttributionOptions options;
  options.metric = {metric_from_name(cfg.loss), cfg.k_samples, cfg.seed_metric};
  options.exact_cap = cfg.exact_cap;
  options.workers = cfg.workers;

  std::ofstream out(fs::path(cfg.out_dir) / output_name, std::ios::binary);
  if (!out) throw Error("cannot write " + output_name);
  size_t count = 0;
  for (const auto& query : queries) {
    FeatureSpec spec = build_feature_spec(dataset.scenes[query.scene_index], query, cfg.radius);
    if (inject)
      spec = inject_random_agents(dataset, spec, dataset, cfg.inject_count, cfg.radius,
                                  cfg.seed_injection);
    LocalAttribution local;
    if (cfg.method == "marginal") {
      local = attribute_marginal(*predictor, dataset, spec, dataset, cfg.replacements,
                                 cfg.seed_marginal, options);
    } else if (cfg.method == "permutation" ||
               (cfg.method == "exact" && spec.size() > cfg.exact_cap)) {
      // past the exact cap sampling is forced
      local = attribute_sampled(*predictor, dataset, spec, cfg.permutations, cfg.seed_attribution,
                                options);
    } else if (cfg.method == "exact") {
      local = attribute_exact(*predictor, dataset, spec, options);
    } else {
      throw Error("unknown attribution method: " + cfg.method);
    }
    out << attribution_to_json(local) << "\n";
    ++count;
  }
  std::cout << "wrote " << count << " attributions to " << output_name << "\n";
  return 0;
}

std::vector<LocalAttribution> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open attributions: " + path.string());
  std::vector<LocalAttribution> locals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    locals.push_back(attribution_from_json(line));
  }
  return locals;
}

int cmd_aggregate(const RunConfig& cfg, const std::string& input, const std::string& svg) {
  echo_config(cfg);
  const auto locals = read_jsonl(fs::path(input));
  const GlobalReport report = aggregate(locals);
  write_file(fs::path(cfg.out_dir) / "report.json", report_to_json(report));
  if (!svg.empty()) write_file(fs::path(cfg.out_dir) / svg, render_scores_svg({{"model", report}}));
  std::cout << "phi_history " << report.phi_history << "\n";
  std::cout << "social_interaction_score " << report.social_interaction_score << " over "
            << report.num_queries_with_neighbors << " queries\n";
  if (report.random_agent_score)
    std::cout << "random_agent_score " << *report.random_agent_score << " over "
              << report.num_queries_with_injected << " queries\n";
  return 0;
}

int cmd_compare(const RunConfig& cfg, const std::string& a_path, const std::string& b_path,
                const std::string& svg) {
  echo_config(cfg);
  auto read_report = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open report: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return report_from_json(text);
  };
  const GlobalReport a = read_report(a_path);
  const GlobalReport b = read_report(b_path);
  const std::string csv = comparison_csv(compare_reports(a, b));
  write_file(fs::path(cfg.out_dir) / "comparison.csv", csv);
  if (!svg.empty())
    write_file(fs::path(cfg.out_dir) / svg,
               render_scores_svg({{fs::path(a_path).stem().string(), a},
                                  {fs::path(b_path).stem().string(), b}}));
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // The config file loads first so explicit flags override it.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) {
        std::cerr << "error: cannot open config file " << argv[i + 1] << "\n";
        return 2;
      }
      try {
        config_from_json(json::parse(in), cfg);
      } catch (const std::exception& e) {
        std::cerr << "error: bad config file: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"Shapley-value feature attribution for trajectory prediction models"};
  app.require_subcommand(1);
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--workers", cfg.workers, "parallel workers (scheduling only)")
        ->check(CLI::Range(1, 256));
  };
  auto add_window = [&](CLI::App* sub) {
    sub->add_option("--history", cfg.h, "history length in frames")->check(CLI::Range(1, 1000));
    sub->add_option("--horizon", cfg.horizon, "prediction horizon in frames")
        ->check(CLI::Range(1, 1000));
    sub->add_option("--stride", cfg.stride, "query stride in frames")->check(CLI::Range(1, 1000));
    sub->add_option("--radius", cfg.radius, "neighbor radius in meters")
        ->check(CLI::PositiveNumber);
  };
  auto add_metric = [&](CLI::App* sub) {
    sub->add_option("--loss", cfg.loss, "loss kind: minADE, minFDE, or NLL");
    sub->add_option("--k-samples", cfg.k_samples, "samples for the min-of-K metrics")
        ->check(CLI::Range(1, 100000));
    sub->add_option("--seed-metric", cfg.seed_metric, "metric sampling seed");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus with labels");
  add_common(synth);
  synth->add_option("--scenes", cfg.synth_num_scenes, "number of scenes")->check(CLI::Range(1, 1000000));
  synth->add_option("--agents", cfg.synth_agents, "agents per scene")->check(CLI::Range(1, 1000));
  synth->add_option("--steps", cfg.synth_steps, "frames per scene")->check(CLI::Range(2, 100000));
  synth->add_option("--radius", cfg.radius, "interaction radius in meters")->check(CLI::PositiveNumber);
  synth->add_option("--interactive", cfg.synth_interactive, "enable agent repulsion");
  synth->add_option("--seed-synth", cfg.seed_synth, "generation seed");
  synth->add_option("--n-max", cfg.n_max, "pad scenes to this many tracks")->check(CLI::Range(1, 10000));

  CLI::App* train_cmd = app.add_subcommand("train", "fit the social model, write a checkpoint");
  add_common(train_cmd);
  add_window(train_cmd);
  train_cmd->add_option("--manifest", cfg.manifest, "dataset manifest");
  train_cmd->add_option("--checkpoint", cfg.checkpoint, "checkpoint path to write");
  train_cmd->add_option("--model", cfg.train_model, "social or cv");
  train_cmd->add_option("--epochs", cfg.epochs, "training epochs")->check(CLI::Range(0, 1000000));
  train_cmd->add_option("--lr", cfg.learning_rate, "learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", cfg.batch_size, "batch size")->check(CLI::Range(1, 1000000));
  train_cmd->add_option("--seed-train", cfg.seed_train, "init and shuffle seed");

  CLI::App* eval_cmd = app.add_subcommand("eval", "interaction diff table over a dataset");
  add_common(eval_cmd);
  add_window(eval_cmd);
  add_metric(eval_cmd);
  eval_cmd->add_option("--manifest", cfg.manifest, "dataset manifest");
  eval_cmd->add_option("--checkpoint", cfg.checkpoint, "model checkpoint");

  std::string output_name;
  auto add_attr = [&](CLI::App* sub) {
    add_common(sub);
    add_window(sub);
    add_metric(sub);
    sub->add_option("--manifest", cfg.manifest, "dataset manifest");
    sub->add_option("--checkpoint", cfg.checkpoint, "model checkpoint");
    sub->add_option("--method", cfg.method, "exact, permutation, or marginal");
    sub->add_option("--permutations", cfg.permutations, "sampler permutations")
        ->check(CLI::Range(1, 10000000));
    sub->add_option("--replacements", cfg.replacements, "marginal replacement draws")
        ->check(CLI::Range(1, 100000));
    sub->add_option("--exact-cap", cfg.exact_cap, "max features for exact enumeration")
        ->check(CLI::Range(1, 18));
    sub->add_option("--seed-attribution", cfg.seed_attribution, "permutation sampler seed");
    sub->add_option("--seed-marginal", cfg.seed_marginal, "marginal replacement seed");
    sub->add_option("--output", output_name, "output file name inside --out");
  };
  CLI::App* attribute_cmd = app.add_subcommand("attribute", "per-query Shapley attributions");
  add_attr(attribute_cmd);
  CLI::App* robustness_cmd =
      app.add_subcommand("robustness", "attributions with injected random agents");
  add_attr(robustness_cmd);
  robustness_cmd->add_option("--inject-count", cfg.inject_count, "random agents per query")
      ->check(CLI::Range(1, 64));
  robustness_cmd->add_option("--seed-injection", cfg.seed_injection, "injection seed");

  std::string input_path, svg_name, a_path, b_path;
  CLI::App* aggregate_cmd = app.add_subcommand("aggregate", "dataset-level report from attributions");
  add_common(aggregate_cmd);
  aggregate_cmd->add_option("--input", input_path, "attributions .jsonl file")->required();
  aggregate_cmd->add_option("--svg", svg_name, "also write a bar chart with this file name");

  CLI::App* compare_cmd = app.add_subcommand("compare", "compare two aggregated reports");
  add_common(compare_cmd);
  compare_cmd->add_option("--a", a_path, "first report.json")->required();
  compare_cmd->add_option("--b", b_path, "second report.json")->required();
  compare_cmd->add_option("--svg", svg_name, "also write a bar chart with this file name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (synth->parsed()) {
      if (cfg.synth_steps < cfg.h + cfg.horizon) {
        std::cerr << "error: --steps must be at least h + horizon\n";
        return 1;
      }
      return cmd_synth(cfg);
    }
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (attribute_cmd->parsed())
      return cmd_attribute(cfg, false, output_name.empty() ? "attributions.jsonl" : output_name);
    if (robustness_cmd->parsed())
      return cmd_attribute(cfg, true, output_name.empty() ? "robustness.jsonl" : output_name);
    if (aggregate_cmd->parsed()) return cmd_aggregate(cfg, input_path, svg_name);
    if (compare_cmd->parsed()) return cmd_compare(cfg, a_path, b_path, svg_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
