#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "trajshap/attribution.hpp"

using namespace trajshap;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

const fs::path kScratch = TRAJSHAP_CLI_SCRATCH;

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  fs::create_directories(kScratch);
  const fs::path out = kScratch / "stdout.txt";
  const fs::path err = kScratch / "stderr.txt";
  const std::string cmd = std::string(TRAJSHAP_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

// byte map of every regular file under a directory
std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  return files;
}

std::string small_synth_args(const fs::path& dir, const std::string& extra = "") {
  return "synth --out " + dir.string() +
         " --scenes 4 --agents 4 --steps 16 --radius 4.0 --seed-synth 11 " + extra;
}

}  // namespace

TEST_CASE("unknown flag exits 1 with a one-line diagnostic") {
  const CliResult r = run_cli("synth --no-such-flag");
  CHECK(r.exit_code == 1);
  CHECK(!r.err.empty());
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(r.err.find("--no-such-flag") != std::string::npos);
}

TEST_CASE("missing subcommand exits 1") {
  CHECK(run_cli("").exit_code == 1);
}

TEST_CASE("missing manifest is a data error") {
  const CliResult r = run_cli("eval --manifest /nonexistent/manifest.json --checkpoint x.json");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("manifest") != std::string::npos);
}

TEST_CASE("synth is byte-identical across reruns and workers") {
  const fs::path dir = kScratch / "synth_rerun";
  fs::remove_all(dir);
  REQUIRE(run_cli(small_synth_args(dir)).exit_code == 0);
  const auto first = dir_bytes(dir);
  fs::remove_all(dir);
  REQUIRE(run_cli(small_synth_args(dir, "--workers 3")).exit_code == 0);
  CHECK(!first.empty());
  CHECK(first.count("manifest.json") == 1);
  CHECK(first.count("labels.json") == 1);
  CHECK(first == dir_bytes(dir));
}

TEST_CASE("synth from a config file is reproducible and flags override it") {
  const fs::path dir = kScratch / "synth_cfg";
  fs::remove_all(dir);
  fs::create_directories(kScratch);
  const fs::path cfg = kScratch / "synth_cfg.json";
  std::ofstream(cfg) << R"({
    "out_dir": ")" << dir.string() << R"(",
    "radius": 4.0,
    "seeds": {"synth": 77},
    "synth": {"num_scenes": 3, "agents_per_scene": 4, "steps": 16, "interactive": false}
  })";
  REQUIRE(run_cli("synth --config " + cfg.string()).exit_code == 0);
  const auto first = dir_bytes(dir);
  CHECK(first.count("scene_0002.txt") == 1);
  fs::remove_all(dir);
  REQUIRE(run_cli("synth --config " + cfg.string()).exit_code == 0);
  CHECK(first == dir_bytes(dir));

  // a flag override must change the output
  fs::remove_all(dir);
  REQUIRE(run_cli("synth --config " + cfg.string() + " --seed-synth 78").exit_code == 0);
  CHECK(first != dir_bytes(dir));
}

TEST_CASE("constant-velocity checkpoint attributes zero to every neighbor") {
  const fs::path dir = kScratch / "cv_run";
  fs::remove_all(dir);
  REQUIRE(run_cli(small_synth_args(dir)).exit_code == 0);
  const fs::path ckpt = dir / "cv.json";
  REQUIRE(run_cli("train --model cv --checkpoint " + ckpt.string() + " --out " + dir.string())
              .exit_code == 0);
  const CliResult r = run_cli("attribute --manifest " + (dir / "manifest.json").string() +
                              " --checkpoint " + ckpt.string() + " --out " + dir.string() +
                              " --history 4 --horizon 5 --stride 4 --radius 4.0 --loss NLL");
  REQUIRE(r.exit_code == 0);

  std::ifstream in(dir / "attributions.jsonl");
  std::string line;
  size_t lines = 0, neighbor_features = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++lines;
    const LocalAttribution local = attribution_from_json(line);
    for (size_t k = 0; k < local.features.size(); ++k)
      if (local.features[k].kind != FeatureKind::history) {
        ++neighbor_features;
        CHECK(local.phi[k] == 0.0);
      }
  }
  CHECK(lines > 0);
  CHECK(neighbor_features > 0);
}

TEST_CASE("attribute, aggregate and compare round trip deterministically") {
  const fs::path dir = kScratch / "flow";
  fs::remove_all(dir);
  REQUIRE(run_cli(small_synth_args(dir)).exit_code == 0);
  const std::string window = " --history 4 --horizon 5 --stride 4 --radius 4.0 ";
  const fs::path ckpt = dir / "model.json";
  REQUIRE(run_cli("train --manifest " + (dir / "manifest.json").string() + " --checkpoint " +
                  ckpt.string() + " --out " + dir.string() + window +
                  "--epochs 2 --seed-train 3")
              .exit_code == 0);

  const std::string attribute_args = "attribute --manifest " + (dir / "manifest.json").string() +
                                     " --checkpoint " + ckpt.string() + window + "--loss NLL";
  REQUIRE(run_cli(attribute_args + " --out " + (dir / "r1").string()).exit_code == 0);
  REQUIRE(run_cli(attribute_args + " --out " + (dir / "r2").string() + " --workers 2").exit_code ==
          0);
  CHECK(slurp(dir / "r1" / "attributions.jsonl") == slurp(dir / "r2" / "attributions.jsonl"));

  REQUIRE(run_cli("aggregate --input " + (dir / "r1" / "attributions.jsonl").string() + " --out " +
                  (dir / "agg").string() + " --svg report.svg")
              .exit_code == 0);
  CHECK(fs::exists(dir / "agg" / "report.json"));
  CHECK(fs::exists(dir / "agg" / "report.svg"));

  const CliResult cmp = run_cli("compare --a " + (dir / "agg" / "report.json").string() + " --b " +
                                (dir / "agg" / "report.json").string() + " --out " +
                                (dir / "cmp").string());
  REQUIRE(cmp.exit_code == 0);
  const std::string csv = slurp(dir / "cmp" / "comparison.csv");
  CHECK(csv.find("metric,a,b,diff") == 0);
  CHECK(csv.find("phi_history") != std::string::npos);
}

TEST_CASE("eval writes the diff table") {
  const fs::path dir = kScratch / "eval_run";
  fs::remove_all(dir);
  REQUIRE(run_cli(small_synth_args(dir)).exit_code == 0);
  const fs::path ckpt = dir / "cv.json";
  REQUIRE(run_cli("train --model cv --checkpoint " + ckpt.string() + " --out " + dir.string())
              .exit_code == 0);
  const CliResult r = run_cli("eval --manifest " + (dir / "manifest.json").string() +
                              " --checkpoint " + ckpt.string() + " --out " + dir.string() +
                              " --history 4 --horizon 5 --stride 4");
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(dir / "diff_table.csv");
  CHECK(csv.find("loss,with,without,diff\n") == 0);
  CHECK(csv.find("minADE") != std::string::npos);
  CHECK(csv.find("NLL") != std::string::npos);
}

TEST_SUITE_END();
