#include "cascadegp/cli.hpp"
#include "cascadegp/config.hpp"
#include "cascadegp/error.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cascadegp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "cascadegp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cascadegp_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

int count_lines(const fs::path& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

const char* kSmall = R"([dataset]
dof = 2
duration = 20
seed = 3
n_subsets = 2
test_fraction = 0.2

[variant]
names = NP, SP-Inward-Cascaded

[gp]
restarts = 1
max_iterations = 100

[experiment]
durations = 1, 3
n_points = 30
iter_restarts = 1

[sim]
trajectory_duration = 1
)";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults and overrides") {
  const auto c = cfg::Config::parse("[gp]\nrestarts = 3\nard = false\n[experiment]\ndurations = 1, 2.5 4\n");
  CHECK(c.gp.restarts == 3);
  CHECK(!c.gp.ard);
  CHECK(c.experiment.durations == std::vector<double>{1.0, 2.5, 4.0});
  CHECK(c.gp.grad_tol == 1e-5);
  CHECK(c.gp.objective_change_tol == 2e-9);
  CHECK(c.dataset.dof == 6);
  CHECK(c.learner().gp.restarts == 3);
  CHECK(cfg::Config::parse(c.canonical()).canonical() == c.canonical());
  CHECK(cfg::Config::parse(c.canonical()).hash() == c.hash());
  CHECK(cfg::Config{}.hash() != c.hash());
}

TEST_CASE("variants pick up the history length") {
  const auto c = cfg::Config::parse("[variant]\nnames = NP-DF, SP\nhistory = 3\n");
  const auto v = c.variants();
  REQUIRE(v.size() == 2);
  CHECK(feat::history_length(v[0].mode) == 3);
  CHECK(!v[1].derivative_free());
}

TEST_CASE("errors name the key") {
  try {
    cfg::Config::parse("[gp]\nrestartz = 3\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("restartz") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg::Config::parse("[bogus]\nx = 1\n"), Error);
  CHECK_THROWS_AS(cfg::Config::parse("[gp]\nrestarts = many\n"), Error);
  CHECK_THROWS_AS(cfg::Config::parse("[gp]\nrestarts = 0\n"), Error);
  CHECK_THROWS_AS(cfg::Config::parse("[variant]\nnames = QP\n"), Error);
  CHECK_THROWS_AS(cfg::Config::parse("[dataset]\ntest_fraction = 0\n"), Error);
}

TEST_CASE("output root from the environment") {
  ::setenv(cfg::kOutputRootVariable, "/tmp/somewhere", 1);
  CHECK(cfg::resolve_output("res") == fs::path("/tmp/somewhere/res"));
  CHECK(cfg::resolve_output("/abs/res") == fs::path("/abs/res"));
  ::unsetenv(cfg::kOutputRootVariable);
  CHECK(cfg::resolve_output("res") == fs::current_path() / "res");
}

}

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  const auto unknown = run({"curve", "--frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({"eval", "--config", "/nonexistent.ini", "--model", "x"}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const auto dir = scratch("badkey");
  const auto bad = run({"curve", "--config", write(dir / "c.ini", "[gp]\nwibble = 1\n").string(), "--out", dir.string()});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("wibble") != std::string::npos);
}

TEST_CASE("gen, train, eval, curve, iters, corr and sim") {
  const auto dir = scratch("flow");
  const auto config = write(dir / "c.ini", kSmall).string();
  const std::string out = dir.string();

  REQUIRE(run({"gen", "-c", config, "-o", out}).code == 0);
  CHECK(fs::exists(dir / "dataset.csv"));
  CHECK(fs::exists(dir / "chain.ini"));

  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest_gen.json"));
  CHECK(manifest["format"] == "cascadegp-run/1");
  CHECK(manifest["config_hash"] == cfg::Config::load(config).hash());
  CHECK(!manifest["dataset_fingerprint"].get<std::string>().empty());

  REQUIRE(run({"train", "-c", config, "-o", out, "--variant", "SP-Inward-Cascaded"}).code == 0);
  CHECK(fs::exists(dir / "model_SP-Inward-Cascaded" / "manifest.json"));
  const auto eval = run({"eval", "-c", config, "-o", out, "--model", (dir / "model_SP-Inward-Cascaded").string()});
  REQUIRE(eval.code == 0);
  CHECK(count_lines(dir / "eval_SP-Inward-Cascaded.csv") == 2 + 2);

  REQUIRE(run({"curve", "-c", config, "-o", out}).code == 0);
  CHECK(fs::exists(dir / "curve_NP.csv"));
  CHECK(fs::exists(dir / "curve_SP-Inward-Cascaded.csv"));
  CHECK(count_lines(dir / "curve_NP.csv") == 2 + 2 * 2 * 2);
  CHECK(fs::exists(dir / "summary_NP.csv"));

  REQUIRE(run({"iters", "-c", config, "-o", out}).code == 0);
  CHECK(count_lines(dir / "iterations.csv") == 2 + 4);

  REQUIRE(run({"corr", "--data", (dir / "dataset.csv").string(), "-o", out}).code == 0);
  CHECK(count_lines(dir / "corr.csv") == 2 + 8);

  REQUIRE(run({"sim", "-c", config, "-o", out}).code == 0);
  CHECK(count_lines(dir / "sim_trace.csv") == 2 + 1001);
  CHECK(count_lines(dir / "sim_summary.csv") == 2 + 2);
  fs::remove_all(dir);
}

TEST_CASE("corr on a sarcos-format file") {
  const auto dir = scratch("corr");
  std::ostringstream rows;
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 28; ++c) rows << (c ? " " : "") << std::sin(0.1 * r * (c + 1));
    rows << "\n";
  }
  const auto file = write(dir / "sarcos.txt", rows.str());
  REQUIRE(run({"corr", "--data", file.string(), "-o", dir.string()}).code == 0);
  CHECK(count_lines(dir / "corr.csv") == 2 + 28);
  std::ifstream in(dir / "corr.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 28);
  fs::remove_all(dir);
}

}
