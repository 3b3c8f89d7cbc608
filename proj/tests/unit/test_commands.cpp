#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curverl/cli/commands.hpp"
#include "curverl/cli/verify.hpp"
#include "curverl/csv.hpp"

using namespace curverl;
using namespace curverl::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("curverl_cmd_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.population.size = 60;
  cfg.population.seed = 4;
  cfg.train.batch_size = 32;
  cfg.train.steps = 12;
  cfg.train.min_window_count = 16;
  cfg.eval.rollouts = 32;
  cfg.eval.k_values = {1, 4, 16};
  cfg.eval.resamples = 200;
  cfg.output_dir = out.string();
  return cfg;
}

int run_binary(const std::string& args) {
  const char* bin = std::getenv("CURVERL_BIN");
  if (!bin) return -1;
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("train writes its artifacts", "[commands]") {
  const auto dir = scratch("train");
  auto cfg = small_config(dir / "run");
  cfg.train.steps = 2;
  cfg.per_prompt_log = true;
  std::ostringstream out;
  CHECK(cmd_train(cfg, out) == kExitOk);
  for (const char* f : {"train_log.csv", "refdist.csv", "manifest.json", "multiplier.csv", "population_final.json",
                        "per_prompt.csv", "passk.csv", "buckets.csv"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
  const auto log = read_csv(dir / "run" / "train_log.csv");
  CHECK(log.header == std::vector<std::string>{"step", "scheme", "mean_exact_pass_rate", "active_fraction", "z_theta",
                                               "window_size", "grad_norm"});
  CHECK(log.rows.size() == 2);
  CHECK(read_csv(dir / "run" / "per_prompt.csv").rows.size() == 64);
  CHECK(read_csv(dir / "run" / "multiplier.csv").rows.size() == 14);
  CHECK(load_config(dir / "run" / "manifest.json") == cfg);
}

TEST_CASE("train is byte-reproducible from its manifest", "[commands]") {
  const auto dir = scratch("determinism");
  auto cfg = small_config(dir / "a");
  cfg.scheme = parse_scheme_label("curve");
  cfg.train.scheme = build_scheme(cfg.scheme);
  std::ostringstream out;
  REQUIRE(cmd_train(cfg, out) == kExitOk);
  auto replay = load_config(dir / "a" / "manifest.json");
  replay.output_dir = (dir / "b").string();
  REQUIRE(cmd_train(replay, out) == kExitOk);
  for (const char* f : {"train_log.csv", "refdist.csv", "multiplier.csv", "population_final.json", "passk.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(read_csv(dir / "a" / "refdist.csv").rows.size() > 0);
}

TEST_CASE("weights command", "[commands]") {
  const auto dir = scratch("weights");
  std::ostringstream out, err;
  WeightsOptions opts;
  opts.scheme = parse_scheme_label("grpo");
  opts.output = dir / "grpo.csv";
  REQUIRE(cmd_weights(opts, out, err) == kExitOk);
  const auto grpo = read_csv(dir / "grpo.csv");
  REQUIRE(grpo.rows.size() == 7);
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(std::stod(grpo.rows[k][2]) == Catch::Approx(std::stod(grpo.rows[6 - k][2])).epsilon(1e-14));
  }

  opts.scheme = parse_scheme_label("maxrl");
  opts.output = dir / "maxrl.csv";
  REQUIRE(cmd_weights(opts, out, err) == kExitOk);
  const auto maxrl = read_csv(dir / "maxrl.csv");
  for (std::size_t k = 1; k < maxrl.rows.size(); ++k) CHECK(std::stod(maxrl.rows[k][2]) < std::stod(maxrl.rows[k - 1][2]));

  opts.scheme = parse_scheme_label("curve");
  opts.output = dir / "curve.csv";
  CHECK(cmd_weights(opts, out, err) == kExitUsage);
  CHECK_FALSE(fs::exists(dir / "curve.csv"));
}

TEST_CASE("curve weights recomputed from a dumped reference", "[commands]") {
  const auto dir = scratch("weights_refdist");
  auto cfg = small_config(dir / "run");
  cfg.scheme = parse_scheme_label("curve");
  cfg.train.scheme = build_scheme(cfg.scheme);
  cfg.eval_enabled = false;
  std::ostringstream out, err;
  REQUIRE(cmd_train(cfg, out) == kExitOk);

  const auto dump = read_csv(dir / "run" / "refdist.csv");
  const auto last_step = dump.rows.back()[0];
  std::vector<std::pair<double, double>> expected;
  for (const auto& row : dump.rows) {
    if (row[0] == last_step) expected.emplace_back(std::stod(row[1]), std::stod(row[4]) / std::stod(row[3]));
  }

  WeightsOptions opts;
  opts.scheme = cfg.scheme;
  opts.refdist = dir / "run" / "refdist.csv";
  opts.output = dir / "curve.csv";
  REQUIRE(cmd_weights(opts, out, err) == kExitOk);
  const auto table = read_csv(dir / "curve.csv");
  REQUIRE(table.rows.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(std::stod(table.rows[k][1]) == expected[k].first);
    CHECK(std::abs(std::stod(table.rows[k][2]) - expected[k].second) <= 1e-12 * expected[k].second);
  }

  opts.step = -5;
  CHECK_THROWS(cmd_weights(opts, out, err));
}

TEST_CASE("compare runs every scheme", "[commands]") {
  const auto dir = scratch("compare");
  const auto cfg = small_config(dir);
  std::ostringstream out, err;
  CHECK(cmd_compare(cfg, {"maxrl"}, out, err) == kExitUsage);
  REQUIRE(cmd_compare(cfg, {"reinforce", "maxrl", "curve", "curve:uniform", "maxrl"}, out, err) == kExitOk);
  for (const char* run : {"reinforce", "maxrl", "curve", "curve_uniform", "maxrl_2"}) {
    CHECK(fs::exists(dir / run / "train_log.csv"));
  }
  const auto table = read_csv(dir / "compare.csv");
  CHECK(table.rows.size() == 5);
  CHECK(table.header.back() == "pass_at_16");

  CHECK(slurp(dir / "maxrl" / "train_log.csv") == slurp(dir / "maxrl_2" / "train_log.csv"));
  CHECK(slurp(dir / "maxrl" / "passk.csv") == slurp(dir / "maxrl_2" / "passk.csv"));

  // Pinned uniform curve and maxrl agree on every numeric column; only the scheme label differs.
  const auto a = read_csv(dir / "maxrl" / "train_log.csv");
  const auto b = read_csv(dir / "curve_uniform" / "train_log.csv");
  REQUIRE(a.rows.size() == b.rows.size());
  const auto scheme_col = a.column("scheme");
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    for (std::size_t c = 0; c < a.header.size(); ++c) {
      if (c != scheme_col) CHECK(a.rows[i][c] == b.rows[i][c]);
    }
  }
  CHECK(slurp(dir / "maxrl" / "population_final.json") == slurp(dir / "curve_uniform" / "population_final.json"));
}

TEST_CASE("verify suites", "[commands]") {
  std::ostringstream out, err;
  CHECK(cmd_verify("theorem1", out, err) == kExitOk);
  CHECK(out.str().find("[FAIL]") == std::string::npos);
  const auto t1 = run_verify_suite("theorem1");
  std::size_t priors = 0;
  for (const auto& c : t1.checks) priors += c.name.rfind("prior ", 0) == 0;
  CHECK(priors == 57);
  const auto c1 = run_verify_suite("corollary1");
  CHECK(c1.checks.front().measured == 0.0);
  CHECK(cmd_verify("all", out, err) == kExitOk);
  CHECK(cmd_verify("prop9", out, err) == kExitUsage);
  CHECK(err.str().find("aggressiveness") != std::string::npos);
}

TEST_CASE("passk command", "[commands]") {
  const auto dir = scratch("passk");
  auto cfg = small_config(dir / "run");
  cfg.train.steps = 1;
  std::ostringstream out;
  REQUIRE(cmd_train(cfg, out) == kExitOk);
  PasskOptions opts;
  opts.population = dir / "run" / "population_final.json";
  opts.eval = cfg.eval;
  opts.label = "trained";
  opts.out_dir = dir / "eval";
  REQUIRE(cmd_passk(opts, out) == kExitOk);
  const auto table = read_csv(dir / "eval" / "passk.csv");
  CHECK(table.rows.size() == 3);
  CHECK(table.rows[0][0] == "trained");
  const auto trained = read_csv(dir / "run" / "passk.csv");
  REQUIRE(trained.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(table.rows[i][1] == trained.rows[i][1]);
    CHECK(table.rows[i][2] == trained.rows[i][2]);
  }
}

TEST_CASE("binary exit codes", "[commands]") {
  if (!std::getenv("CURVERL_BIN")) SKIP("CURVERL_BIN not set");
  const auto dir = scratch("binary");
  {
    std::ofstream(dir / "bad.json") << R"({"version": 1, "train": {"t0": 0}})";
    std::ofstream(dir / "ok.json") << R"({"version": 1, "population": {"size": 20}, "train": {"steps": 2, "batch_size": 8},
      "eval": {"enabled": false}})";
  }
  CHECK(run_binary("train --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_binary("train --config " + (dir / "ok.json").string() + " --out " + (dir / "run").string()) == 0);
  CHECK(read_csv(dir / "run" / "train_log.csv").rows.size() == 2);
  CHECK(run_binary("train") == 2);
  CHECK(run_binary("verify prop1") == 0);
  CHECK(run_binary("verify nothing") == 2);
  CHECK(run_binary("weights --scheme curve -o -") == 2);
  CHECK(run_binary("") == 2);
  CHECK(run_binary("--help") == 0);
}
