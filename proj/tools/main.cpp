#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curverl/cli/commands.hpp"
#include "curverl/cli/config.hpp"
#include "curverl/cli/verify.hpp"
#include "curverl/logging.hpp"

using namespace curverl::cli;

namespace {

ExperimentConfig resolve_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                                const std::optional<std::string>& out) {
  if (path.empty()) throw ConfigError("--config: required for this command");
  auto cfg = load_config(path);
  if (seed) apply_seed(cfg, *seed);
  if (out) cfg.output_dir = *out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  curverl::configure_logging_from_env();

  CLI::App app{"curverl: prompt-reweighted policy gradient laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--seed", seed, "Override population, training and evaluation seeds");
  app.add_option("--out", out_dir, "Output directory");

  auto* train = app.add_subcommand("train", "Run one training experiment");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  std::string suite = "all";
  std::string suite_help = "all";
  for (const auto& n : verify_suite_names()) suite_help += "|" + n;
  verify->add_option("suite", suite, suite_help);

  auto* weights = app.add_subcommand("weights", "Write a weight table over the rollout grid");
  std::string weight_scheme;
  WeightsOptions wopts;
  std::optional<std::string> refdist;
  std::optional<std::int64_t> ref_step;
  std::optional<std::string> weight_output;
  weights->add_option("--scheme", weight_scheme, "Scheme label, e.g. grpo, entropic:2, curve:uniform")->required();
  weights->add_option("-n,--n-rollouts", wopts.n_rollouts, "Rollouts per prompt N")->check(CLI::Range(2, 1 << 20));
  weights->add_option("--refdist", refdist, "refdist.csv dump used as the reference");
  weights->add_option("--step", ref_step, "Snapshot step within --refdist (default: last)");
  weights->add_option("-o,--output", weight_output, "Output CSV ('-' for stdout)");

  auto* compare = app.add_subcommand("compare", "Train several schemes on a shared population and seed");
  std::vector<std::string> schemes;
  compare->add_option("schemes", schemes, "Scheme labels")->required();

  auto* passk = app.add_subcommand("passk", "Evaluate pass@k, majority and difficulty buckets of a population");
  PasskOptions popts;
  std::string population_path;
  passk->add_option("--population", population_path, "Population JSON")->required();
  passk->add_option("--label", popts.label, "Label for the scheme column");
  passk->add_option("--rollouts", popts.eval.rollouts, "Rollouts per prompt R");
  passk->add_option("--k", popts.eval.k_values, "k values");
  passk->add_option("--resamples", popts.eval.resamples, "Bootstrap resamples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(resolve_config(config_path, seed, out_dir), std::cout);
    if (verify->parsed()) return cmd_verify(suite, std::cout, std::cerr);
    if (weights->parsed()) {
      wopts.scheme = parse_scheme_label(weight_scheme);
      if (refdist) wopts.refdist = *refdist;
      wopts.step = ref_step;
      if (weight_output) {
        wopts.output = *weight_output;
      } else {
        wopts.output = std::filesystem::path(out_dir.value_or(".")) / "weights.csv";
      }
      return cmd_weights(wopts, std::cout, std::cerr);
    }
    if (compare->parsed()) return cmd_compare(resolve_config(config_path, seed, out_dir), schemes, std::cout, std::cerr);
    if (passk->parsed()) {
      popts.population = population_path;
      popts.out_dir = out_dir.value_or(".");
      if (seed) popts.eval.seed = *seed;
      return cmd_passk(popts, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}
