#include "curverl/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "curverl/cli/verify.hpp"
#include "curverl/csv.hpp"
#include "curverl/logging.hpp"
#include "curverl/population.hpp"
#include "curverl/trainer.hpp"
#include "curverl/weighting.hpp"

namespace curverl::cli {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string sanitize(std::string label) {
  std::replace(label.begin(), label.end(), ':', '_');
  return label;
}

}  // namespace

RunSummary run_training(const ExperimentConfig& config) {
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  save_config(config, dir / "manifest.json");

  const auto population = materialize_population(config);
  Trainer trainer(population, config.train);

  auto log_file = open_out(dir / "train_log.csv");
  auto ref_file = open_out(dir / "refdist.csv");
  auto mult_file = open_out(dir / "multiplier.csv");
  CsvWriter log_csv(log_file,
                    {"step", "scheme", "mean_exact_pass_rate", "active_fraction", "z_theta", "window_size", "grad_norm"});
  CsvWriter ref_csv(ref_file, {"step", "grid_point", "mass", "cdf", "density"});
  CsvWriter mult_csv(mult_file, {"step", "p", "relative_multiplier"});
  std::ofstream prompt_file;
  std::optional<CsvWriter> prompt_csv;
  if (config.per_prompt_log) {
    prompt_file = open_out(dir / "per_prompt.csv");
    prompt_csv.emplace(prompt_file,
                       std::initializer_list<std::string_view>{"step", "slot", "prompt_id", "p_hat", "weight",
                                                               "grad_norm", "active"});
  }

  const auto n = config.train.n_rollouts;
  std::size_t cold_steps = 0;
  trainer.run([&](const StepLog& log) {
    const auto step = static_cast<long long>(log.step);
    log_csv.field(step).field(log.scheme).field(log.mean_exact_pass_rate).field(log.active_fraction);
    log_csv.field(log.z_theta).field(log.window_size).field(log.grad_norm);
    log_csv.end_row();
    if (log.reference) {
      const auto& ref = *log.reference;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ref_csv.field(step).field(ref.grid_point(k)).field(ref.bin_mass()[k]);
        ref_csv.field(ref.floored_cdf()[k]).field(ref.floored_density()[k]);
        ref_csv.end_row();
      }
    }
    for (std::size_t k = 0; k < log.relative_multiplier.size(); ++k) {
      mult_csv.field(step).field(static_cast<double>(k + 1) / static_cast<double>(n));
      mult_csv.field(log.relative_multiplier[k]);
      mult_csv.end_row();
    }
    if (prompt_csv) {
      for (std::size_t slot = 0; slot < log.per_prompt.size(); ++slot) {
        const auto& rec = log.per_prompt[slot];
        prompt_csv->field(step).field(slot).field(static_cast<long long>(rec.prompt_id)).field(rec.p_hat);
        prompt_csv->field(rec.weight).field(rec.grad_norm).field(std::size_t{rec.active ? 1u : 0u});
        prompt_csv->end_row();
      }
    }
    if (log.cold_start) ++cold_steps;
    logger()->info("step {} mean_pass_rate={:.6f} active={:.3f} window={}", log.step, log.mean_exact_pass_rate,
                   log.active_fraction, log.window_size);
  });
  if (cold_steps > 0) {
    logger()->warn("{}: {} step(s) used the uniform cold-start reference", config.output_dir, cold_steps);
  }

  save_population(trainer.population(), dir / "population_final.json");

  RunSummary summary;
  summary.label = scheme_label(config.scheme);
  summary.dir = dir;
  summary.initial_mean_exact_pass_rate = mean_exact_pass_rate(population);
  summary.final_mean_exact_pass_rate = mean_exact_pass_rate(trainer.population());
  if (config.eval_enabled) {
    summary.eval = evaluate_population(trainer.population(), config.eval);
    auto passk = open_out(dir / "passk.csv");
    write_passk_csv(passk, summary.label, *summary.eval);
    auto buckets = open_out(dir / "buckets.csv");
    write_bucket_csv(buckets, summary.label, *summary.eval);
  }
  return summary;
}

int cmd_train(const ExperimentConfig& config, std::ostream& out) {
  const auto s = run_training(config);
  out << s.label << ": mean exact pass rate " << format_double(s.initial_mean_exact_pass_rate) << " -> "
      << format_double(s.final_mean_exact_pass_rate) << '\n';
  if (s.eval) {
    for (std::size_t i = 0; i < s.eval->k_values.size(); ++i) {
      out << "  pass@" << s.eval->k_values[i] << " = " << format_double(s.eval->mean_pass_at_k[i]) << '\n';
    }
    out << "  unsolved fraction = " << format_double(s.eval->unsolved_fraction) << '\n';
  }
  out << "wrote " << s.dir.string() << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err) {
  const auto& names = verify_suite_names();
  std::vector<std::string> chosen;
  if (suite == "all") {
    chosen = names;
  } else if (std::find(names.begin(), names.end(), suite) != names.end()) {
    chosen.push_back(suite);
  } else {
    err << "unknown suite '" << suite << "'; available: all";
    for (const auto& n : names) err << ", " << n;
    err << '\n';
    return kExitUsage;
  }
  bool ok = true;
  for (const auto& name : chosen) {
    const auto report = run_verify_suite(name);
    print_report(out, report);
    ok = ok && report.passed();
  }
  return ok ? kExitOk : kExitCheckFailed;
}

ReferenceDistribution load_refdist_snapshot(const std::filesystem::path& path, std::optional<std::int64_t> step) {
  const auto table = read_csv(path);
  const auto c_step = table.column("step");
  const auto c_grid = table.column("grid_point");
  const auto c_mass = table.column("mass");
  const auto c_cdf = table.column("cdf");
  const auto c_density = table.column("density");
  if (table.rows.empty()) throw std::runtime_error(path.string() + ": no reference snapshots");
  const std::int64_t wanted = step ? *step : std::stoll(table.rows.back()[c_step]);

  std::vector<double> grid, mass, cdf, density;
  for (const auto& row : table.rows) {
    if (std::stoll(row[c_step]) != wanted) continue;
    grid.push_back(std::stod(row[c_grid]));
    mass.push_back(std::stod(row[c_mass]));
    cdf.push_back(std::stod(row[c_cdf]));
    density.push_back(std::stod(row[c_density]));
  }
  if (grid.empty()) {
    throw std::runtime_error(path.string() + ": no snapshot for step " + std::to_string(wanted));
  }
  const auto n = grid.size() + 1;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::llround(grid[k] * static_cast<double>(n)) != static_cast<long long>(k + 1)) {
      throw std::runtime_error(path.string() + ": grid points of step " + std::to_string(wanted) +
                               " are not {1/N, ..., (N-1)/N}");
    }
  }
  return ReferenceDistribution::from_columns(n, std::move(mass), std::move(cdf), std::move(density), 0);
}

int cmd_weights(const WeightsOptions& options, std::ostream& out, std::ostream& err) {
  auto scheme = build_scheme(options.scheme);
  auto n = options.n_rollouts;
  if (uses_reference(scheme) && !scheme_reference(scheme)) {
    if (!options.refdist) {
      err << options.scheme.name << " needs a reference: pass --refdist <refdist.csv> or use "
          << options.scheme.name << ":uniform\n";
      return kExitUsage;
    }
    auto snapshot = std::make_shared<const ReferenceDistribution>(load_refdist_snapshot(*options.refdist, options.step));
    n = snapshot->n_rollouts();
    scheme = with_reference(std::move(scheme), std::move(snapshot));
  }
  const auto rows = weight_table(scheme, n);
  if (options.output == "-") {
    write_weight_csv(out, rows);
  } else {
    if (options.output.has_parent_path()) std::filesystem::create_directories(options.output.parent_path());
    auto file = open_out(options.output);
    write_weight_csv(file, rows);
    out << "wrote " << rows.size() << " rows to " << options.output.string() << '\n';
  }
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& config, const std::vector<std::string>& schemes, std::ostream& out,
                std::ostream& err) {
  if (schemes.size() < 2) {
    err << "compare needs at least two schemes\n";
    return kExitUsage;
  }
  std::vector<SchemeSpec> specs;
  for (const auto& label : schemes) specs.push_back(parse_scheme_label(label));

  const std::filesystem::path root = config.output_dir;
  std::map<std::string, int> seen;
  std::vector<RunSummary> runs;
  std::vector<std::string> run_names;
  for (const auto& spec : specs) {
    auto name = sanitize(scheme_label(spec));
    if (const int count = seen[name]++; count > 0) name += "_" + std::to_string(count + 1);
    auto run_cfg = config;
    run_cfg.scheme = spec;
    run_cfg.train.scheme = build_scheme(spec);
    run_cfg.output_dir = (root / name).string();
    runs.push_back(run_training(run_cfg));
    run_names.push_back(name);
    out << name << ": mean exact pass rate " << format_double(runs.back().final_mean_exact_pass_rate) << '\n';
  }

  auto file = open_out(root / "compare.csv");
  file << "run,scheme,final_mean_exact_pass_rate";
  if (config.eval_enabled) {
    file << ",unsolved_fraction,mean_majority,unsolvable,hard,medium,easy";
    for (auto k : config.eval.k_values) file << ",pass_at_" << k;
  }
  file << '\n';
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    file << run_names[i] << ',' << r.label << ',' << format_double(r.final_mean_exact_pass_rate);
    if (r.eval) {
      const auto& e = *r.eval;
      file << ',' << format_double(e.unsolved_fraction) << ',' << format_double(e.mean_majority) << ','
           << e.buckets.unsolvable << ',' << e.buckets.hard << ',' << e.buckets.medium << ',' << e.buckets.easy;
      for (double v : e.mean_pass_at_k) file << ',' << format_double(v);
    }
    file << '\n';
  }
  out << "wrote " << (root / "compare.csv").string() << '\n';
  return kExitOk;
}

int cmd_passk(const PasskOptions& options, std::ostream& out) {
  validate(options.eval);
  const auto population = load_population(options.population);
  const auto report = evaluate_population(population, options.eval);
  std::filesystem::create_directories(options.out_dir);
  auto passk = open_out(options.out_dir / "passk.csv");
  write_passk_csv(passk, options.label, report);
  auto buckets = open_out(options.out_dir / "buckets.csv");
  write_bucket_csv(buckets, options.label, report);
  for (std::size_t i = 0; i < report.k_values.size(); ++i) {
    out << "pass@" << report.k_values[i] << " = " << format_double(report.mean_pass_at_k[i]) << '\n';
  }
  out << "majority@" << options.eval.rollouts << " = " << format_double(report.mean_majority) << '\n';
  out << "buckets unsolvable=" << report.buckets.unsolvable << " hard=" << report.buckets.hard
      << " medium=" << report.buckets.medium << " easy=" << report.buckets.easy << '\n';
  return kExitOk;
}

}  // namespace curverl::cli
