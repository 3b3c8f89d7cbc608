#include "curverl/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>
#include <vector>

namespace curverl::cli {
namespace {

using json = nlohmann::json;

constexpr std::string_view kSchemeNames[] = {"reinforce", "grpo",  "maxrl", "entropic", "curve", "integrated_convex",
                                             "integrated_product"};

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path, "must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) fail(join(path, it.key()), "unknown key");
  }
}

std::uint64_t read_uint(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) fail(path, "must be a nonnegative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  fail(path, "must be an integer");
}

std::size_t read_count(const json& obj, const std::string& path, std::string_view key, std::size_t fallback,
                       std::size_t minimum = 1) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  const auto p = join(path, key);
  const auto v = read_uint(*it, p);
  if (v < minimum) {
    fail(p, minimum == 1 ? "must be a positive integer" : "must be at least " + std::to_string(minimum));
  }
  return static_cast<std::size_t>(v);
}

double read_real(const json& obj, const std::string& path, std::string_view key, double fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(join(path, key), "must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail(join(path, key), "must be finite");
  return v;
}

std::string read_string(const json& obj, const std::string& path, std::string_view key, std::string fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (!it->is_string()) fail(join(path, key), "must be a string");
  return it->get<std::string>();
}

bool read_bool(const json& obj, const std::string& path, std::string_view key, bool fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(join(path, key), "must be true or false");
  return it->get<bool>();
}

void check_scheme(const SchemeSpec& s, const std::string& path) {
  if (std::find(std::begin(kSchemeNames), std::end(kSchemeNames), s.name) == std::end(kSchemeNames)) {
    std::string names;
    for (auto n : kSchemeNames) names += (names.empty() ? "" : ", ") + std::string(n);
    fail(join(path, "name"), "unknown scheme '" + s.name + "' (expected one of " + names + ")");
  }
  if (!(s.eta > 0.0)) fail(join(path, "eta"), "must be positive");
  if (!(s.lambda >= 0.0 && s.lambda <= 1.0)) fail(join(path, "lambda"), "must lie in [0, 1]");
  if (s.reference != "window" && s.reference != "uniform") {
    fail(join(path, "reference"), "must be \"window\" or \"uniform\"");
  }
}

SchemeSpec parse_scheme(const json& obj, const std::string& path) {
  check_keys(obj, path, {"name", "eta", "lambda", "reference"});
  SchemeSpec s;
  s.name = read_string(obj, path, "name", s.name);
  s.eta = read_real(obj, path, "eta", s.eta);
  s.lambda = read_real(obj, path, "lambda", s.lambda);
  s.reference = read_string(obj, path, "reference", s.reference);
  check_scheme(s, path);
  return s;
}

void parse_population(const json& obj, ExperimentConfig& cfg) {
  const std::string path = "population";
  check_keys(obj, path,
             {"size", "m", "difficulty", "unsolvable_fraction", "correct_count", "seed", "file"});
  auto& p = cfg.population;
  p.size = read_count(obj, path, "size", p.size);
  p.m = read_count(obj, path, "m", p.m, 2);
  p.correct_count = read_count(obj, path, "correct_count", p.correct_count);
  if (p.correct_count >= p.m) fail(join(path, "correct_count"), "must be smaller than m");
  p.unsolvable_fraction = read_real(obj, path, "unsolvable_fraction", p.unsolvable_fraction);
  if (!(p.unsolvable_fraction >= 0.0 && p.unsolvable_fraction <= 1.0)) {
    fail(join(path, "unsolvable_fraction"), "must lie in [0, 1]");
  }
  if (obj.contains("seed")) p.seed = read_uint(obj.at("seed"), join(path, "seed"));
  if (obj.contains("file")) cfg.population_file = read_string(obj, path, "file", "");
  if (obj.contains("difficulty")) {
    const std::string dpath = join(path, "difficulty");
    const auto& d = obj.at("difficulty");
    check_keys(d, dpath, {"kind", "alpha", "beta", "value"});
    auto& diff = p.difficulty;
    const auto kind = read_string(d, dpath, "kind", "beta");
    if (kind == "beta") {
      diff.kind = DifficultyProfile::Kind::Beta;
    } else if (kind == "constant") {
      diff.kind = DifficultyProfile::Kind::Constant;
    } else {
      fail(join(dpath, "kind"), "must be \"beta\" or \"constant\"");
    }
    diff.alpha = read_real(d, dpath, "alpha", diff.alpha);
    diff.beta = read_real(d, dpath, "beta", diff.beta);
    diff.value = read_real(d, dpath, "value", diff.value);
    if (!(diff.alpha > 0.0)) fail(join(dpath, "alpha"), "must be positive");
    if (!(diff.beta > 0.0)) fail(join(dpath, "beta"), "must be positive");
    if (!(diff.value > 0.0 && diff.value < 1.0)) fail(join(dpath, "value"), "must lie in (0, 1)");
  }
}

void parse_train(const json& obj, ExperimentConfig& cfg) {
  const std::string path = "train";
  check_keys(obj, path,
             {"batch_size", "n_rollouts", "t0", "learning_rate", "steps", "seed", "min_window_count",
              "weight_argument", "scheme"});
  auto& t = cfg.train;
  t.batch_size = read_count(obj, path, "batch_size", t.batch_size);
  t.n_rollouts = read_count(obj, path, "n_rollouts", t.n_rollouts, 2);
  t.t0 = read_count(obj, path, "t0", t.t0);
  t.steps = read_count(obj, path, "steps", t.steps);
  t.min_window_count = read_count(obj, path, "min_window_count", t.min_window_count, 0);
  t.learning_rate = read_real(obj, path, "learning_rate", t.learning_rate);
  if (!(t.learning_rate > 0.0)) fail(join(path, "learning_rate"), "must be positive");
  if (obj.contains("seed")) t.seed = read_uint(obj.at("seed"), join(path, "seed"));
  const auto arg = read_string(obj, path, "weight_argument", "empirical");
  if (arg == "empirical") {
    t.weight_argument = WeightArgument::Empirical;
  } else if (arg == "exact") {
    t.weight_argument = WeightArgument::Exact;
  } else {
    fail(join(path, "weight_argument"), "must be \"empirical\" or \"exact\"");
  }
  if (obj.contains("scheme")) cfg.scheme = parse_scheme(obj.at("scheme"), join(path, "scheme"));
}

void parse_eval(const json& obj, ExperimentConfig& cfg) {
  const std::string path = "eval";
  check_keys(obj, path, {"enabled", "rollouts", "k", "resamples", "seed"});
  auto& e = cfg.eval;
  cfg.eval_enabled = read_bool(obj, path, "enabled", cfg.eval_enabled);
  e.rollouts = read_count(obj, path, "rollouts", e.rollouts);
  e.resamples = read_count(obj, path, "resamples", e.resamples);
  if (obj.contains("seed")) e.seed = read_uint(obj.at("seed"), join(path, "seed"));
  if (obj.contains("k")) {
    const auto& ks = obj.at("k");
    if (!ks.is_array() || ks.empty()) fail(join(path, "k"), "must be a nonempty array of integers");
    e.k_values.clear();
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto p = join(path, "k") + "[" + std::to_string(i) + "]";
      const auto k = read_uint(ks[i], p);
      if (k == 0) fail(p, "must be a positive integer");
      e.k_values.push_back(static_cast<std::size_t>(k));
    }
  }
  for (auto k : e.k_values) {
    if (k > e.rollouts) fail(join(path, "k"), "value " + std::to_string(k) + " exceeds eval.rollouts");
  }
}

void parse_output(const json& obj, ExperimentConfig& cfg) {
  const std::string path = "output";
  check_keys(obj, path, {"dir", "per_prompt_log"});
  cfg.output_dir = read_string(obj, path, "dir", cfg.output_dir);
  if (cfg.output_dir.empty()) fail(join(path, "dir"), "must not be empty");
  cfg.per_prompt_log = read_bool(obj, path, "per_prompt_log", cfg.per_prompt_log);
}

}  // namespace

SchemeSpec parse_scheme_label(const std::string& label) {
  std::vector<std::string> parts;
  std::stringstream ss(label);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty()) throw ConfigError("scheme: empty label");
  SchemeSpec s;
  s.name = parts[0];
  auto number = [&](const std::string& text) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("scheme '" + label + "': '" + text + "' is not a number");
    }
  };
  const bool referenced = s.name == "curve" || s.name == "integrated_product";
  if (s.name == "entropic" && parts.size() == 2) {
    s.eta = number(parts[1]);
  } else if (referenced && parts.size() == 2) {
    s.reference = parts[1];
  } else if (s.name == "integrated_convex" && (parts.size() == 2 || parts.size() == 3)) {
    s.lambda = number(parts[1]);
    if (parts.size() == 3) s.reference = parts[2];
  } else if (parts.size() != 1) {
    throw ConfigError("scheme '" + label + "': unexpected arguments");
  }
  check_scheme(s, "scheme");
  return s;
}

std::string scheme_label(const SchemeSpec& s) {
  std::ostringstream out;
  out << s.name;
  if (s.name == "entropic") out << ':' << s.eta;
  if (s.name == "integrated_convex") out << ':' << s.lambda;
  if ((s.name == "curve" || s.name == "integrated_convex" || s.name == "integrated_product") &&
      s.reference != "window") {
    out << ':' << s.reference;
  }
  return out.str();
}

WeightScheme build_scheme(const SchemeSpec& s) {
  check_scheme(s, "scheme");
  const ReferenceHandle pinned = s.reference == "uniform" ? uniform_reference() : nullptr;
  if (s.name == "reinforce") return Reinforce{};
  if (s.name == "grpo") return Grpo{};
  if (s.name == "maxrl") return MaxRL{};
  if (s.name == "entropic") return EntropicRisk{s.eta};
  if (s.name == "curve") return Curve{pinned};
  if (s.name == "integrated_convex") return IntegratedConvex{s.lambda, pinned};
  return IntegratedProduct{pinned};
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto& pa = a.population;
  const auto& pb = b.population;
  const auto& da = pa.difficulty;
  const auto& db = pb.difficulty;
  const auto& ta = a.train;
  const auto& tb = b.train;
  return a.version == b.version && pa.size == pb.size && pa.m == pb.m && da.kind == db.kind &&
         da.alpha == db.alpha && da.beta == db.beta && da.value == db.value &&
         pa.unsolvable_fraction == pb.unsolvable_fraction && pa.correct_count == pb.correct_count &&
         pa.seed == pb.seed && a.population_file == b.population_file && ta.batch_size == tb.batch_size &&
         ta.n_rollouts == tb.n_rollouts && ta.t0 == tb.t0 && ta.learning_rate == tb.learning_rate &&
         ta.steps == tb.steps && ta.seed == tb.seed && ta.min_window_count == tb.min_window_count &&
         ta.weight_argument == tb.weight_argument && a.scheme == b.scheme && a.eval_enabled == b.eval_enabled &&
         a.eval.rollouts == b.eval.rollouts && a.eval.k_values == b.eval.k_values &&
         a.eval.resamples == b.eval.resamples && a.eval.seed == b.eval.seed && a.output_dir == b.output_dir &&
         a.per_prompt_log == b.per_prompt_log;
}

ExperimentConfig config_from_json(const json& doc) {
  check_keys(doc, "", {"version", "population", "train", "eval", "output"});
  if (!doc.contains("version")) fail("version", "missing (expected " + std::to_string(kConfigVersion) + ")");
  ExperimentConfig cfg;
  const auto version = read_uint(doc.at("version"), "version");
  if (version != static_cast<std::uint64_t>(kConfigVersion)) {
    fail("version", "unsupported version " + std::to_string(version));
  }
  if (doc.contains("population")) parse_population(doc.at("population"), cfg);
  if (doc.contains("train")) parse_train(doc.at("train"), cfg);
  if (doc.contains("eval")) parse_eval(doc.at("eval"), cfg);
  if (doc.contains("output")) parse_output(doc.at("output"), cfg);
  cfg.train.scheme = build_scheme(cfg.scheme);
  return cfg;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["version"] = cfg.version;

  const auto& p = cfg.population;
  auto& pop = doc["population"];
  pop["size"] = p.size;
  pop["m"] = p.m;
  auto& diff = pop["difficulty"];
  diff["kind"] = p.difficulty.kind == DifficultyProfile::Kind::Beta ? "beta" : "constant";
  diff["alpha"] = p.difficulty.alpha;
  diff["beta"] = p.difficulty.beta;
  diff["value"] = p.difficulty.value;
  pop["unsolvable_fraction"] = p.unsolvable_fraction;
  pop["correct_count"] = p.correct_count;
  pop["seed"] = p.seed;
  if (cfg.population_file) pop["file"] = *cfg.population_file;

  const auto& t = cfg.train;
  auto& train = doc["train"];
  train["batch_size"] = t.batch_size;
  train["n_rollouts"] = t.n_rollouts;
  train["t0"] = t.t0;
  train["learning_rate"] = t.learning_rate;
  train["steps"] = t.steps;
  train["seed"] = t.seed;
  train["min_window_count"] = t.min_window_count;
  train["weight_argument"] = t.weight_argument == WeightArgument::Empirical ? "empirical" : "exact";
  auto& scheme = train["scheme"];
  scheme["name"] = cfg.scheme.name;
  scheme["eta"] = cfg.scheme.eta;
  scheme["lambda"] = cfg.scheme.lambda;
  scheme["reference"] = cfg.scheme.reference;

  auto& eval = doc["eval"];
  eval["enabled"] = cfg.eval_enabled;
  eval["rollouts"] = cfg.eval.rollouts;
  eval["k"] = cfg.eval.k_values;
  eval["resamples"] = cfg.eval.resamples;
  eval["seed"] = cfg.eval.seed;

  auto& output = doc["output"];
  output["dir"] = cfg.output_dir;
  output["per_prompt_log"] = cfg.per_prompt_log;
  return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_json(config).dump(2) << '\n';
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.population.seed = seed;
  config.train.seed = seed;
  config.eval.seed = seed;
}

PromptPopulation materialize_population(const ExperimentConfig& config) {
  if (!config.population_file) return generate_population(config.population);
  try {
    return load_population(*config.population_file);
  } catch (const std::exception& e) {
    throw ConfigError("population.file: " + std::string(e.what()));
  }
}

}  // namespace curverl::cli
