#include "collabperf/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"

namespace collabperf {

namespace {

template <class T, class Fn>
std::string join(const std::vector<T>& v, Fn&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (auto t = csv::trim(item); !t.empty()) out.push_back(t);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  if (!csv::parse_double(v, d)) throw ConfigError(key + ": '" + v + "' is not a number");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError(key + ": '" + v + "' is not an integer");
  return static_cast<long long>(d);
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::random: return "random";
    case Scenario::cpp0: return "cpp0";
    case Scenario::cpp2: return "cpp2";
  }
  return "?";
}

}  // namespace

std::map<std::string, std::string> RunConfig::defaults() {
  RunConfig c;
  if (const char* w = std::getenv(kWorkersEnv); w && *w) c.workers = static_cast<unsigned>(std::max(1, std::atoi(w)));
  return c.to_map();
}

std::map<std::string, std::string> RunConfig::to_map() const {
  auto fmt = [](double d) { return csv::format_double(d); };
  std::map<std::string, std::string> m;
  m["data_dir"] = data_dir;
  m["scores"] = scores_path;
  m["model_factors"] = models_path;
  m["task_factors"] = tasks_path;
  m["methods"] = join(methods, [](Method x) { return std::string(to_string(x)); });
  m["latent_dim"] = std::to_string(train.latent_dim);
  m["learning_rate"] = fmt(train.learning_rate);
  m["iterations"] = std::to_string(train.iterations);
  m["l2_penalty"] = fmt(train.l2_penalty);
  m["hidden_layers"] = join(train.hidden_layers, [](int h) { return std::to_string(h); });
  m["batch_size"] = std::to_string(train.batch_size);
  m["factor_width"] = std::to_string(train.factor_width);
  m["oov_rate"] = fmt(train.oov_rate);
  m["seeds"] = join(seeds, [](std::uint64_t s) { return std::to_string(s); });
  if (seeds.size() == 1) m["seeds"] += ",";
  m["validation_fraction"] = fmt(validation_fraction);
  m["target_model"] = target_model;
  m["scenario"] = scenario_name(scenario);
  m["sparsity_levels"] = join(sparsity_levels, fmt);
  m["axis"] = axis == Axis::models ? "models" : "tasks";
  m["holdout_fraction"] = fmt(holdout_fraction);
  m["cut_height"] = fmt(cut_height);
  m["workers"] = std::to_string(workers);
  m["output_dir"] = output_dir;
  return m;
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  const auto known = c.to_map();
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    if (k == "data_dir") c.data_dir = v;
    else if (k == "scores") c.scores_path = v;
    else if (k == "model_factors") c.models_path = v;
    else if (k == "task_factors") c.tasks_path = v;
    else if (k == "methods") c.methods = v.empty() ? std::vector<Method>{} : parse_methods(v);
    else if (k == "latent_dim") c.train.latent_dim = static_cast<int>(to_int(k, v));
    else if (k == "learning_rate") c.train.learning_rate = to_double(k, v);
    else if (k == "iterations") c.train.iterations = to_int(k, v);
    else if (k == "l2_penalty") c.train.l2_penalty = to_double(k, v);
    else if (k == "hidden_layers") {
      c.train.hidden_layers.clear();
      for (const auto& s : split_list(v)) c.train.hidden_layers.push_back(static_cast<int>(to_int(k, s)));
    } else if (k == "batch_size") c.train.batch_size = static_cast<int>(to_int(k, v));
    else if (k == "factor_width") c.train.factor_width = static_cast<int>(to_int(k, v));
    else if (k == "oov_rate") c.train.oov_rate = to_double(k, v);
    else if (k == "seeds") {
      c.seeds.clear();
      const auto items = split_list(v);
      if (v.find(',') == std::string::npos && items.size() == 1) {
        // Bare N means seeds 1..N; "7," is the single seed 7.
        const long long n = to_int(k, items[0]);
        if (n < 1) throw ConfigError("seeds: count must be >= 1");
        for (long long s = 1; s <= n; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
      } else {
        for (const auto& s : items) {
          const long long x = to_int(k, s);
          if (x < 0) throw ConfigError("seeds must be nonnegative");
          c.seeds.push_back(static_cast<std::uint64_t>(x));
        }
      }
      if (c.seeds.empty()) throw ConfigError("seeds: empty list");
    } else if (k == "validation_fraction") c.validation_fraction = to_double(k, v);
    else if (k == "target_model") c.target_model = v;
    else if (k == "scenario") {
      if (v == "cpp0") c.scenario = Scenario::cpp0;
      else if (v == "cpp2") c.scenario = Scenario::cpp2;
      else if (v == "random") c.scenario = Scenario::random;
      else throw ConfigError("scenario must be cpp0, cpp2 or random");
    } else if (k == "sparsity_levels") {
      c.sparsity_levels.clear();
      for (const auto& s : split_list(v)) c.sparsity_levels.push_back(to_double(k, s));
    } else if (k == "axis") {
      if (v == "models") c.axis = Axis::models;
      else if (v == "tasks") c.axis = Axis::tasks;
      else throw ConfigError("axis must be models or tasks");
    } else if (k == "holdout_fraction") c.holdout_fraction = to_double(k, v);
    else if (k == "cut_height") c.cut_height = to_double(k, v);
    else if (k == "workers") {
      const long long w = to_int(k, v);
      if (w < 1) throw ConfigError("workers must be >= 1");
      c.workers = static_cast<unsigned>(w);
    } else if (k == "output_dir") c.output_dir = v;
  }
  c.train.validate();
  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in (0,1)");
  return c;
}

void RunConfig::write(std::ostream& out) const {
  for (const auto& [k, v] : to_map()) out << k << " = " << v << '\n';
}

ExperimentOptions RunConfig::experiment() const {
  ExperimentOptions o;
  o.train = train;
  o.seeds = seeds;
  o.validation_fraction = validation_fraction;
  o.workers = workers;
  return o;
}

std::string RunConfig::scores_file() const {
  if (!scores_path.empty()) return scores_path;
  if (data_dir.empty()) throw ConfigError("no dataset given (set data_dir or scores/model_factors/task_factors)");
  return (std::filesystem::path(data_dir) / "scores.csv").string();
}
std::string RunConfig::models_file() const {
  if (!models_path.empty()) return models_path;
  if (data_dir.empty()) throw ConfigError("no dataset given (set data_dir or scores/model_factors/task_factors)");
  return (std::filesystem::path(data_dir) / "models.csv").string();
}
std::string RunConfig::tasks_file() const {
  if (!tasks_path.empty()) return tasks_path;
  if (data_dir.empty()) throw ConfigError("no dataset given (set data_dir or scores/model_factors/task_factors)");
  return (std::filesystem::path(data_dir) / "tasks.csv").string();
}

std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = csv::trim(line);
    if (t.empty() || t == "\r") continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    std::string key = csv::trim(t.substr(0, eq));
    std::string value = csv::trim(t.substr(eq + 1));
    if (!value.empty() && value.back() == '\r') value.pop_back();
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config_text(in);
}

}  // namespace collabperf
