#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collabperf/analysis.hpp"

namespace collabperf {

/// Fully resolved experiment configuration. Built from defaults, then a flat
/// `key = value` file, then explicit overrides, in that order.
struct RunConfig {
  std::string data_dir;
  std::string scores_path, models_path, tasks_path;  // override the data_dir files
  std::vector<Method> methods;  // empty: the command picks its default
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double validation_fraction = 0.05;
  std::string target_model;
  Scenario scenario = Scenario::cpp2;
  std::vector<double> sparsity_levels{0.496, 0.552, 0.608, 0.664, 0.72, 0.776, 0.832, 0.888};
  Axis axis = Axis::models;
  double holdout_fraction = 0.2;
  double cut_height = 0.5;
  unsigned workers = 1;
  std::string output_dir = "run";

  /// Every key with its default value.
  static std::map<std::string, std::string> defaults();
  /// Throws ConfigError on unknown keys or malformed values.
  static RunConfig from_map(const std::map<std::string, std::string>& kv);

  std::map<std::string, std::string> to_map() const;
  void write(std::ostream& out) const;

  ExperimentOptions experiment() const;
  std::string scores_file() const;
  std::string models_file() const;
  std::string tasks_file() const;
};

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError.
std::map<std::string, std::string> parse_config_text(std::istream& in);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Environment variable consulted for the default worker count.
inline constexpr const char* kWorkersEnv = "COLLABPERF_WORKERS";

}  // namespace collabperf
