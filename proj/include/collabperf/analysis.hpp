#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "collabperf/cluster.hpp"
#include "collabperf/dataset.hpp"
#include "collabperf/metrics.hpp"
#include "collabperf/mf.hpp"
#include "collabperf/ncf.hpp"
#include "collabperf/scaling.hpp"
#include "collabperf/train_config.hpp"

namespace collabperf {

enum class Method { mf, ncf, ncf_factor, factor_only, scaling_baseline };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);  // throws ConfigError
std::vector<Method> parse_methods(std::string_view comma_list);

/// A trained collaborative-filtering predictor (MF or one NCF variant).
class Predictor {
 public:
  explicit Predictor(MFModel m) : model_(std::move(m)) {}
  explicit Predictor(NCFModel m) : model_(std::move(m)) {}

  double predict(const Dataset& data, std::size_t model_index, std::size_t task_index) const;
  std::vector<double> predict(const Dataset& data, std::span<const ScoreEntry> entries) const;

  const MFModel* mf() const { return std::get_if<MFModel>(&model_); }
  const NCFModel* ncf() const { return std::get_if<NCFModel>(&model_); }

 private:
  std::variant<MFModel, NCFModel> model_;
};

/// Trains `method` (not scaling_baseline) on `train`.
Predictor fit_predictor(Method method, const Dataset& data, const ScoreMatrix& train, const TrainConfig& config);

struct ExperimentOptions {
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double validation_fraction = 0.05;
  unsigned workers = 1;
  CurveBounds bounds;
};

struct PredictionPoint {
  std::string method;
  std::uint64_t seed = 0;
  std::string model, task;
  double truth = 0.0, predicted = 0.0;
};

struct BenchmarkResult {
  std::vector<EvalReport> reports;        // one per method, input order
  std::vector<PredictionPoint> points;    // validation predictions of every run
  std::vector<std::string> notes;         // coverage and skip messages
};

/// Random validation split per seed, train each method, evaluate.
BenchmarkResult run_benchmark_eval(const Dataset& data, std::span<const Method> methods,
                                   const ExperimentOptions& options);

struct ScenarioTriple {
  std::uint64_t seed = 0;
  std::string task;
  double truth = 0.0;
  double cpp = 0.0;
  std::optional<double> scaling;
};

struct ScenarioResult {
  std::string target;
  Scenario scenario = Scenario::cpp0;
  EvalReport cpp;
  std::optional<EvalReport> scaling;  // over covered tasks only
  std::vector<ScenarioTriple> triples;
  std::vector<ScalingCurve> curves;
  std::vector<std::size_t> prior_entries;  // target entries in train, per seed
  std::vector<std::string> notes;
};

/// CPP-0 / CPP-2 for one target model, compared with the in-family sigmoid.
ScenarioResult run_scenario(const Dataset& data, const std::string& target, Scenario scenario,
                            const ExperimentOptions& options, Method method = Method::ncf_factor);

enum class Axis { models, tasks };

struct LooOptions {
  Axis axis = Axis::models;
  Method method = Method::ncf_factor;
  double holdout_fraction = 0.2;  // per validation entity
  double cut_height = 0.5;
};

struct LooResult {
  Axis axis = Axis::models;
  std::vector<std::string> masked;      // rows
  std::vector<std::string> validation;  // columns
  Table loss_matrix;                    // seed-averaged MSE, rows x columns
  std::vector<double> baseline_losses;  // per column
  Table delta;
  Table normalized_delta;
  std::vector<bool> degenerate_column;
  std::vector<bool> degenerate_row;
  Table correlation;  // rows x rows
  Clustering clustering;
  std::vector<std::string> warnings;
  std::string loss_name = "mse";
};

/// Leave-one-entity-out influence. Each seed fixes a per-entity holdout; the
/// baseline trains on everything else, each row additionally drops one entity.
LooResult leave_one_out(const Dataset& data, const LooOptions& loo, const ExperimentOptions& options);

/// Delta -> per-column standardization -> row correlation -> clustering.
void finish_loo(LooResult& r, double cut_height);

struct SparsityRow {
  double target_sparsity = 0.0;
  double achieved_sparsity = 0.0;  // mean over seeds, full grid of the train matrix
  EvalReport report;
};

/// One validation split per seed, held fixed while the train matrix is masked
/// to each sparsity level.
std::vector<SparsityRow> sparsity_sweep(const Dataset& data, std::span<const double> levels,
                                        const ExperimentOptions& options, Method method = Method::ncf_factor);

}  // namespace collabperf
