#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "collabperf/dataset.hpp"

namespace collabperf {

struct ScoreLosses {
  double mse = 0.0;
  double l1_mean = 0.0;
};

ScoreLosses score_losses(std::span<const double> pred, std::span<const double> truth);

/// (model index, score) pairs ranked descending; equal scores keep the
/// lower registry index first. Returns rank (1-based) per input position.
std::vector<int> derive_ranks(std::span<const std::pair<std::size_t, double>> scores_by_model);

struct RankMetrics {
  double accuracy_pct = 0.0;
  double mae_at_2_pct = 0.0;
};

/// Rank agreement over validation entries. A model's cohort on a task is every
/// model with an observed score for it in `full`; the predicted rank swaps
/// only that model's score for its prediction.
RankMetrics rank_metrics(std::span<const ScoreEntry> valid, std::span<const double> predicted,
                         const ScoreMatrix& full);

inline constexpr const char* kCohortDefinition =
    "cohort = all models with an observed score on the task (train + validation); ties broken by registry index";

struct SeedMetrics {
  std::uint64_t seed = 0;
  double mse = 0.0, l1_mean = 0.0, rank_accuracy_pct = 0.0, mae_at_2_pct = 0.0;
  std::size_t n_eval = 0;
};

struct EvalReport {
  std::string label;
  double mse = 0.0, l1_mean = 0.0, rank_accuracy_pct = 0.0, mae_at_2_pct = 0.0;
  double mse_std = 0.0, l1_std = 0.0, accuracy_std = 0.0, mae_at_2_std = 0.0;
  std::size_t n_eval = 0;  // summed over seeds
  std::vector<SeedMetrics> per_seed;
};

SeedMetrics evaluate(std::span<const ScoreEntry> valid, std::span<const double> predicted, const ScoreMatrix& full,
                     std::uint64_t seed);

/// Means and population standard deviations over `per_seed`.
EvalReport aggregate(std::string label, std::vector<SeedMetrics> per_seed);

/// Structured text: cohort line, aggregate rows, per-seed rows.
void write_report(std::span<const EvalReport> reports, std::ostream& out);

}  // namespace collabperf
