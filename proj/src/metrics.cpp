#include "collabperf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <ostream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"

namespace collabperf {

ScoreLosses score_losses(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw InputError("score_losses: length mismatch");
  if (pred.empty()) throw InputError("score_losses: empty input");
  ScoreLosses out;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double r = pred[k] - truth[k];
    out.mse += r * r;
    out.l1_mean += std::abs(r);
  }
  out.mse /= static_cast<double>(pred.size());
  out.l1_mean /= static_cast<double>(pred.size());
  return out;
}

std::vector<int> derive_ranks(std::span<const std::pair<std::size_t, double>> scores_by_model) {
  std::vector<std::size_t> order(scores_by_model.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = scores_by_model[a];
    const auto& y = scores_by_model[b];
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  std::vector<int> ranks(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}

namespace {

// Rank of `who` with score `s` among the cohort, using the same ordering as
// derive_ranks without re-sorting: count the members that precede it.
int rank_in_cohort(const std::vector<std::pair<std::size_t, double>>& cohort, std::size_t who, double s) {
  int rank = 1;
  for (const auto& [m, v] : cohort) {
    if (m == who) continue;
    if (v > s || (v == s && m < who)) ++rank;
  }
  return rank;
}

}  // namespace

RankMetrics rank_metrics(std::span<const ScoreEntry> valid, std::span<const double> predicted,
                         const ScoreMatrix& full) {
  if (valid.size() != predicted.size()) throw InputError("rank_metrics: every validation entry needs a prediction");
  if (valid.empty()) throw InputError("rank_metrics: empty validation set");
  std::vector<std::vector<std::pair<std::size_t, double>>> cohorts(full.n_tasks());
  for (const auto& e : full.entries()) cohorts[e.task].emplace_back(e.model, e.score);

  std::size_t exact = 0, within2 = 0;
  for (std::size_t k = 0; k < valid.size(); ++k) {
    const auto& e = valid[k];
    const auto& cohort = cohorts.at(e.task);
    auto self = std::find_if(cohort.begin(), cohort.end(), [&](const auto& p) { return p.first == e.model; });
    if (self == cohort.end())
      throw ConsistencyError("validation model '" + full.models().name(e.model) + "' missing from cohort of '" +
                             full.tasks().name(e.task) + "'");
    const int r = rank_in_cohort(cohort, e.model, self->second);
    const int r_hat = rank_in_cohort(cohort, e.model, predicted[k]);
    exact += r == r_hat;
    within2 += std::abs(r - r_hat) <= 2;
  }
  const double n = static_cast<double>(valid.size());
  return {100.0 * static_cast<double>(exact) / n, 100.0 * static_cast<double>(within2) / n};
}

SeedMetrics evaluate(std::span<const ScoreEntry> valid, std::span<const double> predicted, const ScoreMatrix& full,
                     std::uint64_t seed) {
  std::vector<double> truth;
  truth.reserve(valid.size());
  for (const auto& e : valid) truth.push_back(e.score);
  const auto losses = score_losses(predicted, truth);
  const auto ranks = rank_metrics(valid, predicted, full);
  return {seed, losses.mse, losses.l1_mean, ranks.accuracy_pct, ranks.mae_at_2_pct, valid.size()};
}

EvalReport aggregate(std::string label, std::vector<SeedMetrics> per_seed) {
  EvalReport r;
  r.label = std::move(label);
  if (per_seed.empty()) return r;
  const double n = static_cast<double>(per_seed.size());
  auto mean_std = [&](auto field, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& s : per_seed) mean += s.*field;
    mean /= n;
    double var = 0.0;
    for (const auto& s : per_seed) var += (s.*field - mean) * (s.*field - mean);
    sd = std::sqrt(var / n);
  };
  mean_std(&SeedMetrics::mse, r.mse, r.mse_std);
  mean_std(&SeedMetrics::l1_mean, r.l1_mean, r.l1_std);
  mean_std(&SeedMetrics::rank_accuracy_pct, r.rank_accuracy_pct, r.accuracy_std);
  mean_std(&SeedMetrics::mae_at_2_pct, r.mae_at_2_pct, r.mae_at_2_std);
  for (const auto& s : per_seed) r.n_eval += s.n_eval;
  r.per_seed = std::move(per_seed);
  return r;
}

void write_report(std::span<const EvalReport> reports, std::ostream& out) {
  out << "# " << kCohortDefinition << '\n';
  const bool with_std = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.per_seed.size() > 1; });
  if (with_std)
    out << "method,mse,mse_std,l1_mean,l1_std,accuracy_pct,accuracy_std,mae_at_2_pct,mae_at_2_std,n_seeds,n_eval\n";
  else
    out << "method,mse,l1_mean,accuracy_pct,mae_at_2_pct,n_seeds,n_eval\n";
  for (const auto& r : reports) {
    std::vector<std::string> row{r.label, csv::format_double(r.mse)};
    if (with_std) row.push_back(csv::format_double(r.mse_std));
    row.push_back(csv::format_double(r.l1_mean));
    if (with_std) row.push_back(csv::format_double(r.l1_std));
    row.push_back(csv::format_double(r.rank_accuracy_pct));
    if (with_std) row.push_back(csv::format_double(r.accuracy_std));
    row.push_back(csv::format_double(r.mae_at_2_pct));
    if (with_std) row.push_back(csv::format_double(r.mae_at_2_std));
    row.push_back(std::to_string(r.per_seed.size()));
    row.push_back(std::to_string(r.n_eval));
    csv::write_row(out, row);
  }
  out << "# per-seed\n";
  out << "method,seed,mse,l1_mean,accuracy_pct,mae_at_2_pct,n_eval\n";
  for (const auto& r : reports)
    for (const auto& s : r.per_seed)
      csv::write_row(out, {r.label, std::to_string(s.seed), csv::format_double(s.mse), csv::format_double(s.l1_mean),
                           csv::format_double(s.rank_accuracy_pct), csv::format_double(s.mae_at_2_pct),
                           std::to_string(s.n_eval)});
}

}  // namespace collabperf
