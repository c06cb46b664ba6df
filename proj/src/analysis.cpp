#include "collabperf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"
#include "collabperf/parallel.hpp"
#include "collabperf/rng.hpp"

namespace collabperf {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::mf: return "mf";
    case Method::ncf: return "ncf";
    case Method::ncf_factor: return "ncf_factor";
    case Method::factor_only: return "factor_only";
    case Method::scaling_baseline: return "scaling_baseline";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::mf, Method::ncf, Method::ncf_factor, Method::factor_only, Method::scaling_baseline})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected mf, ncf, ncf_factor, factor_only, "
                    "scaling_baseline)");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::string item;
  std::istringstream in{std::string(list)};
  while (std::getline(in, item, ','))
    if (auto t = csv::trim(item); !t.empty()) out.push_back(parse_method(t));
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

double Predictor::predict(const Dataset& data, std::size_t u, std::size_t i) const {
  if (const auto* m = mf()) return predict_mf(*m, u, i);
  const auto& n = *ncf();
  NCFQuery q{u, i, nullptr, nullptr};
  if (n.uses_factors()) {
    q.model_record = &data.models.at(u);
    q.task_record = &data.tasks.at(i);
  }
  return predict_ncf(n, q);
}

std::vector<double> Predictor::predict(const Dataset& data, std::span<const ScoreEntry> entries) const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(predict(data, e.model, e.task));
  return out;
}

Predictor fit_predictor(Method method, const Dataset& data, const ScoreMatrix& train, const TrainConfig& config) {
  switch (method) {
    case Method::mf: return Predictor(train_mf(train, config));
    case Method::ncf: return Predictor(train_ncf(train, {}, {}, NCFVariant::id_only, config));
    case Method::ncf_factor:
      return Predictor(train_ncf(train, data.models, data.tasks, NCFVariant::factor_enhanced, config));
    case Method::factor_only:
      return Predictor(train_ncf(train, data.models, data.tasks, NCFVariant::factor_only, config));
    case Method::scaling_baseline: break;
  }
  throw ConfigError("scaling_baseline is not a trainable predictor");
}

namespace {

template <class Fn>
auto annotate(Method method, std::uint64_t seed, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const TrainingError& e) {
    throw TrainingError(std::string(e.what()) + " [method " + std::string(to_string(method)) + ", seed " +
                            std::to_string(seed) + "]",
                        e.step());
  }
}

TrainConfig seeded(TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

struct Scored {
  std::vector<ScoreEntry> entries;
  std::vector<double> predicted;
  std::vector<ScalingCurve> curves;
  std::size_t skipped = 0;
};

Scored scaling_predictions(const Dataset& data, const ScoreMatrix& train, std::span<const ScoreEntry> valid,
                           const CurveBounds& bounds) {
  Scored s;
  for (const auto& e : valid) {
    try {
      ScalingCurve curve;
      const double p = scaling_predict_for_model(data.models[e.model], data, train, e.task, &curve, bounds);
      s.entries.push_back(e);
      s.predicted.push_back(p);
      s.curves.push_back(curve);
    } catch (const CoverageError&) {
      ++s.skipped;
    }
  }
  return s;
}

}  // namespace

BenchmarkResult run_benchmark_eval(const Dataset& data, std::span<const Method> methods,
                                   const ExperimentOptions& options) {
  if (options.seeds.empty()) throw ConfigError("at least one seed is required");
  const std::size_t S = options.seeds.size();
  struct Job {
    std::optional<SeedMetrics> metrics;
    std::vector<PredictionPoint> points;
    std::string note;
  };
  std::vector<Job> jobs(methods.size() * S);
  parallel_for(jobs.size(), options.workers, [&](std::size_t j) {
    const Method method = methods[j / S];
    const std::uint64_t seed = options.seeds[j % S];
    SplitSpec spec;
    spec.seed = seed;
    spec.validation_fraction = options.validation_fraction;
    const Split sp = split(data.scores, spec);
    Job& job = jobs[j];
    std::vector<ScoreEntry> entries;
    std::vector<double> pred;
    if (method == Method::scaling_baseline) {
      Scored s = scaling_predictions(data, sp.train, sp.valid.entries(), options.bounds);
      if (s.skipped)
        job.note = "scaling_baseline seed " + std::to_string(seed) + ": " + std::to_string(s.skipped) + " of " +
                   std::to_string(sp.valid.size()) + " validation entries lack family coverage (skipped)";
      entries = std::move(s.entries);
      pred = std::move(s.predicted);
    } else {
      const Predictor p = annotate(method, seed, [&] { return fit_predictor(method, data, sp.train, seeded(options.train, seed)); });
      entries = sp.valid.entries();
      pred = p.predict(data, entries);
    }
    if (entries.empty()) return;
    job.metrics = evaluate(entries, pred, data.scores, seed);
    for (std::size_t k = 0; k < entries.size(); ++k)
      job.points.push_back({std::string(to_string(method)), seed, data.scores.models().name(entries[k].model),
                            data.scores.tasks().name(entries[k].task), entries[k].score, pred[k]});
  });

  BenchmarkResult result;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<SeedMetrics> per_seed;
    for (std::size_t s = 0; s < S; ++s) {
      Job& job = jobs[mi * S + s];
      if (!job.note.empty()) result.notes.push_back(job.note);
      if (job.metrics) per_seed.push_back(*job.metrics);
      result.points.insert(result.points.end(), job.points.begin(), job.points.end());
    }
    if (per_seed.empty()) {
      result.notes.push_back(std::string(to_string(methods[mi])) + ": no evaluable entries for any seed");
      continue;
    }
    result.reports.push_back(aggregate(std::string(to_string(methods[mi])), std::move(per_seed)));
  }
  return result;
}

// ---------------------------------------------------------------------------

ScenarioResult run_scenario(const Dataset& data, const std::string& target, Scenario scenario,
                            const ExperimentOptions& options, Method method) {
  if (scenario == Scenario::random) throw ConfigError("run_scenario expects cpp0 or cpp2");
  if (method == Method::scaling_baseline) throw ConfigError("scenario predictor must be a CF method");
  if (options.seeds.empty()) throw ConfigError("at least one seed is required");
  const auto target_index = data.scores.models().find(target);
  if (!target_index) throw ScenarioError("target model '" + target + "' not in dataset");
  const std::size_t S = options.seeds.size();

  struct Job {
    SeedMetrics cpp;
    std::optional<SeedMetrics> scaling;
    std::vector<ScenarioTriple> triples;
    std::vector<ScalingCurve> curves;
    std::size_t prior = 0;
    std::size_t skipped = 0;
  };
  std::vector<Job> jobs(S);
  parallel_for(S, options.workers, [&](std::size_t j) {
    const std::uint64_t seed = options.seeds[j];
    SplitSpec spec;
    spec.seed = seed;
    spec.scenario = scenario;
    spec.target_model = target;
    const Split sp = split(data.scores, spec);
    Job& job = jobs[j];
    job.prior = sp.train.entries_of_model(*target_index).size();
    const std::size_t expected = scenario == Scenario::cpp0 ? 0 : 2;
    if (job.prior != expected)
      throw ConsistencyError("scenario split put " + std::to_string(job.prior) + " target entries in train, expected " +
                             std::to_string(expected));
    const Predictor p =
        annotate(method, seed, [&] { return fit_predictor(method, data, sp.train, seeded(options.train, seed)); });
    const auto& valid = sp.valid.entries();
    const auto pred = p.predict(data, valid);
    job.cpp = evaluate(valid, pred, data.scores, seed);

    Scored sc = scaling_predictions(data, sp.train, valid, options.bounds);
    job.skipped = sc.skipped;
    job.curves = sc.curves;
    for (std::size_t k = 0; k < valid.size(); ++k) {
      ScenarioTriple t{seed, data.scores.tasks().name(valid[k].task), valid[k].score, pred[k], std::nullopt};
      for (std::size_t c = 0; c < sc.entries.size(); ++c)
        if (sc.entries[c].task == valid[k].task) t.scaling = sc.predicted[c];
      job.triples.push_back(t);
    }
    if (!sc.entries.empty()) job.scaling = evaluate(sc.entries, sc.predicted, data.scores, seed);
  });

  ScenarioResult r;
  r.target = target;
  r.scenario = scenario;
  std::vector<SeedMetrics> cpp, scal;
  for (std::size_t j = 0; j < S; ++j) {
    auto& job = jobs[j];
    cpp.push_back(job.cpp);
    if (job.scaling) scal.push_back(*job.scaling);
    r.triples.insert(r.triples.end(), job.triples.begin(), job.triples.end());
    if (j == 0) r.curves = job.curves;
    r.prior_entries.push_back(job.prior);
    if (job.skipped)
      r.notes.push_back("seed " + std::to_string(options.seeds[j]) + ": scaling baseline skipped " +
                        std::to_string(job.skipped) + " task(s) without two smaller in-family models");
  }
  const std::string tag = scenario == Scenario::cpp0 ? "cpp0" : "cpp2";
  r.cpp = aggregate(tag + ":" + std::string(to_string(method)), std::move(cpp));
  if (!scal.empty()) r.scaling = aggregate(tag + ":scaling_baseline", std::move(scal));
  else r.notes.push_back("scaling baseline: no task with family coverage for '" + target + "'");
  return r;
}

// ---------------------------------------------------------------------------

void finish_loo(LooResult& r, double cut_height) {
  const std::size_t R = r.loss_matrix.size();
  const std::size_t C = r.baseline_losses.size();
  r.delta.assign(R, std::vector<double>(C, 0.0));
  r.normalized_delta.assign(R, std::vector<double>(C, 0.0));
  r.degenerate_column.assign(C, false);
  for (std::size_t a = 0; a < R; ++a)
    for (std::size_t b = 0; b < C; ++b) r.delta[a][b] = r.loss_matrix[a][b] - r.baseline_losses[b];

  for (std::size_t b = 0; b < C; ++b) {
    double mean = 0.0;
    for (std::size_t a = 0; a < R; ++a) mean += r.delta[a][b];
    mean /= static_cast<double>(R);
    double var = 0.0;
    for (std::size_t a = 0; a < R; ++a) var += (r.delta[a][b] - mean) * (r.delta[a][b] - mean);
    const double sd = std::sqrt(var / static_cast<double>(R));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      r.degenerate_column[b] = true;
      r.warnings.push_back("column '" + r.validation[b] + "' has constant delta; excluded from correlation");
      continue;
    }
    for (std::size_t a = 0; a < R; ++a) r.normalized_delta[a][b] = (r.delta[a][b] - mean) / sd;
  }

  // Pearson correlation between rows over the non-degenerate columns.
  std::vector<std::size_t> cols;
  for (std::size_t b = 0; b < C; ++b)
    if (!r.degenerate_column[b]) cols.push_back(b);
  std::vector<std::vector<double>> centered(R);
  std::vector<double> norm(R, 0.0);
  r.degenerate_row.assign(R, false);
  for (std::size_t a = 0; a < R; ++a) {
    double mean = 0.0;
    for (auto b : cols) mean += r.normalized_delta[a][b];
    mean /= std::max<std::size_t>(1, cols.size());
    for (auto b : cols) centered[a].push_back(r.normalized_delta[a][b] - mean);
    for (double v : centered[a]) norm[a] += v * v;
    norm[a] = std::sqrt(norm[a]);
    if (!(norm[a] > 1e-12)) {
      r.degenerate_row[a] = true;
      r.warnings.push_back("row '" + r.masked[a] + "' is constant; correlations set to 0");
    }
  }
  r.correlation.assign(R, std::vector<double>(R, 0.0));
  for (std::size_t a = 0; a < R; ++a) {
    r.correlation[a][a] = 1.0;
    for (std::size_t c = a + 1; c < R; ++c) {
      double v = 0.0;
      if (!r.degenerate_row[a] && !r.degenerate_row[c]) {
        for (std::size_t k = 0; k < cols.size(); ++k) v += centered[a][k] * centered[c][k];
        v = std::clamp(v / (norm[a] * norm[c]), -1.0, 1.0);
      }
      r.correlation[a][c] = r.correlation[c][a] = v;
    }
  }
  r.clustering = hierarchical_cluster(r.correlation, cut_height);
}

LooResult leave_one_out(const Dataset& data, const LooOptions& loo, const ExperimentOptions& options) {
  if (loo.method == Method::scaling_baseline) throw ConfigError("leave_one_out needs a CF method");
  if (options.seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(loo.holdout_fraction > 0.0 && loo.holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must lie in (0,1)");
  const ScoreMatrix& full = data.scores;
  const bool by_model = loo.axis == Axis::models;
  const Registry& axis_reg = by_model ? full.models() : full.tasks();
  const std::size_t E = axis_reg.size();
  if (E < 3) throw ConfigError("leave_one_out needs at least 3 entities on the chosen axis");

  LooResult r;
  r.axis = loo.axis;
  std::vector<std::vector<std::size_t>> own(E);
  for (std::size_t k = 0; k < full.size(); ++k) {
    const auto& e = full.entries()[k];
    own[by_model ? e.model : e.task].push_back(k);
  }
  std::vector<std::size_t> rows, cols;
  for (std::size_t a = 0; a < E; ++a) {
    if (own[a].empty()) {
      r.warnings.push_back("'" + axis_reg.name(a) + "' has no entries; skipped");
      continue;
    }
    rows.push_back(a);
    if (own[a].size() >= 2) cols.push_back(a);
  }
  if (cols.empty()) throw ConfigError("no entity has two or more entries to validate on");
  for (auto a : rows) r.masked.push_back(axis_reg.name(a));
  for (auto b : cols) r.validation.push_back(axis_reg.name(b));

  const std::size_t S = options.seeds.size();
  // Per seed: the holdout split, then one baseline job and one job per row.
  struct SeedSplit {
    ScoreMatrix train;
    std::vector<std::vector<ScoreEntry>> valid;  // per column
  };
  std::vector<SeedSplit> splits(S);
  for (std::size_t s = 0; s < S; ++s) {
    Rng rng(options.seeds[s] ^ 0x5851F42D4C957F2DULL);
    std::vector<bool> held(full.size(), false);
    splits[s].valid.resize(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& mine = own[cols[c]];
      auto k = static_cast<std::size_t>(std::ceil(loo.holdout_fraction * static_cast<double>(mine.size()) - 1e-9));
      k = std::clamp<std::size_t>(k, 1, mine.size() - 1);
      for (auto i : rng.sample_without_replacement(mine.size(), k)) {
        held[mine[i]] = true;
        splits[s].valid[c].push_back(full.entries()[mine[i]]);
      }
    }
    std::vector<ScoreEntry> train;
    for (std::size_t k = 0; k < full.size(); ++k)
      if (!held[k]) train.push_back(full.entries()[k]);
    splits[s].train = full.with_entries(std::move(train));
  }

  const std::size_t per_seed = rows.size() + 1;  // job 0 = baseline
  std::vector<std::vector<double>> losses(S * per_seed);
  parallel_for(S * per_seed, options.workers, [&](std::size_t j) {
    const std::size_t s = j / per_seed, slot = j % per_seed;
    const std::uint64_t seed = options.seeds[s];
    ScoreMatrix train = splits[s].train;
    if (slot > 0) train = by_model ? drop_model(train, rows[slot - 1]) : drop_task(train, rows[slot - 1]);
    const Predictor p =
        annotate(loo.method, seed, [&] { return fit_predictor(loo.method, data, train, seeded(options.train, seed)); });
    auto& out = losses[j];
    for (const auto& v : splits[s].valid) {
      const auto pred = p.predict(data, v);
      std::vector<double> truth;
      for (const auto& e : v) truth.push_back(e.score);
      out.push_back(score_losses(pred, truth).mse);
    }
  });

  r.baseline_losses.assign(cols.size(), 0.0);
  r.loss_matrix.assign(rows.size(), std::vector<double>(cols.size(), 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t c = 0; c < cols.size(); ++c) r.baseline_losses[c] += losses[s * per_seed][c] / S;
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t c = 0; c < cols.size(); ++c) r.loss_matrix[a][c] += losses[s * per_seed + a + 1][c] / S;
  }
  finish_loo(r, loo.cut_height);
  return r;
}

// ---------------------------------------------------------------------------

std::vector<SparsityRow> sparsity_sweep(const Dataset& data, std::span<const double> levels,
                                        const ExperimentOptions& options, Method method) {
  if (method == Method::scaling_baseline) throw ConfigError("sparsity_sweep needs a CF method");
  if (options.seeds.empty()) throw ConfigError("at least one seed is required");
  const std::size_t S = options.seeds.size(), L = levels.size();
  std::vector<Split> splits(S);
  for (std::size_t s = 0; s < S; ++s) {
    SplitSpec spec;
    spec.seed = options.seeds[s];
    spec.validation_fraction = options.validation_fraction;
    splits[s] = split(data.scores, spec);
  }
  // Validate reachability up front so range errors surface before training.
  std::vector<ScoreMatrix> trains(S * L);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t s = 0; s < S; ++s)
      trains[l * S + s] = mask_to_sparsity(splits[s].train, levels[l], options.seeds[s]);

  std::vector<SeedMetrics> metrics(S * L);
  parallel_for(S * L, options.workers, [&](std::size_t j) {
    const std::size_t s = j % S;
    const std::uint64_t seed = options.seeds[s];
    const Predictor p = annotate(method, seed, [&] {
      return fit_predictor(method, data, trains[j], seeded(options.train, seed));
    });
    const auto& valid = splits[s].valid.entries();
    metrics[j] = evaluate(valid, p.predict(data, valid), data.scores, seed);
  });

  std::vector<SparsityRow> out;
  for (std::size_t l = 0; l < L; ++l) {
    SparsityRow row;
    row.target_sparsity = levels[l];
    std::vector<SeedMetrics> per;
    for (std::size_t s = 0; s < S; ++s) {
      row.achieved_sparsity += trains[l * S + s].sparsity() / static_cast<double>(S);
      per.push_back(metrics[l * S + s]);
    }
    row.report = aggregate(std::string(to_string(method)) + "@" + csv::format_double(levels[l]), std::move(per));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace collabperf
