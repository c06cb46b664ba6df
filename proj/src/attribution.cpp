#include "collabperf/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"

namespace collabperf {

namespace {

// Neumaier compensated summation.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

void require_factor_model(const NCFModel& model) {
  if (!model.uses_factors()) throw InputError("factor masking needs a factor_enhanced or factor_only model");
}

std::size_t factor_index(std::string_view name) {
  auto f = find_factor(name);
  if (!f) throw SchemaError("unknown factor '" + std::string(name) + "'");
  return *f;
}

NCFQuery query_for(const AttributionSet& set, const ScoreEntry& e) {
  NCFQuery q;
  q.model_index = e.model;
  q.task_index = e.task;
  q.model_record = &set.models[e.model];
  q.task_record = &set.tasks[e.task];
  return q;
}

}  // namespace

MaskedNCF::MaskedNCF(const NCFModel& model, FactorMask mask) : model_(&model), mask_(mask) {
  require_factor_model(model);
}

MaskedNCF MaskedNCF::mask(std::size_t factor) const {
  if (factor >= kFactorCount) throw SchemaError("factor index out of schema");
  FactorMask m = mask_;
  m.set(factor);
  return MaskedNCF(*model_, m);
}

MaskedNCF MaskedNCF::mask(std::string_view factor_name) const { return mask(factor_index(factor_name)); }

MaskedNCF mask_factor(const NCFModel& model, std::string_view factor_name) {
  return MaskedNCF(model).mask(factor_name);
}

double value_function(const NCFModel& model, const AttributionSet& valid, const FactorMask& active) {
  require_factor_model(model);
  if (valid.entries.empty()) throw InputError("value_function: empty validation set");
  const FactorMask masked = ~active;
  Accumulator acc;
  for (const auto& e : valid.entries) {
    const double r = forward(model, query_for(valid, e), masked) - e.score;
    acc.add(r * r);
  }
  return -acc.value() / static_cast<double>(valid.entries.size());
}

std::vector<double> shapley_from_table(std::span<const double> values, std::size_t players) {
  if (players > kMaxShapleyPlayers) throw BudgetError("too many players for exact enumeration");
  const std::size_t subsets = std::size_t{1} << players;
  if (values.size() != subsets) throw InputError("coalition table must have 2^players entries");
  // weight(s) = s! (k-s-1)! / k! = 1 / (k * C(k-1, s)); binomials are exact in double here.
  std::vector<double> weight(players, 0.0);
  for (std::size_t s = 0; s < players; ++s) {
    double c = 1.0;
    for (std::size_t j = 1; j <= s; ++j) c = c * static_cast<double>(players - 1 - s + j) / static_cast<double>(j);
    weight[s] = 1.0 / (static_cast<double>(players) * std::round(c));
  }
  std::vector<double> phi(players, 0.0);
  for (std::size_t i = 0; i < players; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    Accumulator acc;
    for (std::size_t S = 0; S < subsets; ++S) {
      if (S & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(S));
      acc.add(weight[s] * (values[S | bit] - values[S]));
    }
    phi[i] = acc.value();
  }
  return phi;
}

double ShapleyReport::efficiency_gap() const {
  Accumulator acc;
  for (double p : mean) acc.add(p);
  return std::abs(acc.value() - (v_all - v_none));
}

std::vector<std::size_t> all_factors() {
  std::vector<std::size_t> f(kFactorCount);
  std::iota(f.begin(), f.end(), 0);
  return f;
}

ShapleyReport exact_shapley(const NCFModel& model, const AttributionSet& valid, std::span<const std::size_t> players,
                            unsigned workers) {
  require_factor_model(model);
  if (valid.entries.empty()) throw InputError("exact_shapley: empty validation set");
  const std::size_t k = players.size();
  if (k > kMaxShapleyPlayers)
    throw BudgetError("exact Shapley over " + std::to_string(k) + " factors exceeds the enumeration budget of " +
                      std::to_string(kMaxShapleyPlayers) + "; use a sampling estimator");
  FactorMask in_game;
  for (auto f : players) {
    if (f >= kFactorCount) throw SchemaError("factor index out of schema");
    if (in_game[f]) throw InputError("duplicate factor in player set");
    in_game.set(f);
  }

  const std::size_t subsets = std::size_t{1} << k;
  const std::size_t n_inst = valid.entries.size();
  std::vector<std::vector<double>> inst_phi(n_inst);
  std::vector<double> inst_full(n_inst), inst_empty(n_inst);

  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<double> table(subsets);
    const std::size_t width = model.layers.front().out;
    std::vector<double> z(width);
    for (std::size_t t = begin; t < end; ++t) {
      const auto& e = valid.entries[t];
      const LayerOneParts parts = layer_one_parts(model, query_for(valid, e));
      // Contributions of factors outside the game are always on.
      std::vector<double> fixed = parts.base;
      for (std::size_t f = 0; f < kFactorCount; ++f) {
        if (in_game[f] || parts.factor[f].empty()) continue;
        for (std::size_t r = 0; r < width; ++r) fixed[r] += parts.factor[f][r];
      }
      for (std::size_t S = 0; S < subsets; ++S) {
        z = fixed;
        for (std::size_t j = 0; j < k; ++j) {
          if (!(S >> j & 1)) continue;
          const auto& c = parts.factor[players[j]];
          if (c.empty()) continue;
          for (std::size_t r = 0; r < width; ++r) z[r] += c[r];
        }
        const double err = head_from_preactivation(model, z) - e.score;
        table[S] = -err * err;
      }
      inst_phi[t] = shapley_from_table(table, k);
      inst_full[t] = table[subsets - 1];
      inst_empty[t] = table[0];
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_inst)));
  if (workers == 1) {
    run(0, n_inst);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_inst + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n_inst, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& th : pool) th.join();
  }

  ShapleyReport report;
  report.factors.assign(players.begin(), players.end());
  report.mean.resize(k);
  report.mean_abs.resize(k);
  report.stddev.resize(k);
  report.per_instance.assign(k, std::vector<double>(n_inst));
  const double n = static_cast<double>(n_inst);
  for (std::size_t j = 0; j < k; ++j) {
    Accumulator sum, sum_abs;
    for (std::size_t t = 0; t < n_inst; ++t) {
      report.per_instance[j][t] = inst_phi[t][j];
      sum.add(inst_phi[t][j]);
      sum_abs.add(std::abs(inst_phi[t][j]));
    }
    report.mean[j] = sum.value() / n;
    report.mean_abs[j] = sum_abs.value() / n;
    Accumulator var;
    for (std::size_t t = 0; t < n_inst; ++t) {
      const double dlt = inst_phi[t][j] - report.mean[j];
      var.add(dlt * dlt);
    }
    report.stddev[j] = std::sqrt(var.value() / n);
  }
  Accumulator full, empty;
  for (std::size_t t = 0; t < n_inst; ++t) {
    full.add(inst_full[t]);
    empty.add(inst_empty[t]);
  }
  report.v_all = full.value() / n;
  report.v_none = empty.value() / n;
  report.ranking.resize(k);
  std::iota(report.ranking.begin(), report.ranking.end(), 0);
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return report.mean[a] > report.mean[b]; });
  return report;
}

void write_shapley_csv(const ShapleyReport& report, std::ostream& out) {
  out << "# " << report.convention << '\n';
  out << "factor,kind,mean_shapley,std_over_instances,mean_abs_shapley\n";
  const auto& schema = factor_schema();
  for (auto j : report.ranking) {
    const auto& spec = schema[report.factors[j]];
    csv::write_row(out, {std::string(spec.name), spec.kind == FactorKind::categorical ? "categorical" : "numerical",
                         csv::format_double(report.mean[j]), csv::format_double(report.stddev[j]),
                         csv::format_double(report.mean_abs[j])});
  }
}

void write_shapley_instances_csv(const ShapleyReport& report, const AttributionSet& valid, const ScoreMatrix& names,
                                 std::ostream& out) {
  out << "factor,instance,model,task,value\n";
  const auto& schema = factor_schema();
  for (auto j : report.ranking) {
    for (std::size_t t = 0; t < valid.entries.size(); ++t) {
      const auto& e = valid.entries[t];
      csv::write_row(out, {std::string(schema[report.factors[j]].name), std::to_string(t), names.models().name(e.model),
                           names.tasks().name(e.task), csv::format_double(report.per_instance[j][t])});
    }
  }
}

}  // namespace collabperf
