#include "collabperf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"
#include "collabperf/rng.hpp"

namespace collabperf {

Registry::Registry(std::vector<std::string> names) {
  for (auto& n : names) add(n);
}

std::size_t Registry::add(const std::string& name) {
  auto [it, inserted] = index_.emplace(name, names_.size());
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<std::size_t> Registry::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Registry::at(std::string_view name) const {
  auto i = find(name);
  if (!i) throw IndexError("unknown identifier '" + std::string(name) + "'");
  return *i;
}

// ---------------------------------------------------------------------------

ScoreMatrix::ScoreMatrix(Registry models, Registry tasks, std::vector<ScoreEntry> entries)
    : models_(std::move(models)), tasks_(std::move(tasks)), entries_(std::move(entries)) {
  lookup_.reserve(entries_.size());
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (e.model >= models_.size() || e.task >= tasks_.size())
      throw IndexError("entry index out of registry bounds");
    if (!(e.score >= 0.0 && e.score <= 1.0))
      throw ValidationError("score " + csv::format_double(e.score) + " for (" + models_.name(e.model) + ", " +
                            tasks_.name(e.task) + ") outside [0,1]");
    if (!lookup_.emplace(key(e.model, e.task), k).second)
      throw ValidationError("duplicate entry (" + models_.name(e.model) + ", " + tasks_.name(e.task) + ")");
  }
}

double ScoreMatrix::density() const {
  const double grid = static_cast<double>(n_models()) * static_cast<double>(n_tasks());
  return grid > 0 ? static_cast<double>(entries_.size()) / grid : 0.0;
}

std::optional<double> ScoreMatrix::score(std::size_t model, std::size_t task) const {
  auto it = lookup_.find(key(model, task));
  if (it == lookup_.end()) return std::nullopt;
  return entries_[it->second].score;
}

ScoreMatrix ScoreMatrix::with_entries(std::vector<ScoreEntry> entries) const {
  return ScoreMatrix(models_, tasks_, std::move(entries));
}

std::vector<std::size_t> ScoreMatrix::entries_of_model(std::size_t model) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < entries_.size(); ++k)
    if (entries_[k].model == model) out.push_back(k);
  return out;
}

std::vector<std::size_t> ScoreMatrix::entries_of_task(std::size_t task) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < entries_.size(); ++k)
    if (entries_[k].task == task) out.push_back(k);
  return out;
}

std::uint64_t ScoreMatrix::hash() const {
  std::ostringstream os;
  write_scores(*this, os);
  return csv::fnv1a(os.str());
}

// ---------------------------------------------------------------------------
// scores.csv

namespace {

struct RawRow {
  std::size_t line;
  std::string model, task, source;
  double score;
};

std::vector<RawRow> parse_score_rows(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) throw ParseError("empty scores file (expected header model,task,score,source)", 1);
  std::vector<std::string> header;
  for (auto& c : rows[0].cells) header.push_back(csv::trim(c));
  const bool with_source = header == std::vector<std::string>{"model", "task", "score", "source"};
  if (!with_source && header != std::vector<std::string>{"model", "task", "score"})
    throw ParseError("header must be 'model,task,score,source'", rows[0].line);

  std::vector<RawRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.cells.size() != header.size() && !(with_source && row.cells.size() == 3))
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " + std::to_string(row.cells.size()),
                       row.line);
    RawRow raw{row.line, csv::trim(row.cells[0]), csv::trim(row.cells[1]), "", 0.0};
    if (raw.model.empty() || raw.task.empty()) throw ParseError("empty model or task identifier", row.line);
    if (!csv::parse_double(row.cells[2], raw.score))
      throw ParseError("score '" + row.cells[2] + "' is not a number", row.line);
    if (row.cells.size() > 3) raw.source = csv::trim(row.cells[3]);
    out.push_back(std::move(raw));
  }
  return out;
}

ScoreMatrix assemble(const std::vector<RawRow>& rows) {
  Registry models, tasks;
  std::vector<ScoreEntry> entries;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> first_line;
  std::vector<std::string> warnings;
  for (const auto& r : rows) {
    const std::size_t m = models.add(r.model);
    const std::size_t t = tasks.add(r.task);
    auto [it, inserted] = first_line.emplace(std::make_pair(m, t), r.line);
    if (!inserted) {
      warnings.push_back("line " + std::to_string(r.line) + ": duplicate (" + r.model + ", " + r.task +
                         ") ignored; keeping line " + std::to_string(it->second));
      continue;
    }
    entries.push_back({m, t, r.score, r.source});
  }
  ScoreMatrix matrix(std::move(models), std::move(tasks), std::move(entries));
  for (auto& w : warnings) matrix.add_warning(std::move(w));
  return matrix;
}

}  // namespace

ScoreMatrix parse_scores(std::istream& in) {
  auto rows = parse_score_rows(in);
  for (const auto& r : rows) {
    if (!(r.score >= 0.0 && r.score <= 1.0))
      throw ValidationError("line " + std::to_string(r.line) + ": score " + csv::format_double(r.score) + " for (" +
                            r.model + ", " + r.task + ") outside [0,1]");
  }
  return assemble(rows);
}

ScoreMatrix load_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return parse_scores(in);
}

ScoreMatrix load_raw_scores_minmax(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  auto rows = parse_score_rows(in);
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& r : rows) {
    auto [it, inserted] = range.emplace(r.task, std::make_pair(r.score, r.score));
    if (!inserted) {
      it->second.first = std::min(it->second.first, r.score);
      it->second.second = std::max(it->second.second, r.score);
    }
  }
  for (auto& r : rows) {
    const auto [lo, hi] = range[r.task];
    r.score = hi > lo ? (r.score - lo) / (hi - lo) : 0.5;
  }
  return assemble(rows);
}

void write_scores(const ScoreMatrix& matrix, std::ostream& out) {
  out << "model,task,score,source\n";
  for (const auto& e : matrix.entries()) {
    csv::write_row(out, {matrix.models().name(e.model), matrix.tasks().name(e.task), csv::format_double(e.score),
                         e.source});
  }
}

void write_scores(const ScoreMatrix& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  write_scores(matrix, out);
}

// ---------------------------------------------------------------------------
// Factor tables

const std::array<FactorSpec, kFactorCount>& factor_schema() {
  using K = FactorKind;
  using O = FactorOwner;
  using T = NumericTransform;
  static const std::array<FactorSpec, kFactorCount> schema{{
      {"family", O::model, K::categorical, T::none},
      {"pretrain_tokens_b", O::model, K::numerical, T::log1p},
      {"params_m", O::model, K::numerical, T::log1p},
      {"gpu_hours", O::model, K::numerical, T::log1p},
      {"flops", O::model, K::numerical, T::log1p},
      {"context_window", O::model, K::categorical, T::none},
      {"batch_size_m", O::model, K::categorical, T::none},
      {"layers", O::model, K::numerical, T::identity},
      {"num_heads", O::model, K::numerical, T::identity},
      {"kv_size", O::model, K::numerical, T::log1p},
      {"bottleneck_activation_size", O::model, K::numerical, T::log1p},
      {"carbon_tco2eq", O::model, K::numerical, T::log1p},
      {"ability", O::task, K::categorical, T::none},
      {"task_family", O::task, K::categorical, T::none},
      {"output_format", O::task, K::categorical, T::none},
      {"few_shot", O::task, K::categorical, T::none},
  }};
  return schema;
}

std::optional<std::size_t> find_factor(std::string_view name) {
  const auto& s = factor_schema();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i].name == name) return i;
  return std::nullopt;
}

namespace {

// Maps header columns onto schema slots [offset, offset+count).
std::vector<std::size_t> map_header(const csv::Row& header, std::string_view id_column, std::size_t offset,
                                    std::size_t count) {
  const auto& schema = factor_schema();
  if (header.cells.empty() || csv::trim(header.cells[0]) != id_column)
    throw SchemaError("first column must be '" + std::string(id_column) + "'");
  std::vector<std::size_t> slots;
  std::vector<bool> seen(count, false);
  for (std::size_t c = 1; c < header.cells.size(); ++c) {
    const std::string name = csv::trim(header.cells[c]);
    std::optional<std::size_t> slot;
    for (std::size_t i = 0; i < count; ++i)
      if (schema[offset + i].name == name) slot = i;
    if (!slot) throw SchemaError("unknown column '" + name + "'");
    if (seen[*slot]) throw SchemaError("duplicate column '" + name + "'");
    seen[*slot] = true;
    slots.push_back(*slot);
  }
  for (std::size_t i = 0; i < count; ++i)
    if (!seen[i]) throw SchemaError("missing column '" + std::string(schema[offset + i].name) + "'");
  return slots;
}

template <std::size_t N>
void parse_factor_cells(const csv::Row& row, const std::vector<std::size_t>& slots, std::size_t offset,
                        std::array<FactorValue, N>& out) {
  const auto& schema = factor_schema();
  for (std::size_t c = 0; c < slots.size(); ++c) {
    const std::string cell = csv::trim(row.cells[c + 1]);
    const FactorSpec& spec = schema[offset + slots[c]];
    FactorValue& v = out[slots[c]];
    if (cell.empty()) {
      v = FactorValue{};
      continue;
    }
    v.present = true;
    if (spec.kind == FactorKind::categorical) {
      v.category = cell;
    } else {
      if (!csv::parse_double(cell, v.number))
        throw ParseError("column '" + std::string(spec.name) + "': '" + cell + "' is not a number", row.line);
      if (v.number < 0) throw ParseError("column '" + std::string(spec.name) + "' must be nonnegative", row.line);
    }
  }
}

template <class Record, std::size_t N>
RecordTable<Record> parse_table(std::istream& in, std::string_view id_column, std::size_t offset) {
  auto rows = csv::read(in);
  if (rows.empty()) throw ParseError("empty factor file", 1);
  const auto slots = map_header(rows[0], id_column, offset, N);
  RecordTable<Record> table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.cells.size() != slots.size() + 1)
      throw ParseError("expected " + std::to_string(slots.size() + 1) + " cells, got " +
                           std::to_string(row.cells.size()),
                       row.line);
    Record rec;
    rec.identifier = csv::trim(row.cells[0]);
    if (rec.identifier.empty()) throw ParseError("empty identifier", row.line);
    if (table.ids.find(rec.identifier))
      throw LinkageError("duplicate identifier '" + rec.identifier + "' (line " + std::to_string(row.line) + ")");
    parse_factor_cells<N>(row, slots, offset, rec.factors);
    table.ids.add(rec.identifier);
    table.records.push_back(std::move(rec));
  }
  return table;
}

template <class Record>
void write_table(const RecordTable<Record>& t, std::ostream& out, std::string_view id_column, std::size_t offset,
                 std::size_t count) {
  const auto& schema = factor_schema();
  std::vector<std::string> header{std::string(id_column)};
  for (std::size_t i = 0; i < count; ++i) header.emplace_back(schema[offset + i].name);
  csv::write_row(out, header);
  for (const auto& rec : t.records) {
    std::vector<std::string> cells{rec.identifier};
    for (std::size_t i = 0; i < count; ++i) {
      const auto& v = rec.factors[i];
      if (!v.present)
        cells.emplace_back();
      else if (schema[offset + i].kind == FactorKind::categorical)
        cells.push_back(v.category);
      else
        cells.push_back(csv::format_double(v.number));
    }
    csv::write_row(out, cells);
  }
}

}  // namespace

ModelTable parse_model_factors(std::istream& in) {
  return parse_table<ModelRecord, kModelFactorCount>(in, "model", 0);
}
TaskTable parse_task_factors(std::istream& in) {
  return parse_table<TaskRecord, kTaskFactorCount>(in, "task", kModelFactorCount);
}

ModelTable load_model_factors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return parse_model_factors(in);
}
TaskTable load_task_factors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return parse_task_factors(in);
}

void write_model_factors(const ModelTable& t, std::ostream& out) {
  write_table(t, out, "model", 0, kModelFactorCount);
}
void write_task_factors(const TaskTable& t, std::ostream& out) {
  write_table(t, out, "task", kModelFactorCount, kTaskFactorCount);
}

void check_linkage(const ScoreMatrix& matrix, const ModelTable& models, const TaskTable& tasks) {
  std::vector<std::string> missing_models, missing_tasks;
  for (const auto& m : matrix.models().names())
    if (!models.find(m)) missing_models.push_back(m);
  for (const auto& t : matrix.tasks().names())
    if (!tasks.find(t)) missing_tasks.push_back(t);
  if (missing_models.empty() && missing_tasks.empty()) return;
  std::string msg = "identifiers in scores without factor rows:";
  for (const auto& m : missing_models) msg += " model '" + m + "'";
  for (const auto& t : missing_tasks) msg += " task '" + t + "'";
  throw LinkageError(msg);
}

Dataset make_dataset(ScoreMatrix scores, const ModelTable& models, const TaskTable& tasks) {
  check_linkage(scores, models, tasks);
  Dataset d;
  for (const auto& m : scores.models().names()) d.models.push_back(*models.find(m));
  for (const auto& t : scores.tasks().names()) d.tasks.push_back(*tasks.find(t));
  d.scores = std::move(scores);
  return d;
}

Dataset load_dataset(const std::string& scores_path, const std::string& models_path, const std::string& tasks_path) {
  return make_dataset(load_scores(scores_path), load_model_factors(models_path), load_task_factors(tasks_path));
}

Dataset load_dataset_dir(const std::string& dir) {
  const std::filesystem::path p(dir);
  return load_dataset((p / "scores.csv").string(), (p / "models.csv").string(), (p / "tasks.csv").string());
}

std::uint64_t Dataset::hash() const {
  std::ostringstream os;
  write_scores(scores, os);
  ModelTable mt;
  for (const auto& r : models) mt.records.push_back(r);
  TaskTable tt;
  for (const auto& r : tasks) tt.records.push_back(r);
  write_model_factors(mt, os);
  write_task_factors(tt, os);
  return csv::fnv1a(os.str());
}

// ---------------------------------------------------------------------------
// Splits

namespace {

Split partition(const ScoreMatrix& m, const std::vector<bool>& to_valid) {
  std::vector<ScoreEntry> train, valid;
  for (std::size_t k = 0; k < m.size(); ++k) (to_valid[k] ? valid : train).push_back(m.entries()[k]);
  return {m.with_entries(std::move(train)), m.with_entries(std::move(valid))};
}

}  // namespace

Split split(const ScoreMatrix& matrix, const SplitSpec& spec) {
  Rng rng(spec.seed);
  std::vector<bool> to_valid(matrix.size(), false);
  switch (spec.scenario) {
    case Scenario::random: {
      if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in (0,1)");
      const auto k = static_cast<std::size_t>(
          std::ceil(spec.validation_fraction * static_cast<double>(matrix.size()) - 1e-9));
      for (auto i : rng.sample_without_replacement(matrix.size(), k)) to_valid[i] = true;
      break;
    }
    case Scenario::cpp0:
    case Scenario::cpp2: {
      const auto target = matrix.models().find(spec.target_model);
      if (!target) throw ScenarioError("target model '" + spec.target_model + "' not in registry");
      const auto own = matrix.entries_of_model(*target);
      if (own.empty()) throw ScenarioError("target model '" + spec.target_model + "' has no observed entries");
      for (auto k : own) to_valid[k] = true;
      if (spec.scenario == Scenario::cpp2) {
        if (own.size() < 3)
          throw ScenarioError("cpp2 needs at least 3 observed entries for '" + spec.target_model + "', found " +
                              std::to_string(own.size()));
        for (auto i : rng.sample_without_replacement(own.size(), 2)) to_valid[own[i]] = false;
      }
      break;
    }
  }
  return partition(matrix, to_valid);
}

std::size_t removal_count(std::size_t grid, std::size_t observed, double target_sparsity) {
  const double missing = static_cast<double>(grid - observed);
  const double need = target_sparsity * static_cast<double>(grid) - missing;
  if (need <= 0) return 0;
  return static_cast<std::size_t>(std::ceil(need - 1e-9));
}

ScoreMatrix mask_to_sparsity(const ScoreMatrix& train, double target_sparsity, std::uint64_t seed) {
  if (!(target_sparsity >= 0.0 && target_sparsity < 1.0))
    throw RangeError("target sparsity must lie in [0,1)");
  const std::size_t grid = train.n_models() * train.n_tasks();
  const double current = 1.0 - static_cast<double>(train.size()) / static_cast<double>(grid);
  if (target_sparsity < current - 1e-12)
    throw RangeError("target sparsity " + csv::format_double(target_sparsity) + " below current sparsity " +
                     csv::format_double(current));
  const std::size_t remove = removal_count(grid, train.size(), target_sparsity);
  if (remove >= train.size()) throw RangeError("target sparsity would remove every training entry");
  Rng rng(seed);
  std::vector<bool> drop(train.size(), false);
  for (auto i : rng.sample_without_replacement(train.size(), remove)) drop[i] = true;
  std::vector<ScoreEntry> kept;
  for (std::size_t k = 0; k < train.size(); ++k)
    if (!drop[k]) kept.push_back(train.entries()[k]);
  return train.with_entries(std::move(kept));
}

ScoreMatrix drop_model(const ScoreMatrix& matrix, std::size_t model) {
  std::vector<ScoreEntry> kept;
  for (const auto& e : matrix.entries())
    if (e.model != model) kept.push_back(e);
  return matrix.with_entries(std::move(kept));
}

ScoreMatrix drop_task(const ScoreMatrix& matrix, std::size_t task) {
  std::vector<ScoreEntry> kept;
  for (const auto& e : matrix.entries())
    if (e.task != task) kept.push_back(e);
  return matrix.with_entries(std::move(kept));
}

}  // namespace collabperf
