#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace collabperf {

/// Ordered name registry; index = order of first insertion.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::vector<std::string> names);

  std::size_t add(const std::string& name);
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t at(std::string_view name) const;  // throws IndexError
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool operator==(const Registry& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ScoreEntry {
  std::size_t model = 0;
  std::size_t task = 0;
  double score = 0.0;
  std::string source;

  bool operator==(const ScoreEntry&) const = default;
};

/// Sparse model x task matrix of normalized scores. Immutable once built;
/// construction enforces range, bounds and uniqueness.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(Registry models, Registry tasks, std::vector<ScoreEntry> entries);

  const Registry& models() const { return models_; }
  const Registry& tasks() const { return tasks_; }
  const std::vector<ScoreEntry>& entries() const { return entries_; }
  std::size_t n_models() const { return models_.size(); }
  std::size_t n_tasks() const { return tasks_.size(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double density() const;
  double sparsity() const { return 1.0 - density(); }

  std::optional<double> score(std::size_t model, std::size_t task) const;
  bool contains(std::size_t model, std::size_t task) const { return lookup_.count(key(model, task)) > 0; }

  /// Same registries, different entry set.
  ScoreMatrix with_entries(std::vector<ScoreEntry> entries) const;

  std::vector<std::size_t> entries_of_model(std::size_t model) const;
  std::vector<std::size_t> entries_of_task(std::size_t task) const;

  /// Fingerprint over registries and entries (order-sensitive).
  std::uint64_t hash() const;

  /// Messages collected while loading (e.g. dropped duplicates).
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  static std::uint64_t key(std::size_t m, std::size_t t) { return (static_cast<std::uint64_t>(m) << 32) | t; }

  Registry models_;
  Registry tasks_;
  std::vector<ScoreEntry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
  std::vector<std::string> warnings_;
};

ScoreMatrix load_scores(const std::string& path);
ScoreMatrix parse_scores(std::istream& in);
void write_scores(const ScoreMatrix& matrix, std::ostream& out);
void write_scores(const ScoreMatrix& matrix, const std::string& path);

/// Raw (unnormalized) score ingestion: per-task min-max scaling onto [0,1].
/// A task whose observed values are all equal maps to 0.5.
ScoreMatrix load_raw_scores_minmax(const std::string& path);

// ---------------------------------------------------------------------------
// Descriptive factors

enum class FactorKind { categorical, numerical };
enum class FactorOwner { model, task };
enum class NumericTransform { none, identity, log1p };

struct FactorSpec {
  std::string_view name;  // CSV column
  FactorOwner owner;
  FactorKind kind;
  NumericTransform transform;
};

inline constexpr std::size_t kModelFactorCount = 12;
inline constexpr std::size_t kTaskFactorCount = 4;
inline constexpr std::size_t kFactorCount = kModelFactorCount + kTaskFactorCount;

/// Fixed schema: 12 model factors followed by 4 task factors.
const std::array<FactorSpec, kFactorCount>& factor_schema();
std::optional<std::size_t> find_factor(std::string_view name);

struct FactorValue {
  bool present = false;
  double number = 0.0;   // numerical factors; 0 when missing
  std::string category;  // categorical factors; empty when missing

  bool operator==(const FactorValue&) const = default;
};

struct ModelRecord {
  std::string identifier;
  std::array<FactorValue, kModelFactorCount> factors{};

  const std::string& family() const { return factors[0].category; }
  double params_m() const { return factors[2].number; }
  bool has_params() const { return factors[2].present; }
};

struct TaskRecord {
  std::string identifier;
  std::array<FactorValue, kTaskFactorCount> factors{};
};

/// Positions of named model factors inside ModelRecord::factors.
namespace model_factor {
inline constexpr std::size_t family = 0, pretrain_tokens_b = 1, params_m = 2, gpu_hours = 3, flops = 4,
                             context_window = 5, batch_size_m = 6, layers = 7, num_heads = 8, kv_size = 9,
                             bottleneck_activation_size = 10, carbon_tco2eq = 11;
}
namespace task_factor {
inline constexpr std::size_t ability = 0, task_family = 1, output_format = 2, few_shot = 3;
}

template <class Record>
struct RecordTable {
  std::vector<Record> records;
  Registry ids;

  const Record* find(std::string_view id) const {
    auto i = ids.find(id);
    return i ? &records[*i] : nullptr;
  }
};

using ModelTable = RecordTable<ModelRecord>;
using TaskTable = RecordTable<TaskRecord>;

ModelTable load_model_factors(const std::string& path);
TaskTable load_task_factors(const std::string& path);
ModelTable parse_model_factors(std::istream& in);
TaskTable parse_task_factors(std::istream& in);
void write_model_factors(const ModelTable& t, std::ostream& out);
void write_task_factors(const TaskTable& t, std::ostream& out);

/// Throws LinkageError listing every identifier in `matrix` missing from the tables.
void check_linkage(const ScoreMatrix& matrix, const ModelTable& models, const TaskTable& tasks);

struct Dataset {
  ScoreMatrix scores;
  // Records aligned with scores.models() / scores.tasks() indices.
  std::vector<ModelRecord> models;
  std::vector<TaskRecord> tasks;

  std::uint64_t hash() const;
};

/// Loads scores.csv, models.csv and tasks.csv and aligns the records.
Dataset load_dataset(const std::string& scores_path, const std::string& models_path, const std::string& tasks_path);
Dataset load_dataset_dir(const std::string& dir);
Dataset make_dataset(ScoreMatrix scores, const ModelTable& models, const TaskTable& tasks);

// ---------------------------------------------------------------------------
// Splitting and masking

enum class Scenario { random, cpp0, cpp2 };

struct SplitSpec {
  std::uint64_t seed = 1;
  double validation_fraction = 0.05;
  Scenario scenario = Scenario::random;
  std::string target_model;  // cpp0 / cpp2
};

struct Split {
  ScoreMatrix train;
  ScoreMatrix valid;
};

Split split(const ScoreMatrix& matrix, const SplitSpec& spec);

/// Uniformly drops the fewest train entries so that the full-grid sparsity
/// reaches `target_sparsity`.
ScoreMatrix mask_to_sparsity(const ScoreMatrix& train, double target_sparsity, std::uint64_t seed);

/// Number of entries mask_to_sparsity removes.
std::size_t removal_count(std::size_t grid, std::size_t observed, double target_sparsity);

/// Entries of `matrix` whose model (or task) is not `index`.
ScoreMatrix drop_model(const ScoreMatrix& matrix, std::size_t model);
ScoreMatrix drop_task(const ScoreMatrix& matrix, std::size_t task);

}  // namespace collabperf
