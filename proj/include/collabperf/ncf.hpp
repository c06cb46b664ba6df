#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collabperf/dataset.hpp"
#include "collabperf/train_config.hpp"

namespace collabperf {

enum class NCFVariant { id_only, factor_enhanced, factor_only };

std::string_view to_string(NCFVariant v);
NCFVariant parse_variant(std::string_view s);  // throws ConfigError

/// Bit f set = factor f (schema order) is masked out at inference.
using FactorMask = std::bitset<kFactorCount>;

/// Fixed (non-learned) half of the factor encoder: category vocabularies
/// and per-factor standardization of transformed numerical values. The
/// learned half (embedding rows, projections) lives in NCFModel::params.
struct FactorEncoder {
  int width = 8;
  std::array<std::vector<std::string>, kFactorCount> vocab;  // categorical factors only
  std::array<double, kFactorCount> mean{};
  std::array<double, kFactorCount> scale = [] {
    std::array<double, kFactorCount> a;
    a.fill(1.0);
    return a;
  }();

  /// Vocabularies in first-seen order; statistics over present values.
  static FactorEncoder fit(std::span<const ModelRecord> models, std::span<const TaskRecord> tasks, int width);

  /// Row of `category` in the factor's table; unseen categories map to the
  /// out-of-vocabulary row, which is always the last one.
  int category_row(std::size_t factor, std::string_view category) const;
  int oov_row(std::size_t factor) const { return static_cast<int>(vocab[factor].size()); }
  double standardize(std::size_t factor, double raw) const;

  /// Fingerprint of schema, width, vocabularies and statistics.
  std::uint64_t hash() const;
};

/// Fingerprint of the compiled factor schema (names, kinds, transforms).
std::uint64_t factor_schema_hash();

/// Encoded factor inputs for one (model, task) pair, schema order.
/// row < 0 or !present means the slot contributes a zero vector.
struct FactorSlots {
  std::array<int, kFactorCount> row;
  std::array<double, kFactorCount> value{};
  std::array<bool, kFactorCount> present{};

  FactorSlots() { row.fill(-1); }
};

void encode_model_slots(const FactorEncoder& enc, const ModelRecord& rec, FactorSlots& slots);
void encode_task_slots(const FactorEncoder& enc, const TaskRecord& rec, FactorSlots& slots);

struct NCFModel {
  struct Layer {
    std::size_t in = 0, out = 0;
    std::size_t w = 0, b = 0;  // offsets into params; W is out x in, column-major
  };

  NCFVariant variant = NCFVariant::id_only;
  int d = 10;
  std::vector<int> hidden{64, 32};
  std::size_t n = 0, m = 0;
  Registry models, tasks;
  FactorEncoder encoder;
  std::vector<double> params;

  // Derived layout (see build_layout).
  std::size_t id_models = 0, id_tasks = 0;
  std::array<std::size_t, kFactorCount> factor_offset{};
  std::array<std::size_t, kFactorCount> factor_rows{};  // 1 for numerical projections
  std::vector<Layer> layers;  // hidden layers then the scalar output layer

  bool uses_ids() const { return variant != NCFVariant::factor_only; }
  bool uses_factors() const { return variant != NCFVariant::id_only; }
  std::size_t input_width() const;
  /// Column of the factor's slice in the first-layer input.
  std::size_t factor_column(std::size_t factor) const;

  /// Recomputes offsets and resizes params (zero-filled) for the current shape.
  void build_layout();
};

/// Seeded random initialization; params zero-filled then drawn.
NCFModel init_ncf(std::size_t n, std::size_t m, NCFVariant variant, FactorEncoder encoder, const TrainConfig& config);

/// One scored query. Records are required for factor variants; indices are
/// ignored by the factor-only variant.
struct NCFQuery {
  std::size_t model_index = 0;
  std::size_t task_index = 0;
  const ModelRecord* model_record = nullptr;
  const TaskRecord* task_record = nullptr;
};

/// sigmoid(MLP(concat of active embeddings)), in (0,1). Masked factors read
/// as zero vectors; the model itself is never modified.
double forward(const NCFModel& model, const NCFQuery& query, const FactorMask& mask = {});
double predict_ncf(const NCFModel& model, const NCFQuery& query);

/// Concatenated factor embeddings (12 or 4 slices of encoder.width).
std::vector<double> encode_factors(const NCFModel& model, const ModelRecord& record);
std::vector<double> encode_factors(const NCFModel& model, const TaskRecord& record);

/// Training example with factor inputs already encoded.
struct NCFExample {
  std::size_t model_index = 0;
  std::size_t task_index = 0;
  FactorSlots slots;
  double target = 0.0;
};

NCFExample make_example(const NCFModel& model, const NCFQuery& query, double target);

/// Mean squared error over `batch`; accumulates d(loss)/d(params) into
/// `grad` (resized and zeroed) when non-null.
double loss_and_gradient(const NCFModel& model, std::span<const NCFExample> batch, std::vector<double>* grad);

struct NCFTrainLog {
  std::vector<long long> steps;
  std::vector<double> batch_mse;  // running mean of batch losses since the previous record
};

/// Mini-batch SGD on the mean squared error. Records are aligned with the
/// registries of `train` and may be empty for the id-only variant.
NCFModel train_ncf(const ScoreMatrix& train, std::span<const ModelRecord> model_records,
                   std::span<const TaskRecord> task_records, NCFVariant variant, const TrainConfig& config,
                   NCFTrainLog* log = nullptr, long long log_every = 10000);

/// Layer-one decomposition used by exact attribution: the first hidden
/// pre-activation equals `base + sum(factor[f])` over unmasked factors.
struct LayerOneParts {
  std::vector<double> base;                                    // bias + id embeddings
  std::array<std::vector<double>, kFactorCount> factor;        // empty when the slot is inactive
};
LayerOneParts layer_one_parts(const NCFModel& model, const NCFQuery& query);
/// Remaining network applied to a first-layer pre-activation.
double head_from_preactivation(const NCFModel& model, std::span<const double> z1);

void save_ncf(const NCFModel& model, std::ostream& out);
void save_ncf(const NCFModel& model, const std::string& path);
NCFModel load_ncf(std::istream& in);
NCFModel load_ncf(const std::string& path);

}  // namespace collabperf
