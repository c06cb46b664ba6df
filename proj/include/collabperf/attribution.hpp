#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "collabperf/dataset.hpp"
#include "collabperf/ncf.hpp"

namespace collabperf {

/// Read-only view of a factor model with some factors masked: categorical
/// embedding rows and numerical inputs read as zero. The wrapped model is
/// never modified.
class MaskedNCF {
 public:
  explicit MaskedNCF(const NCFModel& model, FactorMask mask = {});

  MaskedNCF mask(std::size_t factor) const;
  MaskedNCF mask(std::string_view factor_name) const;
  const FactorMask& masked() const { return mask_; }
  double predict(const NCFQuery& query) const { return forward(*model_, query, mask_); }

 private:
  const NCFModel* model_;
  FactorMask mask_;
};

MaskedNCF mask_factor(const NCFModel& model, std::string_view factor_name);

/// A validation set bundled with the aligned records needed for queries.
struct AttributionSet {
  std::vector<ScoreEntry> entries;
  std::span<const ModelRecord> models;
  std::span<const TaskRecord> tasks;
};

inline constexpr const char* kShapleyConvention =
    "v(S) = -(validation MSE with factors outside S masked); phi > 0 means the factor lowers loss";

/// v(S) for `active` (schema-index bitmask of unmasked factors).
double value_function(const NCFModel& model, const AttributionSet& valid, const FactorMask& active);

/// Shapley values of `players` from a full table of coalition values indexed
/// by bitmask over player positions (bit j = players[j] present).
std::vector<double> shapley_from_table(std::span<const double> values, std::size_t players);

struct ShapleyReport {
  std::vector<std::size_t> factors;                // schema indices, in the requested order
  std::vector<double> mean;                        // per factor, mean over instances
  std::vector<double> mean_abs;
  std::vector<double> stddev;                      // population std over instances
  std::vector<std::vector<double>> per_instance;   // [factor][instance]
  std::vector<std::size_t> ranking;                // positions into `factors`, descending mean
  double v_all = 0.0;                              // v(N)
  double v_none = 0.0;                             // v(empty set)
  std::string convention = kShapleyConvention;

  /// |sum(phi) - (v(N) - v(empty))|
  double efficiency_gap() const;
};

inline constexpr std::size_t kMaxShapleyPlayers = 20;

/// Exact enumeration over all 2^|N| coalitions. Factors outside `players`
/// stay unmasked. Each instance's value is its negative squared error.
ShapleyReport exact_shapley(const NCFModel& model, const AttributionSet& valid, std::span<const std::size_t> players,
                            unsigned workers = 1);

/// All 16 schema factors.
std::vector<std::size_t> all_factors();

/// `factor,kind,mean_shapley,std_over_instances,mean_abs_shapley`, ranked.
void write_shapley_csv(const ShapleyReport& report, std::ostream& out);
/// `factor,instance,model,task,value` rows for beeswarm plots.
void write_shapley_instances_csv(const ShapleyReport& report, const AttributionSet& valid, const ScoreMatrix& names,
                                 std::ostream& out);

}  // namespace collabperf
