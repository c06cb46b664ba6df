#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "collabperf/dataset.hpp"
#include "collabperf/train_config.hpp"

namespace collabperf {

/// Latent-factor model: score(u, i) ~ p_u . q_i.
struct MFModel {
  std::size_t n = 0, m = 0;
  int d = 0;
  std::vector<double> P;  // n x d, row-major
  std::vector<double> Q;  // m x d, row-major
  Registry models, tasks;  // empty when built by init_mf alone

  const double* p(std::size_t u) const { return P.data() + u * d; }
  const double* q(std::size_t i) const { return Q.data() + i * d; }

  bool operator==(const MFModel&) const = default;
};

MFModel init_mf(std::size_t n, std::size_t m, const TrainConfig& config);

/// Mean training loss sampled during SGD.
struct MFTrainLog {
  std::vector<long long> steps;
  std::vector<double> train_mse;
};

/// Plain per-entry SGD on the squared error. `log_every` controls how often
/// the full training MSE is recorded into `log` (if given).
MFModel train_mf(const ScoreMatrix& train, const TrainConfig& config, MFTrainLog* log = nullptr,
                 long long log_every = 10000);

double predict_mf_raw(const MFModel& model, std::size_t model_index, std::size_t task_index);
/// Raw product clamped to [0, 1].
double predict_mf(const MFModel& model, std::size_t model_index, std::size_t task_index);

void save_mf(const MFModel& model, std::ostream& out);
void save_mf(const MFModel& model, const std::string& path);
MFModel load_mf(std::istream& in);
MFModel load_mf(const std::string& path);

}  // namespace collabperf
