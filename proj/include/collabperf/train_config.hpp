#pragma once

#include <cstdint>
#include <vector>

namespace collabperf {

/// Optimizer settings shared by the MF and NCF engines. Defaults follow the
/// benchmark configuration: 10 latent factors, step size 0.01, 250k steps.
struct TrainConfig {
  int latent_dim = 10;
  double learning_rate = 0.01;
  long long iterations = 250000;  // update steps, not epochs
  double l2_penalty = 0.0;
  std::uint64_t seed = 1;

  // NCF only
  std::vector<int> hidden_layers{64, 32};
  int batch_size = 64;
  int factor_width = 8;
  double oov_rate = 0.02;  // chance a categorical input is swapped for the OOV row while training

  void validate() const;
};

}  // namespace collabperf
