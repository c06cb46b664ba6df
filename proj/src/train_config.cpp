#include "collabperf/train_config.hpp"

#include <cmath>

#include "collabperf/error.hpp"

namespace collabperf {

void TrainConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (factor_width < 1) throw ConfigError("factor_width must be >= 1");
  if (!(oov_rate >= 0.0 && oov_rate < 1.0)) throw ConfigError("oov_rate must lie in [0,1)");
  for (int h : hidden_layers)
    if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
}

}  // namespace collabperf
