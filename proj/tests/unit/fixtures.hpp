#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "collabperf/dataset.hpp"
#include "collabperf/rng.hpp"

namespace fixtures {

using namespace collabperf;

inline ModelRecord model_record(const std::string& id, const std::string& family, double params_m,
                                double tokens_b = 300.0, const std::string& context = "2048") {
  ModelRecord r;
  r.identifier = id;
  auto set_num = [&](std::size_t i, double v) { r.factors[i] = {true, v, {}}; };
  auto set_cat = [&](std::size_t i, const std::string& v) { r.factors[i] = {true, 0.0, v}; };
  set_cat(model_factor::family, family);
  set_num(model_factor::pretrain_tokens_b, tokens_b);
  set_num(model_factor::params_m, params_m);
  set_num(model_factor::flops, 6.0 * params_m * tokens_b);
  set_cat(model_factor::context_window, context);
  set_num(model_factor::layers, std::round(4.0 * std::log(params_m + 1.0)));
  return r;
}

inline TaskRecord task_record(const std::string& id, const std::string& ability, const std::string& shots) {
  TaskRecord r;
  r.identifier = id;
  r.factors[task_factor::ability] = {true, 0.0, ability};
  r.factors[task_factor::task_family] = {true, 0.0, id.substr(0, 2)};
  r.factors[task_factor::output_format] = {true, 0.0, "mc"};
  r.factors[task_factor::few_shot] = {true, 0.0, shots};
  return r;
}

/// Families of models whose scores follow sigmoid(w_t ln C + b_t + offset).
inline Dataset synthetic_dataset(std::size_t n_models, std::size_t n_tasks, double density, std::uint64_t seed) {
  Rng rng(seed);
  ModelTable mt;
  TaskTable tt;
  const char* families[] = {"alpha", "beta", "gamma", "delta"};
  std::vector<double> offset{0.0, 0.4, -0.3, 0.2};
  for (std::size_t u = 0; u < n_models; ++u) {
    const double params = std::exp(4.0 + 8.0 * rng.uniform());
    mt.records.push_back(model_record("m" + std::to_string(u), families[u % 4], std::round(params)));
    mt.ids.add(mt.records.back().identifier);
  }
  const char* abilities[] = {"reasoning", "knowledge", "math"};
  for (std::size_t t = 0; t < n_tasks; ++t) {
    tt.records.push_back(task_record("t" + std::to_string(t), abilities[t % 3], t % 2 ? "0-shot" : "5-shot"));
    tt.ids.add(tt.records.back().identifier);
  }
  Registry models(mt.ids.names()), tasks(tt.ids.names());
  std::vector<ScoreEntry> entries;
  std::vector<double> w(n_tasks), b(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    w[t] = 0.4 + 0.5 * rng.uniform();
    b[t] = -8.0 * w[t] + rng.gaussian(0.0, 0.5);
  }
  for (std::size_t u = 0; u < n_models; ++u)
    for (std::size_t t = 0; t < n_tasks; ++t) {
      const bool anchor = t == u % n_tasks || u == t % n_models;
      if (!anchor && rng.uniform() >= density) continue;
      const double z = w[t] * std::log(mt.records[u].params_m()) + b[t] + offset[u % 4] + rng.gaussian(0.0, 0.1);
      entries.push_back({u, t, 1.0 / (1.0 + std::exp(-z)), "synthetic"});
    }
  return make_dataset(ScoreMatrix(models, tasks, entries), mt, tt);
}

inline std::string temp_dir(const std::string& name) {
  return (std::string(COLLABPERF_TEST_TMP) + "/" + name);
}

}  // namespace fixtures
