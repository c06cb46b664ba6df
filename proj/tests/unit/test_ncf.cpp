#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"
#include "collabperf/ncf.hpp"
#include "collabperf/rng.hpp"
#include "fixtures.hpp"

using namespace collabperf;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.latent_dim = 3;
  cfg.hidden_layers = {6, 4};
  cfg.factor_width = 3;
  return cfg;
}

std::vector<NCFExample> all_examples(const NCFModel& model, const Dataset& d) {
  std::vector<NCFExample> batch;
  for (const auto& e : d.scores.entries())
    batch.push_back(make_example(model, {e.model, e.task, &d.models[e.model], &d.tasks[e.task]}, e.score));
  return batch;
}

struct GradientCheck {
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0;
};

// Central differences with h = 1e-5. A parameter whose one-sided slopes
// disagree sits on a ReLU kink and is counted instead of compared.
GradientCheck check_gradient(NCFModel model, std::span<const NCFExample> batch) {
  std::vector<double> grad;
  const double f0 = loss_and_gradient(model, batch, &grad);
  const double h = 1e-5;
  GradientCheck r;
  for (std::size_t k = 0; k < model.params.size(); ++k) {
    const double saved = model.params[k];
    model.params[k] = saved + h;
    const double up = loss_and_gradient(model, batch, nullptr);
    model.params[k] = saved - h;
    const double down = loss_and_gradient(model, batch, nullptr);
    model.params[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[k]), 1e-6});
    if (std::abs((up - f0) - (f0 - down)) / h > 1e-2 * scale) {
      ++r.kinks;
      continue;
    }
    ++r.checked;
    r.worst = std::max(r.worst, std::abs(numeric - grad[k]) / scale);
  }
  return r;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto d = fixtures::synthetic_dataset(5, 4, 0.8, seed);
    for (auto variant : {NCFVariant::id_only, NCFVariant::factor_enhanced, NCFVariant::factor_only}) {
      auto cfg = small_config();
      cfg.seed = seed;
      const auto enc = FactorEncoder::fit(d.models, d.tasks, cfg.factor_width);
      auto model = init_ncf(5, 4, variant, enc, cfg);
      // Nonzero biases so every parameter class carries gradient.
      Rng rng(seed + 100);
      for (const auto& layer : model.layers)
        for (std::size_t k = 0; k < layer.out; ++k) model.params[layer.b + k] = rng.gaussian(0.0, 0.1);
      const auto batch = all_examples(model, d);
      CAPTURE(to_string(variant));
      const auto g = check_gradient(model, batch);
      CHECK(g.worst < 1e-4);
      CHECK(g.kinks * 50 <= g.checked);
    }
  }
}

TEST_CASE("gradient covers embeddings, factor tables and layers") {
  const auto d = fixtures::synthetic_dataset(5, 4, 0.8, 4);
  const auto cfg = small_config();
  const auto model = init_ncf(5, 4, NCFVariant::factor_enhanced, FactorEncoder::fit(d.models, d.tasks, 3), cfg);
  const auto batch = all_examples(model, d);
  std::vector<double> grad;
  loss_and_gradient(model, batch, &grad);
  auto any_nonzero = [&](std::size_t from, std::size_t count) {
    return std::any_of(grad.begin() + from, grad.begin() + from + count, [](double g) { return g != 0.0; });
  };
  CHECK(any_nonzero(model.id_models, 5 * 3));
  CHECK(any_nonzero(model.id_tasks, 4 * 3));
  CHECK(any_nonzero(model.factor_offset[model_factor::family], 3));
  CHECK(any_nonzero(model.factor_offset[model_factor::params_m], 3));
  CHECK(any_nonzero(model.factor_offset[kModelFactorCount + task_factor::ability], 3));
  for (const auto& layer : model.layers) CHECK(any_nonzero(layer.w, layer.in * layer.out));
}

TEST_CASE("memorizes a 20-entry training set") {
  const auto d = fixtures::synthetic_dataset(20, 8, 0.0, 6);
  std::vector<ScoreEntry> twenty(d.scores.entries().begin(), d.scores.entries().begin() + 20);
  const ScoreMatrix train = d.scores.with_entries(twenty);
  TrainConfig cfg;
  cfg.iterations = 6000;
  cfg.batch_size = 20;
  cfg.learning_rate = 0.1;
  cfg.oov_rate = 0.0;
  const auto model = train_ncf(train, {}, {}, NCFVariant::id_only, cfg);
  double mse = 0.0;
  for (const auto& e : twenty) {
    const double r = predict_ncf(model, {e.model, e.task}) - e.score;
    mse += r * r / 20.0;
  }
  CHECK(mse < 1e-3);
}

TEST_CASE("factor-only predictions ignore identities") {
  const auto d = fixtures::synthetic_dataset(10, 5, 0.6, 7);
  TrainConfig cfg = small_config();
  cfg.iterations = 500;
  const auto model = train_ncf(d.scores, d.models, d.tasks, NCFVariant::factor_only, cfg);
  CHECK(model.params.size() ==
        init_ncf(1, 1, NCFVariant::factor_only, model.encoder, cfg).params.size());
  const double a = predict_ncf(model, {0, 0, &d.models[3], &d.tasks[2]});
  const double b = predict_ncf(model, {9, 4, &d.models[3], &d.tasks[2]});
  CHECK(a == b);
  ModelRecord twin = d.models[3];
  twin.identifier = "someone-else";
  CHECK(predict_ncf(model, {0, 0, &twin, &d.tasks[2]}) == a);
}

TEST_CASE("unseen categories use the out-of-vocabulary row") {
  const auto d = fixtures::synthetic_dataset(8, 4, 0.6, 8);
  const auto enc = FactorEncoder::fit(d.models, d.tasks, 4);
  CHECK(enc.category_row(model_factor::family, "alpha") == 0);
  CHECK(enc.category_row(model_factor::family, "never-seen") == enc.oov_row(model_factor::family));
  TrainConfig cfg = small_config();
  cfg.iterations = 200;
  const auto model = train_ncf(d.scores, d.models, d.tasks, NCFVariant::factor_only, cfg);
  ModelRecord novel = d.models[0];
  novel.factors[model_factor::family].category = "never-seen";
  const double p = predict_ncf(model, {0, 0, &novel, &d.tasks[0]});
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("factor variants need records and valid indices") {
  const auto d = fixtures::synthetic_dataset(6, 4, 0.6, 9);
  const auto cfg = small_config();
  const auto model = init_ncf(6, 4, NCFVariant::factor_enhanced, FactorEncoder::fit(d.models, d.tasks, 3), cfg);
  CHECK_THROWS_AS(predict_ncf(model, {0, 0}), InputError);
  CHECK_THROWS_AS(predict_ncf(model, {6, 0, &d.models[0], &d.tasks[0]}), IndexError);
}

TEST_CASE("training is deterministic") {
  const auto d = fixtures::synthetic_dataset(8, 5, 0.6, 10);
  TrainConfig cfg = small_config();
  cfg.iterations = 300;
  const auto a = train_ncf(d.scores, d.models, d.tasks, NCFVariant::factor_enhanced, cfg);
  const auto b = train_ncf(d.scores, d.models, d.tasks, NCFVariant::factor_enhanced, cfg);
  CHECK(a.params == b.params);
}

TEST_CASE("checkpoint round-trip and schema refusal") {
  const auto d = fixtures::synthetic_dataset(8, 5, 0.6, 11);
  TrainConfig cfg = small_config();
  cfg.iterations = 300;
  const auto model = train_ncf(d.scores, d.models, d.tasks, NCFVariant::factor_enhanced, cfg);
  std::stringstream io;
  save_ncf(model, io);
  const std::string text = io.str();
  const auto back = load_ncf(io);
  CHECK(back.params == model.params);
  CHECK(back.encoder.hash() == model.encoder.hash());
  for (const auto& e : d.scores.entries()) {
    const NCFQuery q{e.model, e.task, &d.models[e.model], &d.tasks[e.task]};
    CHECK(predict_ncf(back, q) == predict_ncf(model, q));
  }

  auto tampered = text;
  const auto schema = csv::hex64(factor_schema_hash());
  tampered.replace(tampered.find(schema), schema.size(), "0123456789abcdef");
  std::istringstream bad_schema(tampered);
  CHECK_THROWS_AS(load_ncf(bad_schema), SchemaError);

  tampered = text;
  const auto at = tampered.find("stats ");
  tampered.replace(tampered.find(' ', at + 6) + 1, 1, "9");
  std::istringstream bad_encoder(tampered);
  CHECK_THROWS_AS(load_ncf(bad_encoder), SchemaError);
}
