#include "collabperf/ncf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"
#include "collabperf/rng.hpp"

namespace collabperf {

namespace {

// Output logits are clamped so the sigmoid stays strictly inside (0,1).
constexpr double kLogitLimit = 30.0;

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double transform(NumericTransform t, double raw) {
  return t == NumericTransform::log1p ? std::log1p(raw) : raw;
}

double sigmoid_clamped(double z) { return 1.0 / (1.0 + std::exp(-std::clamp(z, -kLogitLimit, kLogitLimit))); }

}  // namespace

std::string_view to_string(NCFVariant v) {
  switch (v) {
    case NCFVariant::id_only: return "id_only";
    case NCFVariant::factor_enhanced: return "factor_enhanced";
    case NCFVariant::factor_only: return "factor_only";
  }
  return "?";
}

NCFVariant parse_variant(std::string_view s) {
  if (s == "id_only" || s == "ncf") return NCFVariant::id_only;
  if (s == "factor_enhanced" || s == "ncf_factor") return NCFVariant::factor_enhanced;
  if (s == "factor_only") return NCFVariant::factor_only;
  throw ConfigError("unknown NCF variant '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Encoder

FactorEncoder FactorEncoder::fit(std::span<const ModelRecord> models, std::span<const TaskRecord> tasks, int width) {
  FactorEncoder enc;
  enc.width = width;
  const auto& schema = factor_schema();
  std::array<std::vector<double>, kFactorCount> values;
  auto visit = [&](std::size_t f, const FactorValue& v) {
    if (!v.present) return;
    if (schema[f].kind == FactorKind::categorical) {
      auto& voc = enc.vocab[f];
      if (std::find(voc.begin(), voc.end(), v.category) == voc.end()) voc.push_back(v.category);
    } else {
      values[f].push_back(transform(schema[f].transform, v.number));
    }
  };
  for (const auto& r : models)
    for (std::size_t f = 0; f < kModelFactorCount; ++f) visit(f, r.factors[f]);
  for (const auto& r : tasks)
    for (std::size_t f = 0; f < kTaskFactorCount; ++f) visit(kModelFactorCount + f, r.factors[f]);

  for (std::size_t f = 0; f < kFactorCount; ++f) {
    enc.mean[f] = 0.0;
    enc.scale[f] = 1.0;
    const auto& v = values[f];
    if (v.empty()) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    enc.mean[f] = mean;
    // Rounding leaves a tiny spread when every value is equal.
    const double sd = std::sqrt(var);
    enc.scale[f] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return enc;
}

int FactorEncoder::category_row(std::size_t factor, std::string_view category) const {
  const auto& voc = vocab[factor];
  for (std::size_t i = 0; i < voc.size(); ++i)
    if (voc[i] == category) return static_cast<int>(i);
  return oov_row(factor);
}

double FactorEncoder::standardize(std::size_t factor, double raw) const {
  return (transform(factor_schema()[factor].transform, raw) - mean[factor]) / scale[factor];
}

std::uint64_t factor_schema_hash() {
  std::string s;
  for (const auto& spec : factor_schema()) {
    s += spec.name;
    s += ':' + std::to_string(static_cast<int>(spec.owner)) + std::to_string(static_cast<int>(spec.kind)) +
         std::to_string(static_cast<int>(spec.transform)) + ';';
  }
  return csv::fnv1a(s);
}

std::uint64_t FactorEncoder::hash() const {
  std::string s = csv::hex64(factor_schema_hash()) + "|w" + std::to_string(width);
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    s += "|" + std::to_string(f) + ":";
    for (const auto& c : vocab[f]) s += c + '\x1f';
    s += csv::format_double(mean[f]) + "," + csv::format_double(scale[f]);
  }
  return csv::fnv1a(s);
}

void encode_model_slots(const FactorEncoder& enc, const ModelRecord& rec, FactorSlots& slots) {
  const auto& schema = factor_schema();
  for (std::size_t f = 0; f < kModelFactorCount; ++f) {
    const auto& v = rec.factors[f];
    slots.present[f] = v.present;
    slots.row[f] = -1;
    slots.value[f] = 0.0;
    if (!v.present) continue;
    if (schema[f].kind == FactorKind::categorical)
      slots.row[f] = enc.category_row(f, v.category);
    else
      slots.value[f] = enc.standardize(f, v.number);
  }
}

void encode_task_slots(const FactorEncoder& enc, const TaskRecord& rec, FactorSlots& slots) {
  for (std::size_t j = 0; j < kTaskFactorCount; ++j) {
    const std::size_t f = kModelFactorCount + j;
    const auto& v = rec.factors[j];
    slots.present[f] = v.present;
    slots.row[f] = v.present ? enc.category_row(f, v.category) : -1;
    slots.value[f] = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Layout

std::size_t NCFModel::input_width() const {
  std::size_t w = 0;
  if (uses_ids()) w += 2 * static_cast<std::size_t>(d);
  if (uses_factors()) w += kFactorCount * static_cast<std::size_t>(encoder.width);
  return w;
}

std::size_t NCFModel::factor_column(std::size_t factor) const {
  return (uses_ids() ? 2 * static_cast<std::size_t>(d) : 0) + factor * static_cast<std::size_t>(encoder.width);
}

void NCFModel::build_layout() {
  std::size_t off = 0;
  if (uses_ids()) {
    id_models = off;
    off += n * d;
    id_tasks = off;
    off += m * d;
  }
  const auto& schema = factor_schema();
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    factor_offset[f] = off;
    factor_rows[f] = 0;
    if (!uses_factors()) continue;
    factor_rows[f] = schema[f].kind == FactorKind::categorical ? encoder.vocab[f].size() + 1 : 1;
    off += factor_rows[f] * encoder.width;
  }
  layers.clear();
  std::size_t in = input_width();
  std::vector<std::size_t> widths(hidden.begin(), hidden.end());
  widths.push_back(1);
  for (std::size_t out : widths) {
    Layer L;
    L.in = in;
    L.out = out;
    L.w = off;
    off += in * out;
    L.b = off;
    off += out;
    layers.push_back(L);
    in = out;
  }
  params.assign(off, 0.0);
}

NCFModel init_ncf(std::size_t n, std::size_t m, NCFVariant variant, FactorEncoder encoder, const TrainConfig& config) {
  config.validate();
  NCFModel model;
  model.variant = variant;
  model.d = config.latent_dim;
  model.hidden = config.hidden_layers;
  model.n = n;
  model.m = m;
  encoder.width = config.factor_width;
  model.encoder = std::move(encoder);
  model.build_layout();

  Rng rng(config.seed);
  const std::size_t emb_end = model.layers.front().w;
  for (std::size_t k = 0; k < emb_end; ++k) model.params[k] = rng.gaussian(0.0, 0.1);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    const bool last = l + 1 == model.layers.size();
    const double sd = std::sqrt((last ? 1.0 : 2.0) / static_cast<double>(L.in));
    for (std::size_t k = 0; k < L.in * L.out; ++k) model.params[L.w + k] = rng.gaussian(0.0, sd);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void check_query(const NCFModel& model, const NCFQuery& q) {
  if (model.uses_ids() && (q.model_index >= model.n || q.task_index >= model.m))
    throw IndexError("NCF query index out of range");
  if (model.uses_factors() && (!q.model_record || !q.task_record))
    throw InputError(std::string("variant ") + std::string(to_string(model.variant)) +
                     " needs model and task factor records");
}

FactorSlots slots_for(const NCFModel& model, const NCFQuery& q) {
  FactorSlots slots;
  if (model.uses_factors()) {
    encode_model_slots(model.encoder, *q.model_record, slots);
    encode_task_slots(model.encoder, *q.task_record, slots);
  }
  return slots;
}

// Writes the input column for one example.
template <class Out>
void fill_input(const NCFModel& model, std::size_t u, std::size_t i, const FactorSlots& slots, const FactorMask& mask,
                Out&& x) {
  const int d = model.d;
  const double* p = model.params.data();
  std::size_t c = 0;
  if (model.uses_ids()) {
    for (int k = 0; k < d; ++k) x(c++) = p[model.id_models + u * d + k];
    for (int k = 0; k < d; ++k) x(c++) = p[model.id_tasks + i * d + k];
  }
  if (!model.uses_factors()) return;
  const int w = model.encoder.width;
  const auto& schema = factor_schema();
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    const double* base = p + model.factor_offset[f];
    const bool active = !mask[f] && slots.present[f];
    if (!active) {
      for (int k = 0; k < w; ++k) x(c++) = 0.0;
    } else if (schema[f].kind == FactorKind::categorical) {
      const double* row = base + static_cast<std::size_t>(slots.row[f]) * w;
      for (int k = 0; k < w; ++k) x(c++) = row[k];
    } else {
      for (int k = 0; k < w; ++k) x(c++) = slots.value[f] * base[k];
    }
  }
}

double run_layers(const NCFModel& model, Eigen::VectorXd a, std::size_t first_layer) {
  const double* p = model.params.data();
  for (std::size_t l = first_layer; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    ConstMatMap W(p + L.w, L.out, L.in);
    ConstVecMap b(p + L.b, L.out);
    Eigen::VectorXd z = W * a + b;
    if (l + 1 == model.layers.size()) return sigmoid_clamped(z(0));
    a = z.cwiseMax(0.0);
  }
  return sigmoid_clamped(a(0));
}

// Reusable buffers for batched loss/gradient evaluation.
struct Workspace {
  Eigen::MatrixXd X;
  std::vector<Eigen::MatrixXd> Z, A;
  Eigen::MatrixXd dA, dZ;

  void prepare(const NCFModel& model, std::size_t batch) {
    X.resize(model.input_width(), batch);
    Z.resize(model.layers.size());
    A.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      Z[l].resize(model.layers[l].out, batch);
      A[l].resize(model.layers[l].out, batch);
    }
  }
};

double batch_loss_grad(const NCFModel& model, std::span<const NCFExample> batch, double* grad, Workspace& ws) {
  const std::size_t B = batch.size();
  ws.prepare(model, B);
  const FactorMask none;
  for (std::size_t b = 0; b < B; ++b)
    fill_input(model, batch[b].model_index, batch[b].task_index, batch[b].slots, none, ws.X.col(b));

  const double* p = model.params.data();
  const std::size_t L = model.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = model.layers[l];
    ConstMatMap W(p + layer.w, layer.out, layer.in);
    ConstVecMap bias(p + layer.b, layer.out);
    const Eigen::MatrixXd& prev = l == 0 ? ws.X : ws.A[l - 1];
    ws.Z[l].noalias() = W * prev;
    ws.Z[l].colwise() += bias;
    if (l + 1 < L) ws.A[l] = ws.Z[l].cwiseMax(0.0);
  }

  double loss = 0.0;
  Eigen::RowVectorXd dz(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double z = ws.Z[L - 1](0, b);
    const double s = sigmoid_clamped(z);
    const double r = s - batch[b].target;
    loss += r * r;
    const bool saturated = z < -kLogitLimit || z > kLogitLimit;
    dz(b) = saturated ? 0.0 : 2.0 * r / static_cast<double>(B) * s * (1.0 - s);
  }
  loss /= static_cast<double>(B);
  if (!grad) return loss;

  ws.dZ = dz;
  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = model.layers[l];
    if (l + 1 < L) ws.dZ = ws.dA.cwiseProduct((ws.Z[l].array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& prev = l == 0 ? ws.X : ws.A[l - 1];
    MatMap gW(grad + layer.w, layer.out, layer.in);
    Eigen::Map<Eigen::VectorXd> gb(grad + layer.b, layer.out);
    gW.noalias() += ws.dZ * prev.transpose();
    gb += ws.dZ.rowwise().sum();
    ConstMatMap W(p + layer.w, layer.out, layer.in);
    ws.dA.noalias() = W.transpose() * ws.dZ;
  }

  // ws.dA now holds d(loss)/d(input); scatter into embedding tables.
  const int d = model.d;
  const int w = model.encoder.width;
  const auto& schema = factor_schema();
  for (std::size_t b = 0; b < B; ++b) {
    const auto& ex = batch[b];
    std::size_t c = 0;
    if (model.uses_ids()) {
      double* gp = grad + model.id_models + ex.model_index * d;
      for (int k = 0; k < d; ++k) gp[k] += ws.dA(c++, b);
      double* gq = grad + model.id_tasks + ex.task_index * d;
      for (int k = 0; k < d; ++k) gq[k] += ws.dA(c++, b);
    }
    if (!model.uses_factors()) continue;
    for (std::size_t f = 0; f < kFactorCount; ++f, c += w) {
      if (!ex.slots.present[f]) continue;
      double* g = grad + model.factor_offset[f];
      if (schema[f].kind == FactorKind::categorical) {
        g += static_cast<std::size_t>(ex.slots.row[f]) * w;
        for (int k = 0; k < w; ++k) g[k] += ws.dA(c + k, b);
      } else {
        for (int k = 0; k < w; ++k) g[k] += ex.slots.value[f] * ws.dA(c + k, b);
      }
    }
  }
  return loss;
}

}  // namespace

double forward(const NCFModel& model, const NCFQuery& query, const FactorMask& mask) {
  check_query(model, query);
  const FactorSlots slots = slots_for(model, query);
  Eigen::VectorXd x(model.input_width());
  fill_input(model, query.model_index, query.task_index, slots, mask, x);
  return run_layers(model, std::move(x), 0);
}

double predict_ncf(const NCFModel& model, const NCFQuery& query) { return forward(model, query); }

namespace {

template <class Record>
std::vector<double> encode_record(const NCFModel& model, const Record& record, std::size_t first, std::size_t count) {
  if (!model.uses_factors()) throw InputError("id_only model has no factor encoder");
  FactorSlots slots;
  if constexpr (std::is_same_v<Record, ModelRecord>)
    encode_model_slots(model.encoder, record, slots);
  else
    encode_task_slots(model.encoder, record, slots);
  Eigen::VectorXd x(model.input_width());
  fill_input(model, 0, 0, slots, FactorMask{}, x);
  const std::size_t w = model.encoder.width;
  const std::size_t col = model.factor_column(first);
  return std::vector<double>(x.data() + col, x.data() + col + count * w);
}

}  // namespace

std::vector<double> encode_factors(const NCFModel& model, const ModelRecord& record) {
  return encode_record(model, record, 0, kModelFactorCount);
}

std::vector<double> encode_factors(const NCFModel& model, const TaskRecord& record) {
  return encode_record(model, record, kModelFactorCount, kTaskFactorCount);
}

NCFExample make_example(const NCFModel& model, const NCFQuery& query, double target) {
  check_query(model, query);
  NCFExample ex;
  ex.model_index = query.model_index;
  ex.task_index = query.task_index;
  ex.slots = slots_for(model, query);
  ex.target = target;
  return ex;
}

double loss_and_gradient(const NCFModel& model, std::span<const NCFExample> batch, std::vector<double>* grad) {
  if (batch.empty()) throw InputError("loss_and_gradient: empty batch");
  Workspace ws;
  if (grad) grad->assign(model.params.size(), 0.0);
  return batch_loss_grad(model, batch, grad ? grad->data() : nullptr, ws);
}

NCFModel train_ncf(const ScoreMatrix& train, std::span<const ModelRecord> model_records,
                   std::span<const TaskRecord> task_records, NCFVariant variant, const TrainConfig& config,
                   NCFTrainLog* log, long long log_every) {
  config.validate();
  if (train.empty()) throw InputError("train_ncf: empty training matrix");
  const bool factors = variant != NCFVariant::id_only;
  if (factors && (model_records.size() != train.n_models() || task_records.size() != train.n_tasks()))
    throw InputError("train_ncf: factor records must be aligned with the score registries");

  FactorEncoder encoder;
  if (factors) {
    // Vocabulary and statistics come from entities with training entries only.
    std::vector<bool> seen_m(train.n_models(), false), seen_t(train.n_tasks(), false);
    for (const auto& e : train.entries()) seen_m[e.model] = seen_t[e.task] = true;
    std::vector<ModelRecord> ms;
    std::vector<TaskRecord> ts;
    for (std::size_t i = 0; i < seen_m.size(); ++i)
      if (seen_m[i]) ms.push_back(model_records[i]);
    for (std::size_t i = 0; i < seen_t.size(); ++i)
      if (seen_t[i]) ts.push_back(task_records[i]);
    encoder = FactorEncoder::fit(ms, ts, config.factor_width);
  }
  NCFModel model = init_ncf(train.n_models(), train.n_tasks(), variant, std::move(encoder), config);
  model.models = train.models();
  model.tasks = train.tasks();

  std::vector<FactorSlots> mslots(train.n_models()), tslots(train.n_tasks());
  if (factors) {
    for (std::size_t i = 0; i < mslots.size(); ++i) encode_model_slots(model.encoder, model_records[i], mslots[i]);
    for (std::size_t i = 0; i < tslots.size(); ++i) encode_task_slots(model.encoder, task_records[i], tslots[i]);
  }
  std::vector<NCFExample> examples;
  examples.reserve(train.size());
  for (const auto& e : train.entries()) {
    NCFExample ex;
    ex.model_index = e.model;
    ex.task_index = e.task;
    ex.target = e.score;
    if (factors) {
      ex.slots = mslots[e.model];
      for (std::size_t f = kModelFactorCount; f < kFactorCount; ++f) {
        ex.slots.row[f] = tslots[e.task].row[f];
        ex.slots.present[f] = tslots[e.task].present[f];
        ex.slots.value[f] = tslots[e.task].value[f];
      }
    }
    examples.push_back(ex);
  }

  Rng rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;

  const auto& schema = factor_schema();
  const std::size_t B = std::min<std::size_t>(config.batch_size, examples.size());
  std::vector<NCFExample> batch(B);
  std::vector<double> grad(model.params.size());
  Workspace ws;
  double running = 0.0;
  long long running_n = 0;

  for (long long step = 0; step < config.iterations; ++step) {
    for (std::size_t b = 0; b < B; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch[b] = examples[order[cursor++]];
      if (factors && config.oov_rate > 0.0) {
        for (std::size_t f = 0; f < kFactorCount; ++f) {
          if (schema[f].kind != FactorKind::categorical || !batch[b].slots.present[f]) continue;
          if (rng.uniform() < config.oov_rate) batch[b].slots.row[f] = model.encoder.oov_row(f);
        }
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = batch_loss_grad(model, batch, grad.data(), ws);
    if (!std::isfinite(loss)) throw TrainingError("NCF loss became non-finite", step);
    const double lr = config.learning_rate;
    const double decay = 2.0 * config.l2_penalty;
    if (decay > 0.0) {
      for (std::size_t k = 0; k < grad.size(); ++k) model.params[k] -= lr * (grad[k] + decay * model.params[k]);
    } else {
      for (std::size_t k = 0; k < grad.size(); ++k) model.params[k] -= lr * grad[k];
    }
    running += loss;
    ++running_n;
    if (log && log_every > 0 && (step + 1) % log_every == 0) {
      log->steps.push_back(step + 1);
      log->batch_mse.push_back(running / static_cast<double>(running_n));
      running = 0.0;
      running_n = 0;
    }
  }
  for (double v : model.params)
    if (!std::isfinite(v)) throw TrainingError("NCF parameters became non-finite", config.iterations);
  return model;
}

// ---------------------------------------------------------------------------
// Attribution support

LayerOneParts layer_one_parts(const NCFModel& model, const NCFQuery& query) {
  check_query(model, query);
  const FactorSlots slots = slots_for(model, query);
  const auto& L0 = model.layers.front();
  ConstMatMap W(model.params.data() + L0.w, L0.out, L0.in);
  LayerOneParts parts;

  Eigen::VectorXd x(model.input_width());
  fill_input(model, query.model_index, query.task_index, slots, FactorMask{}.set(), x);
  Eigen::VectorXd base = W * x + ConstVecMap(model.params.data() + L0.b, L0.out);
  parts.base.assign(base.data(), base.data() + base.size());

  if (!model.uses_factors()) return parts;
  const std::size_t w = model.encoder.width;
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    if (!slots.present[f]) continue;
    FactorMask only;
    only.set();
    only.reset(f);
    Eigen::VectorXd xf(model.input_width());
    fill_input(model, query.model_index, query.task_index, slots, only, xf);
    const std::size_t col = model.factor_column(f);
    Eigen::VectorXd contrib = W.middleCols(col, w) * xf.segment(col, w);
    parts.factor[f].assign(contrib.data(), contrib.data() + contrib.size());
  }
  return parts;
}

double head_from_preactivation(const NCFModel& model, std::span<const double> z1) {
  Eigen::VectorXd z = ConstVecMap(z1.data(), static_cast<Eigen::Index>(z1.size()));
  if (model.layers.size() == 1) return sigmoid_clamped(z(0));
  return run_layers(model, z.cwiseMax(0.0), 1);
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   collabperf-ncf 1
//   variant <name>
//   dims <d> <n> <m>
//   hidden <k> <w1> ... <wk>
//   width <factor width>
//   schema <hex>          compiled factor schema fingerprint
//   encoder <hex>         FactorEncoder::hash()
//   models <n> / n identifier lines
//   tasks <m> / m identifier lines
//   vocab <f> <count> / count category lines   (categorical factors)
//   stats <f> <mean> <scale>                    (numerical factors)
//   params <count> / values, 8 per line

void save_ncf(const NCFModel& model, std::ostream& out) {
  out << "collabperf-ncf 1\n";
  out << "variant " << to_string(model.variant) << '\n';
  out << "dims " << model.d << ' ' << model.n << ' ' << model.m << '\n';
  out << "hidden " << model.hidden.size();
  for (int h : model.hidden) out << ' ' << h;
  out << '\n';
  out << "width " << model.encoder.width << '\n';
  out << "schema " << csv::hex64(factor_schema_hash()) << '\n';
  out << "encoder " << csv::hex64(model.encoder.hash()) << '\n';
  out << "models " << model.models.size() << '\n';
  for (const auto& s : model.models.names()) out << s << '\n';
  out << "tasks " << model.tasks.size() << '\n';
  for (const auto& s : model.tasks.names()) out << s << '\n';
  const auto& schema = factor_schema();
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    if (schema[f].kind == FactorKind::categorical) {
      out << "vocab " << f << ' ' << model.encoder.vocab[f].size() << '\n';
      for (const auto& c : model.encoder.vocab[f]) out << c << '\n';
    } else {
      out << "stats " << f << ' ' << csv::format_double(model.encoder.mean[f]) << ' '
          << csv::format_double(model.encoder.scale[f]) << '\n';
    }
  }
  out << "params " << model.params.size() << '\n';
  for (std::size_t k = 0; k < model.params.size(); ++k)
    out << csv::format_double(model.params[k]) << ((k % 8 == 7 || k + 1 == model.params.size()) ? '\n' : ' ');
}

void save_ncf(const NCFModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  save_ncf(model, out);
}

namespace {

std::istringstream tagged_line(std::istream& in, const std::string& tag) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("truncated NCF checkpoint: expected '" + tag + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream ls(line);
  std::string t;
  ls >> t;
  if (t != tag) throw InputError("NCF checkpoint: expected '" + tag + "', found '" + t + "'");
  return ls;
}

std::string raw_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("truncated NCF checkpoint");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double read_number(std::istream& ls) {
  std::string tok;
  double v = 0.0;
  if (!(ls >> tok) || !csv::parse_double(tok, v)) throw InputError("NCF checkpoint: bad number");
  return v;
}

}  // namespace

NCFModel load_ncf(std::istream& in) {
  if (raw_line(in) != "collabperf-ncf 1") throw InputError("not an NCF checkpoint");
  NCFModel model;
  {
    auto ls = tagged_line(in, "variant");
    std::string v;
    ls >> v;
    model.variant = parse_variant(v);
  }
  {
    auto ls = tagged_line(in, "dims");
    if (!(ls >> model.d >> model.n >> model.m) || model.d < 1) throw InputError("NCF checkpoint: bad dims");
  }
  {
    auto ls = tagged_line(in, "hidden");
    std::size_t k = 0;
    ls >> k;
    model.hidden.resize(k);
    for (auto& h : model.hidden)
      if (!(ls >> h) || h < 1) throw InputError("NCF checkpoint: bad hidden widths");
  }
  tagged_line(in, "width") >> model.encoder.width;
  std::string schema_hex, encoder_hex;
  tagged_line(in, "schema") >> schema_hex;
  tagged_line(in, "encoder") >> encoder_hex;
  if (schema_hex != csv::hex64(factor_schema_hash()))
    throw SchemaError("NCF checkpoint factor schema " + schema_hex + " does not match this build (" +
                      csv::hex64(factor_schema_hash()) + ")");
  auto names = [&](const char* tag, Registry& reg) {
    std::size_t count = 0;
    tagged_line(in, tag) >> count;
    for (std::size_t i = 0; i < count; ++i) reg.add(raw_line(in));
  };
  names("models", model.models);
  names("tasks", model.tasks);
  const auto& schema = factor_schema();
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    std::size_t idx = 0;
    if (schema[f].kind == FactorKind::categorical) {
      auto ls = tagged_line(in, "vocab");
      std::size_t count = 0;
      ls >> idx >> count;
      if (idx != f) throw InputError("NCF checkpoint: vocab out of order");
      for (std::size_t i = 0; i < count; ++i) model.encoder.vocab[f].push_back(raw_line(in));
    } else {
      auto ls = tagged_line(in, "stats");
      ls >> idx;
      if (idx != f) throw InputError("NCF checkpoint: stats out of order");
      model.encoder.mean[f] = read_number(ls);
      model.encoder.scale[f] = read_number(ls);
    }
  }
  if (encoder_hex != csv::hex64(model.encoder.hash()))
    throw SchemaError("NCF checkpoint encoder fingerprint mismatch (stored " + encoder_hex + ", computed " +
                      csv::hex64(model.encoder.hash()) + ")");
  model.build_layout();
  std::size_t count = 0;
  tagged_line(in, "params") >> count;
  if (count != model.params.size())
    throw InputError("NCF checkpoint: expected " + std::to_string(model.params.size()) + " parameters, found " +
                     std::to_string(count));
  for (auto& v : model.params) v = read_number(in);
  return model;
}

NCFModel load_ncf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return load_ncf(in);
}

}  // namespace collabperf
