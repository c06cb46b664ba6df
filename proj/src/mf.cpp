#include "collabperf/mf.hpp"

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

MFModel init_mf(std::size_t n, std::size_t m, const TrainConfig& config) {
  config.validate();
  if (n < 1 || m < 1) throw ConfigError("init_mf needs n, m >= 1");
  MFModel model;
  model.n = n;
  model.m = m;
  model.d = config.latent_dim;
  Rng rng(config.seed);
  model.P.resize(n * model.d);
  model.Q.resize(m * model.d);
  for (auto& v : model.P) v = rng.gaussian(0.0, 0.1);
  for (auto& v : model.Q) v = rng.gaussian(0.0, 0.1);
  return model;
}

namespace {

double dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double training_mse(const MFModel& model, const ScoreMatrix& train) {
  double s = 0.0;
  for (const auto& e : train.entries()) {
    const double r = dot(model.p(e.model), model.q(e.task), model.d) - e.score;
    s += r * r;
  }
  return s / static_cast<double>(train.size());
}

}  // namespace

MFModel train_mf(const ScoreMatrix& train, const TrainConfig& config, MFTrainLog* log, long long log_every) {
  if (train.empty()) throw InputError("train_mf: empty training matrix");
  MFModel model = init_mf(train.n_models(), train.n_tasks(), config);
  model.models = train.models();
  model.tasks = train.tasks();

  // Sampling uses a stream independent of the initialization stream.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  const int d = model.d;
  const double lr = config.learning_rate;
  const double lambda = config.l2_penalty;
  const auto& entries = train.entries();
  std::vector<double> p_old(d);

  for (long long step = 0; step < config.iterations; ++step) {
    const auto& e = entries[rng.below(entries.size())];
    double* p = model.P.data() + e.model * d;
    double* q = model.Q.data() + e.task * d;
    const double err = dot(p, q, d) - e.score;
    if (!std::isfinite(err)) throw TrainingError("MF loss became non-finite", step);
    std::copy(p, p + d, p_old.begin());
    for (int k = 0; k < d; ++k) {
      p[k] -= lr * (2.0 * err * q[k] + 2.0 * lambda * p[k]);
      q[k] -= lr * (2.0 * err * p_old[k] + 2.0 * lambda * q[k]);
    }
    if (log && log_every > 0 && (step + 1) % log_every == 0) {
      const double mse = training_mse(model, train);
      if (!std::isfinite(mse)) throw TrainingError("MF loss became non-finite", step);
      log->steps.push_back(step + 1);
      log->train_mse.push_back(mse);
    }
  }
  const double final_mse = training_mse(model, train);
  if (!std::isfinite(final_mse)) throw TrainingError("MF loss became non-finite", config.iterations);
  return model;
}

double predict_mf_raw(const MFModel& model, std::size_t model_index, std::size_t task_index) {
  if (model_index >= model.n || task_index >= model.m) throw IndexError("predict_mf: index out of range");
  return dot(model.p(model_index), model.q(task_index), model.d);
}

double predict_mf(const MFModel& model, std::size_t model_index, std::size_t task_index) {
  return std::clamp(predict_mf_raw(model, model_index, task_index), 0.0, 1.0);
}

// Checkpoint layout (text, one token group per line):
//   collabperf-mf 1
//   dims <d> <n> <m>
//   models            followed by n identifier lines (may be 0 when unnamed)
//   tasks             followed by m identifier lines
//   P                 followed by n lines of d values
//   Q                 followed by m lines of d values
// Values use the shortest round-trip decimal form.
void save_mf(const MFModel& model, std::ostream& out) {
  out << "collabperf-mf 1\n";
  out << "dims " << model.d << ' ' << model.n << ' ' << model.m << '\n';
  out << "models " << model.models.size() << '\n';
  for (const auto& s : model.models.names()) out << s << '\n';
  out << "tasks " << model.tasks.size() << '\n';
  for (const auto& s : model.tasks.names()) out << s << '\n';
  auto table = [&](const char* tag, const std::vector<double>& v, std::size_t rows) {
    out << tag << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
      for (int k = 0; k < model.d; ++k) out << (k ? " " : "") << csv::format_double(v[r * model.d + k]);
      out << '\n';
    }
  };
  table("P", model.P, model.n);
  table("Q", model.Q, model.m);
}

void save_mf(const MFModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  save_mf(model, out);
}

namespace {

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(std::string("truncated checkpoint: expected ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void read_names(std::istream& in, const char* tag, std::size_t expected, Registry& reg) {
  std::istringstream hdr(next_line(in, tag));
  std::string t;
  std::size_t count = 0;
  if (!(hdr >> t >> count) || t != tag) throw InputError(std::string("checkpoint: expected '") + tag + "'");
  if (count != 0 && count != expected) throw InputError(std::string("checkpoint: ") + tag + " count mismatch");
  for (std::size_t i = 0; i < count; ++i) reg.add(next_line(in, tag));
}

void read_table(std::istream& in, const char* tag, std::size_t rows, int d, std::vector<double>& v) {
  if (next_line(in, tag) != tag) throw InputError(std::string("checkpoint: expected '") + tag + "'");
  v.resize(rows * d);
  for (std::size_t r = 0; r < rows; ++r) {
    std::istringstream ls(next_line(in, tag));
    for (int k = 0; k < d; ++k) {
      std::string tok;
      if (!(ls >> tok) || !csv::parse_double(tok, v[r * d + k]))
        throw InputError(std::string("checkpoint: bad value in ") + tag);
    }
  }
}

}  // namespace

MFModel load_mf(std::istream& in) {
  if (next_line(in, "magic") != "collabperf-mf 1") throw InputError("not an MF checkpoint");
  MFModel model;
  std::istringstream dims(next_line(in, "dims"));
  std::string tag;
  if (!(dims >> tag >> model.d >> model.n >> model.m) || tag != "dims" || model.d < 1)
    throw InputError("checkpoint: bad dims line");
  read_names(in, "models", model.n, model.models);
  read_names(in, "tasks", model.m, model.tasks);
  read_table(in, "P", model.n, model.d, model.P);
  read_table(in, "Q", model.m, model.d, model.Q);
  return model;
}

MFModel load_mf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return load_mf(in);
}

}  // namespace collabperf
