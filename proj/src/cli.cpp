#include "collabperf/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "collabperf/analysis.hpp"
#include "collabperf/attribution.hpp"
#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"
#include "collabperf/run_config.hpp"

#ifndef COLLABPERF_VERSION
#define COLLABPERF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace collabperf {

const char* version() { return COLLABPERF_VERSION; }

namespace {

using Overrides = std::map<std::string, std::string>;
using csv::format_double;

struct Invocation {
  std::string config_file;
  Overrides overrides;
  // subcommand-specific
  std::string checkpoint;
  std::string predict_model;
  std::string predict_tasks = "all";
  std::string output;
  std::string factors;
  bool full = false;
};

void add_option(CLI::App* app, Invocation& inv, const std::string& flag, const std::string& key,
                const std::string& help) {
  app->add_option_function<std::string>(flag, [&inv, key](const std::string& v) { inv.overrides[key] = v; }, help);
}

void add_data_options(CLI::App* app, Invocation& inv) {
  app->add_option("--config", inv.config_file, "flat key = value config file");
  add_option(app, inv, "--data", "data_dir", "directory with scores.csv, models.csv, tasks.csv");
  add_option(app, inv, "--scores", "scores", "score file (overrides --data)");
  add_option(app, inv, "--model-factors", "model_factors", "model factor file (overrides --data)");
  add_option(app, inv, "--task-factors", "task_factors", "task factor file (overrides --data)");
}

void add_train_options(CLI::App* app, Invocation& inv) {
  add_option(app, inv, "--latent-dim", "latent_dim", "latent factors");
  add_option(app, inv, "--lr,--learning-rate", "learning_rate", "SGD step size");
  add_option(app, inv, "--iterations", "iterations", "SGD steps");
  add_option(app, inv, "--l2", "l2_penalty", "L2 penalty");
  add_option(app, inv, "--hidden", "hidden_layers", "hidden widths, comma separated");
  add_option(app, inv, "--batch-size", "batch_size", "NCF mini-batch size");
  add_option(app, inv, "--factor-width", "factor_width", "factor embedding width");
  add_option(app, inv, "--oov-rate", "oov_rate", "OOV substitution rate during NCF training");
  add_option(app, inv, "--seeds", "seeds", "N (seeds 1..N) or comma list");
  add_option(app, inv, "--validation-fraction", "validation_fraction", "random split fraction");
  add_option(app, inv, "--workers", "workers", "parallel trainings");
  add_option(app, inv, "--out", "output_dir", "run directory");
}

RunConfig resolve(const Invocation& inv) {
  auto kv = RunConfig::defaults();
  if (!inv.config_file.empty())
    for (auto& [k, v] : read_config_file(inv.config_file)) kv[k] = v;
  for (auto& [k, v] : inv.overrides) kv[k] = v;
  return RunConfig::from_map(kv);
}

Dataset load(const RunConfig& c) { return load_dataset(c.scores_file(), c.models_file(), c.tasks_file()); }

/// Output directory with config, log and report files.
class RunDir {
 public:
  RunDir(const RunConfig& config, const Dataset& data, std::string command)
      : root_(config.output_dir), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(root_ / "plotdata");
    std::ofstream cfg = open("config.resolved");
    cfg << "# collabperf " << version() << '\n';
    cfg << "# command = " << command << '\n';
    cfg << "# dataset_hash = " << csv::hex64(data.hash()) << '\n';
    config.write(cfg);
    log_.open(root_ / "log.txt");
    log("collabperf " + std::string(version()) + " " + command);
    log("dataset " + csv::hex64(data.hash()) + ": " + std::to_string(data.scores.n_models()) + " models, " +
        std::to_string(data.scores.n_tasks()) + " tasks, " + std::to_string(data.scores.size()) + " scores");
    for (const auto& w : data.scores.warnings()) log("warning: " + w);
  }

  std::ofstream open(const fs::path& rel) const {
    const fs::path p = root_ / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + p.string());
    return f;
  }

  void log(const std::string& line) {
    log_ << line << '\n';
    log_.flush();
  }

  void finish() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ostringstream msg;
    msg << "done in " << std::fixed << std::setprecision(1) << s << " s";
    log(msg.str());
  }

  fs::path path(const fs::path& rel) const { return root_ / rel; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::ofstream log_;
  std::chrono::steady_clock::time_point start_;
};

void write_report_header(std::ostream& out) {
  out << "label,mse,mse_std,l1_mean,l1_std,rank_accuracy_pct,rank_accuracy_std,mae_at_2_pct,mae_at_2_std,n_eval,"
         "n_seeds\n";
}

void write_report_row(const EvalReport& r, std::ostream& out) {
  csv::write_row(out, {r.label, format_double(r.mse), format_double(r.mse_std), format_double(r.l1_mean),
                       format_double(r.l1_std), format_double(r.rank_accuracy_pct), format_double(r.accuracy_std),
                       format_double(r.mae_at_2_pct), format_double(r.mae_at_2_std), std::to_string(r.n_eval),
                       std::to_string(r.per_seed.size())});
}

void write_per_seed(std::span<const EvalReport> reports, std::ostream& out) {
  out << "label,seed,mse,l1_mean,rank_accuracy_pct,mae_at_2_pct,n_eval\n";
  for (const auto& r : reports)
    for (const auto& s : r.per_seed)
      csv::write_row(out, {r.label, std::to_string(s.seed), format_double(s.mse), format_double(s.l1_mean),
                           format_double(s.rank_accuracy_pct), format_double(s.mae_at_2_pct),
                           std::to_string(s.n_eval)});
}

Method single_method(RunConfig& c, Method fallback) {
  if (c.methods.empty()) c.methods = {fallback};
  if (c.methods.size() != 1) throw ConfigError("this command takes exactly one method");
  return c.methods.front();
}

// ---------------------------------------------------------------------------

int cmd_validate(const Invocation& inv, std::ostream& out) {
  const RunConfig c = resolve(inv);
  const Dataset d = load(c);
  for (const auto& w : d.scores.warnings()) out << "warning: " << w << '\n';
  std::ostringstream density;
  density << std::fixed << std::setprecision(2) << d.scores.density();
  out << d.scores.n_models() << " models, " << d.scores.n_tasks() << " tasks, density " << density.str() << '\n';
  return kExitOk;
}

int cmd_train(const Invocation& inv, std::ostream& out) {
  RunConfig c = resolve(inv);
  const Method method = single_method(c, Method::ncf_factor);
  if (method == Method::scaling_baseline) throw ConfigError("scaling_baseline has no trainable checkpoint; use `scaling`");
  const Dataset d = load(c);
  RunDir run(c, d, "train");

  const std::uint64_t seed = c.seeds.front();
  ScoreMatrix train = d.scores, valid;
  if (!inv.full) {
    auto s = split(d.scores, SplitSpec{seed, c.validation_fraction, Scenario::random, {}});
    train = std::move(s.train);
    valid = std::move(s.valid);
  }
  TrainConfig tc = c.train;
  tc.seed = seed;

  std::ofstream curve = run.open("plotdata/train_loss.csv");
  curve << "step,loss\n";
  std::optional<Predictor> predictor;
  const std::string ckpt = "checkpoints/" + std::string(to_string(method)) + ".ckpt";
  fs::create_directories(run.path("checkpoints"));
  if (method == Method::mf) {
    MFTrainLog log;
    MFModel m = train_mf(train, tc, &log);
    for (std::size_t i = 0; i < log.steps.size(); ++i)
      curve << log.steps[i] << ',' << format_double(log.train_mse[i]) << '\n';
    save_mf(m, run.path(ckpt).string());
    predictor.emplace(std::move(m));
  } else {
    NCFTrainLog log;
    const NCFVariant v = method == Method::ncf ? NCFVariant::id_only
                         : method == Method::ncf_factor ? NCFVariant::factor_enhanced
                                                        : NCFVariant::factor_only;
    NCFModel m = train_ncf(train, d.models, d.tasks, v, tc, &log);
    for (std::size_t i = 0; i < log.steps.size(); ++i)
      curve << log.steps[i] << ',' << format_double(log.batch_mse[i]) << '\n';
    save_ncf(m, run.path(ckpt).string());
    predictor.emplace(std::move(m));
  }
  run.log("checkpoint " + ckpt);

  std::ofstream report = run.open("report.csv");
  write_report_header(report);
  if (!valid.empty()) {
    const auto pred = predictor->predict(d, valid.entries());
    const EvalReport r =
        aggregate(std::string(to_string(method)), {evaluate(valid.entries(), pred, d.scores, seed)});
    write_report_row(r, report);
    std::ofstream pts = run.open("plotdata/predictions.csv");
    pts << "model,task,truth,predicted\n";
    for (std::size_t i = 0; i < valid.size(); ++i) {
      const auto& e = valid.entries()[i];
      csv::write_row(pts, {d.scores.models().name(e.model), d.scores.tasks().name(e.task), format_double(e.score),
                           format_double(pred[i])});
    }
    out << to_string(method) << ": validation mse " << format_double(r.mse) << ", accuracy "
        << format_double(r.rank_accuracy_pct) << "%\n";
  }
  out << "checkpoint written to " << run.path(ckpt).string() << '\n';
  run.finish();
  return kExitOk;
}

std::string checkpoint_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path);
  std::string magic;
  in >> magic;
  if (magic == "collabperf-mf") return "mf";
  if (magic == "collabperf-ncf") return "ncf";
  throw SchemaError("not a collabperf checkpoint: " + path);
}

int cmd_predict(const Invocation& inv, std::ostream& out) {
  if (inv.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (inv.predict_model.empty()) throw ConfigError("--model is required");
  const RunConfig c = resolve(inv);

  std::vector<std::string> task_names;
  std::vector<double> values;
  if (checkpoint_kind(inv.checkpoint) == "mf") {
    const MFModel m = load_mf(inv.checkpoint);
    const auto u = m.models.find(inv.predict_model);
    if (!u) throw InputError("model '" + inv.predict_model + "' is unknown to the MF checkpoint");
    task_names = m.tasks.names();
    if (inv.predict_tasks != "all") task_names.clear();
    if (inv.predict_tasks != "all") {
      std::istringstream s(inv.predict_tasks);
      for (std::string t; std::getline(s, t, ',');) task_names.push_back(csv::trim(t));
    }
    for (const auto& t : task_names) {
      const auto i = m.tasks.find(t);
      if (!i) throw InputError("task '" + t + "' is unknown to the MF checkpoint");
      values.push_back(predict_mf(m, *u, *i));
    }
  } else {
    const NCFModel m = load_ncf(inv.checkpoint);
    std::optional<ModelTable> model_table;
    std::optional<TaskTable> task_table;
    if (m.uses_factors()) {
      model_table = load_model_factors(c.models_file());
      task_table = load_task_factors(c.tasks_file());
    }
    NCFQuery q;
    if (m.uses_factors()) {
      q.model_record = model_table->find(inv.predict_model);
      if (!q.model_record) throw LinkageError("model '" + inv.predict_model + "' has no factor record");
    }
    if (m.uses_ids()) {
      const auto u = m.models.find(inv.predict_model);
      if (!u) throw InputError("model '" + inv.predict_model + "' is unknown to the checkpoint");
      q.model_index = *u;
    }
    if (inv.predict_tasks == "all") {
      task_names = m.tasks.names();
    } else {
      std::istringstream s(inv.predict_tasks);
      for (std::string t; std::getline(s, t, ',');) task_names.push_back(csv::trim(t));
    }
    for (const auto& t : task_names) {
      if (m.uses_ids()) {
        const auto i = m.tasks.find(t);
        if (!i) throw InputError("task '" + t + "' is unknown to the checkpoint");
        q.task_index = *i;
      }
      if (m.uses_factors()) {
        q.task_record = task_table->find(t);
        if (!q.task_record) throw LinkageError("task '" + t + "' has no factor record");
      }
      values.push_back(predict_ncf(m, q));
    }
  }

  std::ofstream file;
  std::ostream* dst = &out;
  if (!inv.output.empty()) {
    file.open(inv.output, std::ios::binary);
    if (!file) throw InputError("cannot write " + inv.output);
    dst = &file;
  }
  *dst << "model,task,predicted\n";
  for (std::size_t i = 0; i < task_names.size(); ++i)
    csv::write_row(*dst, {inv.predict_model, task_names[i], format_double(values[i])});
  return kExitOk;
}

int cmd_eval(const Invocation& inv, std::ostream& out) {
  RunConfig c = resolve(inv);
  if (c.methods.empty()) c.methods = {Method::mf, Method::ncf, Method::ncf_factor, Method::factor_only};
  const Dataset d = load(c);
  RunDir run(c, d, "eval");
  const auto result = run_benchmark_eval(d, c.methods, c.experiment());
  for (const auto& n : result.notes) run.log(n);

  std::ofstream report = run.open("report.csv");
  write_report_header(report);
  for (const auto& r : result.reports) write_report_row(r, report);
  std::ofstream seeds = run.open("plotdata/per_seed.csv");
  write_per_seed(result.reports, seeds);
  std::ofstream pts = run.open("plotdata/predictions.csv");
  pts << "method,seed,model,task,truth,predicted\n";
  for (const auto& p : result.points)
    csv::write_row(pts, {p.method, std::to_string(p.seed), p.model, p.task, format_double(p.truth),
                         format_double(p.predicted)});
  std::ofstream txt = run.open("report.txt");
  write_report(result.reports, txt);
  write_report(result.reports, out);
  run.finish();
  return kExitOk;
}

int cmd_scenario(const Invocation& inv, std::ostream& out) {
  RunConfig c = resolve(inv);
  const Method method = single_method(c, Method::ncf_factor);
  if (c.target_model.empty()) throw ConfigError("--target is required");
  const Dataset d = load(c);
  RunDir run(c, d, "scenario");
  const auto r = run_scenario(d, c.target_model, c.scenario, c.experiment(), method);
  for (const auto& n : r.notes) run.log(n);
  for (std::size_t s = 0; s < r.prior_entries.size(); ++s)
    run.log("seed " + std::to_string(c.seeds[s]) + ": " + std::to_string(r.prior_entries[s]) +
            " target entries in train");

  std::vector<EvalReport> reports{r.cpp};
  if (r.scaling) reports.push_back(*r.scaling);
  std::ofstream report = run.open("report.csv");
  write_report_header(report);
  for (const auto& x : reports) write_report_row(x, report);
  std::ofstream seeds = run.open("plotdata/per_seed.csv");
  write_per_seed(reports, seeds);
  std::ofstream tri = run.open("plotdata/triples.csv");
  tri << "seed,task,truth,cpp,scaling\n";
  for (const auto& t : r.triples)
    csv::write_row(tri, {std::to_string(t.seed), t.task, format_double(t.truth), format_double(t.cpp),
                         t.scaling ? format_double(*t.scaling) : std::string()});
  std::ofstream curves = run.open("plotdata/curves.csv");
  write_curves_csv(r.curves, curves);
  write_report(reports, out);
  for (const auto& n : r.notes) out << "note: " << n << '\n';
  run.finish();
  return kExitOk;
}

int cmd_shapley(const Invocation& inv, std::ostream& out) {
  RunConfig c = resolve(inv);
  const Dataset d = load(c);
  const std::uint64_t seed = c.seeds.front();
  const auto s = split(d.scores, SplitSpec{seed, c.validation_fraction, Scenario::random, {}});

  std::optional<NCFModel> model;
  if (!inv.checkpoint.empty()) {
    if (checkpoint_kind(inv.checkpoint) != "ncf") throw InputError("shapley needs a factor NCF checkpoint");
    model = load_ncf(inv.checkpoint);
    if (!c.methods.empty()) throw ConfigError("--method cannot be combined with --checkpoint");
  } else {
    const Method method = single_method(c, Method::ncf_factor);
    if (method != Method::ncf_factor && method != Method::factor_only)
      throw ConfigError("shapley needs ncf_factor or factor_only");
  }
  if (model && !model->uses_factors()) throw InputError("checkpoint has no factor inputs");

  RunDir run(c, d, "shapley");
  if (!model) {
    TrainConfig tc = c.train;
    tc.seed = seed;
    const NCFVariant v =
        c.methods.front() == Method::factor_only ? NCFVariant::factor_only : NCFVariant::factor_enhanced;
    model = train_ncf(s.train, d.models, d.tasks, v, tc);
    save_ncf(*model, (fs::create_directories(run.path("checkpoints")), run.path("checkpoints/shapley.ckpt")).string());
    run.log("trained " + std::string(to_string(v)) + " on seed " + std::to_string(seed) + " split");
  } else {
    if (model->models != d.scores.models() || model->tasks != d.scores.tasks())
      run.log("warning: checkpoint registries differ from the dataset; ids are looked up by position");
    run.log("checkpoint " + inv.checkpoint);
  }

  std::vector<std::size_t> players;
  if (inv.factors.empty()) {
    players = all_factors();
  } else {
    std::istringstream in(inv.factors);
    for (std::string f; std::getline(in, f, ',');) {
      const auto idx = find_factor(csv::trim(f));
      if (!idx) throw SchemaError("unknown factor '" + csv::trim(f) + "'");
      players.push_back(*idx);
    }
  }

  AttributionSet set{s.valid.entries(), d.models, d.tasks};
  const ShapleyReport rep = exact_shapley(*model, set, players, c.workers);
  std::ofstream report = run.open("report.csv");
  write_shapley_csv(rep, report);
  std::ofstream inst = run.open("plotdata/shapley_instances.csv");
  write_shapley_instances_csv(rep, set, d.scores, inst);

  out << rep.convention << '\n';
  out << "v(N) = " << format_double(rep.v_all) << ", v(empty) = " << format_double(rep.v_none) << '\n';
  for (std::size_t pos : rep.ranking)
    out << factor_schema()[rep.factors[pos]].name << ' ' << format_double(rep.mean[pos]) << '\n';
  out << "efficiency gap " << format_double(rep.efficiency_gap()) << '\n';
  run.log("efficiency gap " + format_double(rep.efficiency_gap()));
  run.finish();
  return kExitOk;
}

void write_matrix(std::ostream& out, const std::vector<std::string>& rows, const std::vector<std::string>& cols,
                  const Table& t) {
  std::vector<std::string> header{""};
  header.insert(header.end(), cols.begin(), cols.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> line{rows[i]};
    for (double v : t[i]) line.push_back(format_double(v));
    csv::write_row(out, line);
  }
}

int cmd_loo(const Invocation& inv, std::ostream& out) {
  RunConfig c = resolve(inv);
  LooOptions lo;
  lo.axis = c.axis;
  lo.method = single_method(c, Method::ncf_factor);
  lo.holdout_fraction = c.holdout_fraction;
  lo.cut_height = c.cut_height;
  const Dataset d = load(c);
  RunDir run(c, d, "loo");
  const LooResult r = leave_one_out(d, lo, c.experiment());
  for (const auto& w : r.warnings) run.log("warning: " + w);
  run.log("loss per cell: " + r.loss_name);

  std::ofstream report = run.open("report.csv");
  report << "masked,validation,loss,baseline_loss,delta,normalized_delta,degenerate_column\n";
  for (std::size_t i = 0; i < r.masked.size(); ++i)
    for (std::size_t j = 0; j < r.validation.size(); ++j)
      csv::write_row(report, {r.masked[i], r.validation[j], format_double(r.loss_matrix[i][j]),
                              format_double(r.baseline_losses[j]), format_double(r.delta[i][j]),
                              format_double(r.normalized_delta[i][j]), r.degenerate_column[j] ? "1" : "0"});
  std::ofstream corr = run.open("plotdata/correlation.csv");
  write_matrix(corr, r.masked, r.masked, r.correlation);
  std::ofstream norm = run.open("plotdata/normalized_delta.csv");
  write_matrix(norm, r.masked, r.validation, r.normalized_delta);
  std::ofstream clusters = run.open("plotdata/clusters.csv");
  clusters << "cluster,member\n";
  for (std::size_t k = 0; k < r.clustering.clusters.size(); ++k)
    for (std::size_t leaf : r.clustering.clusters[k]) csv::write_row(clusters, {std::to_string(k), r.masked[leaf]});
  std::ofstream dendro = run.open("plotdata/dendrogram.csv");
  dendro << "step,left,right,height,size\n";
  for (std::size_t k = 0; k < r.clustering.tree.merges.size(); ++k) {
    const auto& m = r.clustering.tree.merges[k];
    csv::write_row(dendro, {std::to_string(k), std::to_string(m.left), std::to_string(m.right),
                            format_double(m.height), std::to_string(m.size)});
  }

  out << r.masked.size() << " masked " << (r.axis == Axis::models ? "models" : "tasks") << ", "
      << r.validation.size() << " validation columns, " << r.clustering.clusters.size() << " clusters at cut "
      << format_double(c.cut_height) << '\n';
  for (std::size_t k = 0; k < r.clustering.clusters.size(); ++k) {
    out << "cluster " << k << ':';
    for (std::size_t leaf : r.clustering.clusters[k]) out << ' ' << r.masked[leaf];
    out << '\n';
  }
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  run.finish();
  return kExitOk;
}

int cmd_sparsity(const Invocation& inv, std::ostream& out) {
  RunConfig c = resolve(inv);
  const Method method = single_method(c, Method::ncf_factor);
  const Dataset d = load(c);
  RunDir run(c, d, "sparsity");
  const auto rows = sparsity_sweep(d, c.sparsity_levels, c.experiment(), method);

  std::ofstream report = run.open("report.csv");
  report << "target_sparsity,achieved_sparsity,mse,mse_std,l1_mean,l1_std,rank_accuracy_pct,rank_accuracy_std,"
            "mae_at_2_pct,mae_at_2_std,n_eval,n_seeds\n";
  std::vector<EvalReport> reports;
  for (const auto& row : rows) {
    const auto& r = row.report;
    csv::write_row(report, {format_double(row.target_sparsity), format_double(row.achieved_sparsity),
                            format_double(r.mse), format_double(r.mse_std), format_double(r.l1_mean),
                            format_double(r.l1_std), format_double(r.rank_accuracy_pct),
                            format_double(r.accuracy_std), format_double(r.mae_at_2_pct),
                            format_double(r.mae_at_2_std), std::to_string(r.n_eval),
                            std::to_string(r.per_seed.size())});
    reports.push_back(r);
  }
  std::ofstream seeds = run.open("plotdata/per_seed.csv");
  write_per_seed(reports, seeds);
  write_report(reports, out);
  run.finish();
  return kExitOk;
}

int cmd_scaling(const Invocation& inv, std::ostream& out) {
  const RunConfig c = resolve(inv);
  const Dataset d = load(c);
  RunDir run(c, d, "scaling");
  const ExperimentOptions opt = c.experiment();

  std::map<std::string, std::vector<std::size_t>> families;
  for (std::size_t u = 0; u < d.models.size(); ++u)
    if (d.models[u].has_params() && !d.models[u].family().empty()) families[d.models[u].family()].push_back(u);

  std::vector<ScalingCurve> curves;
  std::size_t skipped = 0;
  for (const auto& [family, members] : families) {
    for (std::size_t t = 0; t < d.scores.n_tasks(); ++t) {
      std::vector<CurvePoint> pts;
      for (std::size_t u : members)
        if (auto s = d.scores.score(u, t)) pts.push_back({d.models[u].params_m(), *s});
      if (pts.size() < 2) continue;
      try {
        ScalingCurve curve = fit_curve(pts, opt.bounds);
        curve.family = family;
        curve.task = d.scores.tasks().name(t);
        curves.push_back(std::move(curve));
      } catch (const Error& e) {
        if (e.is_input()) throw;
        ++skipped;
        run.log("skip " + family + " / " + d.scores.tasks().name(t) + ": " + e.what());
      }
    }
  }
  std::ofstream report = run.open("report.csv");
  write_curves_csv(curves, report);
  out << curves.size() << " curves fitted, " << skipped << " skipped\n";
  run.finish();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collaborative performance prediction for LLM score matrices", "collabperf"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Invocation inv;
  auto* validate = app.add_subcommand("validate", "check schema, linkage and ranges of a dataset");
  add_data_options(validate, inv);

  auto* train = app.add_subcommand("train", "train one predictor and write a checkpoint");
  add_data_options(train, inv);
  add_train_options(train, inv);
  add_option(train, inv, "--method", "methods", "mf, ncf, ncf_factor or factor_only");
  train->add_flag("--full", inv.full, "train on every observed entry (no validation split)");

  auto* predict = app.add_subcommand("predict", "predict scores of one model from a checkpoint");
  add_data_options(predict, inv);
  predict->add_option("--checkpoint", inv.checkpoint, "checkpoint file")->required();
  predict->add_option("--model", inv.predict_model, "model name")->required();
  predict->add_option("--tasks", inv.predict_tasks, "'all' or comma-separated task names");
  predict->add_option("--output", inv.output, "CSV destination (default stdout)");

  auto* eval = app.add_subcommand("eval", "benchmark methods over random validation splits");
  add_data_options(eval, inv);
  add_train_options(eval, inv);
  add_option(eval, inv, "--methods", "methods", "comma-separated methods");

  auto* scenario = app.add_subcommand("scenario", "CPP-0 / CPP-2 prediction for one target model");
  add_data_options(scenario, inv);
  add_train_options(scenario, inv);
  add_option(scenario, inv, "--method", "methods", "collaborative method");
  add_option(scenario, inv, "--target", "target_model", "target model name");
  add_option(scenario, inv, "--scenario", "scenario", "cpp0 or cpp2");

  auto* shapley = app.add_subcommand("shapley", "exact Shapley importance of the factors");
  add_data_options(shapley, inv);
  add_train_options(shapley, inv);
  add_option(shapley, inv, "--method", "methods", "ncf_factor or factor_only when training");
  shapley->add_option("--checkpoint", inv.checkpoint, "factor NCF checkpoint (trains one when absent)");
  shapley->add_option("--factors", inv.factors, "comma-separated factor subset (default all)");

  auto* loo = app.add_subcommand("loo", "leave-one-out influence and clustering");
  add_data_options(loo, inv);
  add_train_options(loo, inv);
  add_option(loo, inv, "--method", "methods", "collaborative method");
  add_option(loo, inv, "--axis", "axis", "models or tasks");
  add_option(loo, inv, "--holdout-fraction", "holdout_fraction", "per-entity validation share");
  add_option(loo, inv, "--cut-height", "cut_height", "dendrogram cut on 1 - correlation");

  auto* sparsity = app.add_subcommand("sparsity", "accuracy against training-matrix sparsity");
  add_data_options(sparsity, inv);
  add_train_options(sparsity, inv);
  add_option(sparsity, inv, "--method", "methods", "collaborative method");
  add_option(sparsity, inv, "--levels", "sparsity_levels", "comma-separated target sparsities");

  auto* scaling = app.add_subcommand("scaling", "fit in-family sigmoidal scaling curves per task");
  add_data_options(scaling, inv);
  add_option(scaling, inv, "--out", "output_dir", "run directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (validate->parsed()) return cmd_validate(inv, out);
    if (train->parsed()) return cmd_train(inv, out);
    if (predict->parsed()) return cmd_predict(inv, out);
    if (eval->parsed()) return cmd_eval(inv, out);
    if (scenario->parsed()) return cmd_scenario(inv, out);
    if (shapley->parsed()) return cmd_shapley(inv, out);
    if (loo->parsed()) return cmd_loo(inv, out);
    if (sparsity->parsed()) return cmd_sparsity(inv, out);
    if (scaling->parsed()) return cmd_scaling(inv, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_input() ? kExitInput : kExitRuntime;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInput;
}

}  // namespace collabperf
