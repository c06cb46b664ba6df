#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "collabperf/cli.hpp"
#include "collabperf/csv.hpp"
#include "collabperf/run_config.hpp"
#include "fixtures.hpp"

using namespace collabperf;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string dataset_dir() {
  static const std::string dir = [] {
    const std::string d = fixtures::temp_dir("cli_data");
    fs::create_directories(d);
    const auto data = fixtures::synthetic_dataset(16, 6, 0.7, 21);
    write_scores(data.scores, d + "/scores.csv");
    ModelTable mt;
    for (const auto& r : data.models) {
      mt.records.push_back(r);
      mt.ids.add(r.identifier);
    }
    TaskTable tt;
    for (const auto& r : data.tasks) {
      tt.records.push_back(r);
      tt.ids.add(r.identifier);
    }
    std::ofstream m(d + "/models.csv"), t(d + "/tasks.csv");
    write_model_factors(mt, m);
    write_task_factors(tt, t);
    return d;
  }();
  return dir;
}

const std::vector<std::string> kQuick{"--iterations", "300", "--hidden", "8,4", "--latent-dim", "4",
                                      "--factor-width", "3"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("validate reports shape and density") {
  const auto r = run({"validate", "--data", dataset_dir()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("16 models, 6 tasks, density 0.") != std::string::npos);
}

TEST_CASE("validation failures exit with 2") {
  const std::string dir = fixtures::temp_dir("cli_bad");
  fs::create_directories(dir);
  fs::copy_file(dataset_dir() + "/models.csv", dir + "/models.csv", fs::copy_options::overwrite_existing);
  fs::copy_file(dataset_dir() + "/tasks.csv", dir + "/tasks.csv", fs::copy_options::overwrite_existing);
  { std::ofstream(dir + "/scores.csv") << "model,task,score\nm0,t0,0.5\nghost,t0,0.4\n"; }
  auto r = run({"validate", "--data", dir});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("ghost") != std::string::npos);
  { std::ofstream(dir + "/scores.csv") << ""; }
  CHECK(run({"validate", "--data", dir}).code == kExitInput);
  CHECK(run({"validate"}).code == kExitInput);
  CHECK(run({"frobnicate"}).code == kExitInput);
}

TEST_CASE("train then predict gives scores in [0, 1]") {
  const std::string out = fixtures::temp_dir("cli_train");
  auto r = run(with({"train", "--data", dataset_dir(), "--method", "ncf_factor", "--out", out}, kQuick));
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(out + "/config.resolved"));
  CHECK(fs::exists(out + "/log.txt"));
  CHECK(fs::exists(out + "/report.csv"));
  const std::string ckpt = out + "/checkpoints/ncf_factor.ckpt";
  REQUIRE(fs::exists(ckpt));

  r = run({"predict", "--data", dataset_dir(), "--checkpoint", ckpt, "--model", "m3", "--tasks", "all"});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  const auto rows = csv::read(in);
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double v = -1;
    REQUIRE(csv::parse_double(rows[i].cells[2], v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  r = run({"predict", "--data", dataset_dir(), "--checkpoint", ckpt, "--model", "nobody"});
  CHECK(r.code == kExitInput);
}

TEST_CASE("eval run directories are byte-identical for the same config") {
  const std::string a = fixtures::temp_dir("cli_eval_a"), b = fixtures::temp_dir("cli_eval_b");
  const auto args = with({"eval", "--data", dataset_dir(), "--methods", "mf,ncf_factor", "--seeds", "2"}, kQuick);
  REQUIRE(run(with(args, {"--out", a})).code == kExitOk);
  REQUIRE(run(with(args, {"--out", b, "--workers", "2"})).code == kExitOk);
  CHECK(slurp(a + "/report.csv") == slurp(b + "/report.csv"));
  CHECK(slurp(a + "/plotdata/predictions.csv") == slurp(b + "/plotdata/predictions.csv"));
  const auto cfg = slurp(a + "/config.resolved");
  CHECK(cfg.find("dataset_hash") != std::string::npos);
  CHECK(cfg.find("# collabperf " + std::string(version())) != std::string::npos);
  CHECK(cfg.find("seeds = 1,2") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
  const std::string dir = fixtures::temp_dir("cli_cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/run.cfg");
    f << "# quick run\ndata_dir = " << dataset_dir() << "\nmethods = mf\niterations = 1000\nseeds = 3,\n";
  }
  const auto r = run({"eval", "--config", dir + "/run.cfg", "--iterations", "500", "--out", dir + "/run"});
  REQUIRE(r.code == kExitOk);
  const auto resolved = slurp(dir + "/run/config.resolved");
  CHECK(resolved.find("iterations = 500") != std::string::npos);
  CHECK(resolved.find("seeds = 3,") != std::string::npos);
  CHECK(resolved.find("methods = mf") != std::string::npos);

  { std::ofstream(dir + "/bad.cfg") << "colour = blue\n"; }
  CHECK(run({"eval", "--config", dir + "/bad.cfg"}).code == kExitInput);
  CHECK(run({"eval", "--data", dataset_dir(), "--iterations", "abc"}).code == kExitInput);
}

TEST_CASE("resolved config parses back to itself") {
  auto kv = RunConfig::defaults();
  kv["seeds"] = "4,9";
  kv["hidden_layers"] = "16";
  const auto c = RunConfig::from_map(kv);
  const auto again = RunConfig::from_map(c.to_map());
  CHECK(again.to_map() == c.to_map());
  kv["seeds"] = "7,";
  CHECK(RunConfig::from_map(kv).seeds == std::vector<std::uint64_t>{7});
  kv["seeds"] = "3";
  CHECK(RunConfig::from_map(kv).seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("shapley prints the efficiency check") {
  const std::string out = fixtures::temp_dir("cli_shapley");
  const auto r = run(with({"shapley", "--data", dataset_dir(), "--out", out, "--validation-fraction", "0.2"}, kQuick));
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("efficiency gap") != std::string::npos);
  CHECK(slurp(out + "/report.csv").find("factor,kind,mean_shapley") != std::string::npos);
  CHECK(fs::exists(out + "/plotdata/shapley_instances.csv"));
}

TEST_CASE("runtime failures exit with 3") {
  // cpp2 needs three observed scores for the target; drop to two.
  const std::string dir = fixtures::temp_dir("cli_runtime");
  fs::create_directories(dir);
  fs::copy_file(dataset_dir() + "/models.csv", dir + "/models.csv", fs::copy_options::overwrite_existing);
  fs::copy_file(dataset_dir() + "/tasks.csv", dir + "/tasks.csv", fs::copy_options::overwrite_existing);
  { std::ofstream(dir + "/scores.csv") << "model,task,score\nm0,t0,0.5\nm0,t1,0.4\nm1,t0,0.3\nm1,t1,0.2\n"; }
  const auto r = run(with({"scenario", "--data", dir, "--target", "m0", "--scenario", "cpp2", "--out",
                           dir + "/run"}, kQuick));
  CHECK(r.code == kExitRuntime);
}

TEST_CASE("scaling and sparsity subcommands write reports") {
  const std::string out = fixtures::temp_dir("cli_scaling");
  auto r = run({"scaling", "--data", dataset_dir(), "--out", out});
  REQUIRE(r.code == kExitOk);
  CHECK(slurp(out + "/report.csv").rfind("family,task,w,b,residual,n_points", 0) == 0);
  const std::string sp = fixtures::temp_dir("cli_sparsity");
  r = run(with({"sparsity", "--data", dataset_dir(), "--method", "mf", "--seeds", "1", "--levels", "0.5,0.7",
                "--out", sp}, kQuick));
  REQUIRE(r.code == kExitOk);
  CHECK(slurp(sp + "/report.csv").find("target_sparsity") == 0);
}

TEST_CASE("loo subcommand writes correlation and clusters") {
  const std::string out = fixtures::temp_dir("cli_loo");
  const auto r = run(with({"loo", "--data", dataset_dir(), "--method", "mf", "--seeds", "1", "--out", out}, kQuick));
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(out + "/plotdata/correlation.csv"));
  CHECK(fs::exists(out + "/plotdata/clusters.csv"));
  CHECK(fs::exists(out + "/plotdata/dendrogram.csv"));
}
