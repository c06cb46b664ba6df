// End-to-end CLI run over the synthetic surrogate dataset with short training.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "collabperf/cli.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << '\n';
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args, std::string* stdout_text = nullptr) {
  std::ostringstream out, err;
  const int code = collabperf::run_cli(args, out, err);
  if (stdout_text) *stdout_text = out.str();
  if (code != 0) std::cerr << "collabperf";
  if (code != 0)
    for (const auto& a : args) std::cerr << ' ' << a;
  if (code != 0) std::cerr << "\n" << err.str();
  return code;
}

}  // namespace

int main() {
  const std::string data = std::string(COLLABPERF_SOURCE_DIR) + "/data/surrogate";
  const fs::path root = fs::path(COLLABPERF_TEST_TMP) / "surrogate_pipeline";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::string> quick{"--data", data, "--iterations", "1500", "--seeds", "2"};
  auto args = [&](std::vector<std::string> head, const std::string& out) {
    head.insert(head.end(), quick.begin(), quick.end());
    head.push_back("--out");
    head.push_back((root / out).string());
    return head;
  };

  std::string text;
  expect(cli({"validate", "--data", data}, &text) == 0, "validate");
  expect(text.find("72 models, 29 tasks") != std::string::npos, "surrogate shape");

  expect(cli(args({"eval"}, "eval_a")) == 0, "eval");
  expect(cli(args({"eval", "--workers", "2"}, "eval_b")) == 0, "eval with two workers");
  const auto report = slurp(root / "eval_a" / "report.csv");
  expect(!report.empty() && report == slurp(root / "eval_b" / "report.csv"), "eval report reproducible");
  for (const char* label : {"mf,", "ncf,", "ncf_factor,", "factor_only,"})
    expect(report.find(std::string("\n") + label) != std::string::npos, std::string("eval row ") + label);

  expect(cli(args({"scenario", "--target", "LLama-2-70B", "--scenario", "cpp2"}, "scenario")) == 0, "scenario");
  expect(fs::exists(root / "scenario" / "plotdata" / "triples.csv"), "scenario triples");

  expect(cli(args({"train", "--method", "ncf_factor", "--full"}, "train")) == 0, "train");
  const auto ckpt = (root / "train" / "checkpoints" / "ncf_factor.ckpt").string();
  const auto predictions = (root / "predictions.csv").string();
  expect(cli({"predict", "--data", data, "--checkpoint", ckpt, "--model", "LLama-2-7B", "--output", predictions}) == 0,
         "predict");
  expect(fs::exists(predictions), "predict output");

  expect(cli(args({"shapley", "--checkpoint", ckpt, "--factors",
                   "family,params_m,pretrain_tokens_b,flops,ability,few_shot"},
                  "shapley"),
             &text) == 0,
         "shapley");
  expect(text.find("efficiency gap") != std::string::npos, "shapley summary");

  expect(cli(args({"sparsity", "--levels", "0.5,0.8"}, "sparsity")) == 0, "sparsity");
  expect(cli(args({"loo", "--axis", "tasks"}, "loo")) == 0, "loo");
  expect(fs::exists(root / "loo" / "plotdata" / "dendrogram.csv"), "loo dendrogram");
  expect(cli({"scaling", "--data", data, "--out", (root / "scaling").string()}) == 0, "scaling");

  if (failures == 0) std::cout << "surrogate pipeline ok\n";
  return failures == 0 ? 0 : 1;
}
