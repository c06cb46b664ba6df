#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "collabperf/analysis.hpp"
#include "collabperf/cli.hpp"
#include "collabperf/error.hpp"
#include "collabperf/metrics.hpp"
#include "collabperf/scaling.hpp"

namespace py = pybind11;
using namespace collabperf;

namespace {

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["label"] = r.label;
  d["mse"] = r.mse;
  d["mse_std"] = r.mse_std;
  d["l1_mean"] = r.l1_mean;
  d["l1_std"] = r.l1_std;
  d["rank_accuracy_pct"] = r.rank_accuracy_pct;
  d["mae_at_2_pct"] = r.mae_at_2_pct;
  d["n_eval"] = r.n_eval;
  return d;
}

ExperimentOptions options(long long iterations, std::vector<std::uint64_t> seeds, unsigned workers) {
  ExperimentOptions o;
  o.train.iterations = iterations;
  o.seeds = std::move(seeds);
  o.workers = workers;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collaborative performance prediction for LLM benchmark scores";

  static py::exception<Error> base(m, "CollabperfError", PyExc_RuntimeError);
  static py::exception<Error> input(m, "InputError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      (e.is_input() ? input : base)(e.what());
    }
  });

  m.def("version", [] { return std::string(version()); });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", &load_dataset_dir, py::arg("directory"))
      .def_property_readonly("n_models", [](const Dataset& d) { return d.scores.n_models(); })
      .def_property_readonly("n_tasks", [](const Dataset& d) { return d.scores.n_tasks(); })
      .def_property_readonly("density", [](const Dataset& d) { return d.scores.density(); })
      .def_property_readonly("models", [](const Dataset& d) { return d.scores.models().names(); })
      .def_property_readonly("tasks", [](const Dataset& d) { return d.scores.tasks().names(); })
      .def_property_readonly("hash", [](const Dataset& d) { return d.scores.hash(); })
      .def("entries", [](const Dataset& d) {
        py::list out;
        for (const auto& e : d.scores.entries())
          out.append(py::make_tuple(d.scores.models().name(e.model), d.scores.tasks().name(e.task), e.score));
        return out;
      });

  m.def(
      "fit_curve",
      [](const std::vector<std::pair<double, double>>& points) {
        std::vector<CurvePoint> pts;
        for (auto [c, s] : points) pts.push_back({c, s});
        const auto curve = fit_curve(pts);
        return py::make_tuple(curve.w, curve.b);
      },
      py::arg("points"), "Bounded sigmoid fit of (compute, score) pairs; returns (w, b).");
  m.def(
      "predict_curve", [](double w, double b, double compute) { return predict_curve({w, b}, compute); },
      py::arg("w"), py::arg("b"), py::arg("compute"));

  m.def(
      "benchmark",
      [](const Dataset& data, const std::string& methods, long long iterations, std::vector<std::uint64_t> seeds,
         unsigned workers) {
        const auto list = parse_methods(methods);
        BenchmarkResult r;
        {
          py::gil_scoped_release release;
          r = run_benchmark_eval(data, list, options(iterations, std::move(seeds), workers));
        }
        py::list out;
        for (const auto& rep : r.reports) out.append(report_dict(rep));
        return out;
      },
      py::arg("data"), py::arg("methods") = "mf,ncf,ncf_factor,factor_only", py::arg("iterations") = 250000,
      py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3, 4, 5}, py::arg("workers") = 1);
}
