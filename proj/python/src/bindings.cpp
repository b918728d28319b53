#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcs/bench.hpp"
#include "mcs/softsort.hpp"

namespace py = pybind11;
using namespace mcs;

namespace {

LabeledDataset labeled(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw DimensionMismatch("x and y need the same number of rows");
  return LabeledDataset{x, y};
}

py::dict as_dict(const LabeledDataset& d) {
  py::dict out;
  out["x"] = d.x;
  out["y"] = d.y;
  return out;
}

MethodOptions options_for(const std::string& predictor, double ridge_lambda, std::size_t knn_k) {
  MethodOptions o;
  if (predictor == "knn") {
    o.predictor = PredictorKind::Knn;
  } else if (predictor != "ridge") {
    throw std::invalid_argument("predictor must be 'ridge' or 'knn'");
  }
  o.ridge_lambda = ridge_lambda;
  o.knn_k = knn_k;
  return o;
}

}  // namespace

PYBIND11_MODULE(_mcs, m) {
  m.doc() = "Multivariate conformal selection";

  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);

  py::class_<TargetRegion>(m, "Region")
      .def(py::init([](const std::string& text) { return parse_region(text); }), py::arg("spec"))
      .def_static("orthant", &TargetRegion::orthant)
      .def_static("ball", &TargetRegion::ball)
      .def_static("ball_complement", &TargetRegion::ball_complement)
      .def_static("orthant_complement", &TargetRegion::orthant_complement)
      .def_static("half_line", &TargetRegion::half_line)
      .def_property_readonly("kind", &TargetRegion::kind)
      .def_property_readonly("dimension", &TargetRegion::dimension)
      .def("contains", [](const TargetRegion& r, const Vector& y) { return contains(r, y); })
      .def("interior_contains", [](const TargetRegion& r, const Vector& y) { return interior_contains(r, y); })
      .def(
          "dist_to_complement",
          [](const TargetRegion& r, const Vector& z, const std::string& norm) {
            return dist_to_complement(r, z, parse_norm(norm));
          },
          py::arg("z"), py::arg("norm") = "2")
      .def("boundary_point", [](const TargetRegion& r) { return boundary_point(r); })
      .def("__repr__", [](const TargetRegion& r) { return "Region('" + format_region(r) + "')"; })
      .def("__str__", &format_region);

  m.def(
      "task_region", [](int task, std::size_t d) { return task_region(task, d); }, py::arg("task"), py::arg("d"));

  m.def(
      "conformal_p_values",
      [](const std::vector<double>& cal, const std::vector<double>& test, std::uint64_t seed) {
        Rng rng = stream_for(seed, 0);
        return conformal_p_values(cal, test, rng).values();
      },
      py::arg("cal_scores"), py::arg("test_scores"), py::arg("seed") = 0,
      "Randomized conformal p-values; larger scores are more conforming to the region.");

  m.def(
      "bh_select",
      [](const std::vector<double>& p, double q) {
        const SelectionResult r = bh_select(PValueVector(p), q);
        return py::make_tuple(r.selected, r.k_star, r.threshold);
      },
      py::arg("p_values"), py::arg("q"), "Benjamini-Hochberg; returns (selected indices, k_star, threshold).");

  m.def(
      "soft_rank", [](const std::vector<double>& v, double epsilon) { return soft_rank(v, epsilon); },
      py::arg("values"), py::arg("epsilon"));

  m.def(
      "simulate",
      [](int setting, int task, std::size_t d, std::size_t p, std::size_t n_train, std::size_t n_cal, std::size_t m,
         std::uint64_t seed) {
        SimConfig c{setting, task, d, p, n_train, n_cal, m, seed};
        const SimDatasets data = gen_dataset(c);
        py::dict out;
        out["train"] = as_dict(data.train);
        out["cal"] = as_dict(data.cal);
        out["test"] = as_dict(data.test);
        out["region"] = task_region(task, d);
        return out;
      },
      py::arg("setting") = 1, py::arg("task") = 1, py::arg("d") = 10, py::arg("p") = 10, py::arg("n_train") = 500,
      py::arg("n_cal") = 500, py::arg("m") = 100, py::arg("seed") = 0);

  m.def(
      "select",
      [](const Matrix& train_x, const Matrix& train_y, const Matrix& cal_x, const Matrix& cal_y, const Matrix& test_x,
         const TargetRegion& region, const std::string& method, double q, std::uint64_t seed,
         const std::string& predictor, double ridge_lambda, std::size_t knn_k) {
        const MethodOptions options = options_for(predictor, ridge_lambda, knn_k);
        const Method parsed = parse_method(method);
        if (parsed == Method::Oracle) throw std::invalid_argument("the oracle needs test labels");
        std::shared_ptr<const Predictor> model = fit_predictor(labeled(train_x, train_y), options);
        Rng rng = stream_for(seed, 0);
        const MethodOutput r =
            run_method(parsed, labeled(cal_x, cal_y), UnlabeledDataset{test_x}, region, model, q, rng, options);
        py::dict out;
        out["selected"] = r.selected;
        out["p_values"] = r.p_values;
        out["k_star"] = r.k_star;
        out["threshold"] = r.threshold;
        return out;
      },
      py::arg("train_x"), py::arg("train_y"), py::arg("cal_x"), py::arg("cal_y"), py::arg("test_x"),
      py::arg("region"), py::arg("method") = "mcs_dist", py::arg("q") = 0.3, py::arg("seed") = 0,
      py::arg("predictor") = "ridge", py::arg("ridge_lambda") = 1e-3, py::arg("knn_k") = 10);

  m.def(
      "benchmark",
      [](int setting, int task, std::size_t d, const std::vector<std::string>& methods, double q, std::size_t reps,
         std::uint64_t seed, std::size_t n_train, std::size_t n_cal, std::size_t m, std::size_t jobs) {
        std::vector<Method> parsed;
        for (const std::string& name : methods) parsed.push_back(parse_method(name));
        const SimConfig c{setting, task, d, 10, n_train, n_cal, m, seed};
        std::vector<BenchmarkRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_benchmark(c, parsed, q, reps, jobs);
        }
        py::list out;
        for (const BenchmarkRow& r : rows) {
          py::dict row;
          row["method"] = to_string(r.method);
          row["q"] = r.q;
          row["mean_fdr"] = r.mean_fdr;
          row["se_fdr"] = r.se_fdr;
          row["mean_power"] = r.mean_power;
          row["se_power"] = r.se_power;
          row["reps"] = r.reps;
          out.append(row);
        }
        return out;
      },
      py::arg("setting") = 1, py::arg("task") = 1, py::arg("d") = 10,
      py::arg("methods") = std::vector<std::string>{"mcs_dist"}, py::arg("q") = 0.3, py::arg("reps") = 20,
      py::arg("seed") = 0, py::arg("n_train") = 500, py::arg("n_cal") = 500, py::arg("m") = 100,
      py::arg("jobs") = 1);
}
