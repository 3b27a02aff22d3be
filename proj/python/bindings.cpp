#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "srcount/array_model.hpp"
#include "srcount/classical.hpp"
#include "srcount/cli.hpp"
#include "srcount/covariance.hpp"
#include "srcount/detectors.hpp"
#include "srcount/errors.hpp"
#include "srcount/evalkit.hpp"
#include "srcount/io.hpp"

namespace py = pybind11;
using namespace srcount;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

CovMatrix as_cov(const CMatrix& r, std::size_t snapshots) { return {r, snapshots, std::nullopt}; }

Scenario make_scenario(std::vector<double> angles, std::vector<std::tuple<std::size_t, double, double>> coherent,
                       std::size_t snapshots, double sinr_db, std::uint64_t seed, bool noiseless) {
  Scenario s;
  s.angles_deg = std::move(angles);
  for (auto [p, rho, phi] : coherent) s.coherent.push_back({p, rho, phi});
  s.snapshots = snapshots;
  s.sinr_db = sinr_db;
  s.seed = seed;
  s.noiseless = noiseless;
  return s;
}

py::tuple dataset_arrays(const LabeledDataset& d) {
  FloatArray x({d.size(), d.width});
  std::copy(d.features.begin(), d.features.end(), x.mutable_data());
  py::array_t<std::uint16_t> total(d.size()), nc(d.size());
  std::copy(d.labels_total.begin(), d.labels_total.end(), total.mutable_data());
  std::copy(d.labels_noncoherent.begin(), d.labels_noncoherent.end(), nc.mutable_data());
  return py::make_tuple(x, total, nc);
}

class Model {
 public:
  explicit Model(DetectorModel m, LabelSemantics s) : model_(std::make_shared<DetectorModel>(std::move(m))), semantics_(s) {}

  static Model load(const std::string& path) {
    auto ck = io::decode_checkpoint(io::read_file(path));
    return Model(std::move(ck.model), ck.semantics);
  }

  py::array_t<std::int64_t> predict(const FloatArray& rows) const {
    check(rows);
    std::vector<std::size_t> labels;
    {
      py::gil_scoped_release release;
      labels = srcount::predict(*model_, std::span<const float>(rows.data(), rows.size()));
    }
    py::array_t<std::int64_t> out(labels.size());
    std::copy(labels.begin(), labels.end(), out.mutable_data());
    return out;
  }

  py::array_t<float> logits(const FloatArray& rows) const {
    check(rows);
    const auto y = srcount::logits(*model_, std::span<const float>(rows.data(), rows.size()));
    py::array_t<float> out({y.dim(0), y.dim(1)});
    std::copy(y.storage().begin(), y.storage().end(), out.mutable_data());
    return out;
  }

  std::size_t detect(const CMatrix& x, std::optional<std::size_t> l0) const {
    Frame f{x, 0, 0};
    return l0 ? detect_sources_coherent(*model_, f, *l0) : detect_sources(*model_, f);
  }

  std::size_t input_width() const { return model_->input_width; }
  std::size_t num_classes() const { return model_->num_classes; }
  std::string architecture() const { return std::string(to_string(model_->architecture)); }
  std::string labels() const { return std::string(to_string(semantics_)); }

 private:
  void check(const FloatArray& rows) const {
    if (rows.ndim() != 2 || static_cast<std::size_t>(rows.shape(1)) != model_->input_width) {
      throw DataError("expected a [rows, " + std::to_string(model_->input_width) + "] feature array");
    }
  }

  std::shared_ptr<DetectorModel> model_;
  LabelSemantics semantics_;
};

}  // namespace

PYBIND11_MODULE(_srcount, m) {
  m.doc() = "Source-count estimation for linear antenna arrays";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<CorruptionError>(m, "CorruptionError", base.ptr());

  m.def(
      "steering_vector",
      [](std::size_t elements, double theta_deg, double spacing) {
        return CVector(steering_vector(ArrayGeometry(elements, spacing), theta_deg));
      },
      py::arg("elements"), py::arg("theta_deg"), py::arg("spacing") = 0.5);

  m.def(
      "sample_frame",
      [](std::size_t elements, std::vector<double> angles_deg,
         std::vector<std::tuple<std::size_t, double, double>> coherent, std::size_t snapshots, double sinr_db,
         std::uint64_t seed, bool noiseless) {
        return sample_frame(ArrayGeometry(elements),
                            make_scenario(std::move(angles_deg), std::move(coherent), snapshots, sinr_db, seed,
                                          noiseless))
            .data;
      },
      py::arg("elements"), py::arg("angles_deg"), py::arg("coherent") = std::vector<std::tuple<std::size_t, double, double>>{},
      py::arg("snapshots") = 256, py::arg("sinr_db") = 10.0, py::arg("seed") = 0, py::arg("noiseless") = false,
      "L x N complex snapshots; coherent entries are (parent, rho, phi).");

  m.def("autocorrelation", [](const CMatrix& x) { return autocorrelation(x).data; }, py::arg("x"));
  m.def(
      "fbss", [](const CMatrix& r, std::size_t l0) { return fbss(as_cov(r, 1), l0).data; }, py::arg("r"),
      py::arg("subarray_size"));
  m.def(
      "extract_features", [](const CMatrix& r) { return extract_features(as_cov(r, 1)).values; }, py::arg("r"));
  m.def("eigvalsh", [](const CMatrix& r) { return eigvalsh(r); }, py::arg("r"));
  m.def(
      "mdl", [](std::vector<double> e, std::size_t n) { return mdl(e, n).values; }, py::arg("eigs"),
      py::arg("snapshots"));
  m.def(
      "aic", [](std::vector<double> e, std::size_t n) { return aic(e, n).values; }, py::arg("eigs"),
      py::arg("snapshots"));
  m.def(
      "detect_classical",
      [](const CMatrix& x, const std::string& method, std::optional<std::size_t> l0) {
        return detect_classical(Frame{x, 0, 0}, parse_criterion(method), l0);
      },
      py::arg("x"), py::arg("method") = "mdl", py::arg("fbss") = std::nullopt);

  m.def(
      "generate",
      [](std::size_t elements, std::vector<std::size_t> classes, std::size_t count, std::uint64_t seed,
         std::size_t snapshots, std::pair<double, double> sinr_db, std::vector<std::size_t> coherent,
         std::optional<std::size_t> fbss, const std::string& split) {
        GenerationConfig c;
        c.classes = std::move(classes);
        c.coherent_counts = std::move(coherent);
        c.count = count;
        c.seed = seed;
        c.snapshots = snapshots;
        c.sinr = SinrPolicy::uniform(sinr_db.first, sinr_db.second);
        if (fbss) {
          c.pipeline = Pipeline::fbss;
          c.subarray_size = *fbss;
        }
        c.split = parse_split(split);
        LabeledDataset d;
        {
          py::gil_scoped_release release;
          d = build_dataset(ArrayGeometry(elements), c);
        }
        return dataset_arrays(d);
      },
      py::arg("elements"), py::arg("classes"), py::arg("count"), py::arg("seed") = 1, py::arg("snapshots") = 256,
      py::arg("sinr_db") = std::pair<double, double>{0.0, 20.0}, py::arg("coherent") = std::vector<std::size_t>{0},
      py::arg("fbss") = std::nullopt, py::arg("split") = "train",
      "Returns (features [count, width] float32, total labels, non-coherent labels).");

  m.def(
      "load_dataset",
      [](const std::string& path) { return dataset_arrays(io::decode_dataset(io::read_file(path))); },
      py::arg("path"));

  m.def(
      "evaluate",
      [](std::vector<std::size_t> truth, std::vector<std::size_t> pred, std::size_t classes) {
        const auto r = evaluate(truth, pred, classes);
        py::array_t<std::int64_t> conf({r.num_classes, r.num_classes});
        std::copy(r.confusion.begin(), r.confusion.end(), conf.mutable_data());
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["confusion"] = conf;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["f1"] = r.f1;
        d["support"] = r.support;
        return d;
      },
      py::arg("truth"), py::arg("predicted"), py::arg("num_classes") = 0);

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def("predict", &Model::predict, py::arg("features"))
      .def("logits", &Model::logits, py::arg("features"))
      .def("detect", &Model::detect, py::arg("x"), py::arg("fbss") = std::nullopt)
      .def_property_readonly("input_width", &Model::input_width)
      .def_property_readonly("num_classes", &Model::num_classes)
      .def_property_readonly("architecture", &Model::architecture)
      .def_property_readonly("labels", &Model::labels);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one srcount command; returns (exit code, stdout, stderr).");
}
