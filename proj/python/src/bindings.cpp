#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cnm/data.hpp"
#include "cnm/error.hpp"
#include "cnm/eval.hpp"
#include "cnm/kernels.hpp"
#include "cnm/maps.hpp"
#include "cnm/model.hpp"
#include "cnm/serialize.hpp"
#include "cnm/train.hpp"

namespace py = pybind11;
using namespace cnm;

namespace {

Dataset make_dataset(RowMatrix features, std::vector<int> labels, std::string name) {
  Dataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.name = std::move(name);
  ds.validate();
  return ds;
}

template <FeatureMap M>
RowMatrix transform(const M& map, const RowMatrix& x) {
  if (x.cols() != map.input_dim())
    throw InvalidArgument("transform: expected " + std::to_string(map.input_dim()) +
                          " columns, got " + std::to_string(x.cols()));
  RowMatrix z(x.rows(), map.output_dim());
  Vector row(x.cols());
  Vector out(map.output_dim());
  for (Index i = 0; i < x.rows(); ++i) {
    row = x.row(i).transpose();
    map.project_into(row, out);
    z.row(i) = out.transpose();
  }
  return z;
}

py::list trace_records(const TrainTrace& trace) {
  py::list out;
  for (const auto& r : trace.records) {
    py::dict d;
    d["iter"] = r.iter;
    d["objective"] = r.objective;
    d["train_acc"] = r.train_acc;
    d["test_acc"] = r.test_acc;
    d["mse"] = r.mse;
    out.append(d);
  }
  return out;
}

py::dict report_dict(const EvalReport& rep) {
  py::dict d;
  d["accuracy"] = rep.accuracy;
  d["mean_hinge"] = rep.mean_hinge;
  d["n_test"] = rep.n_test;
  d["n_correct"] = rep.n_correct;
  py::dict per_class;
  for (const auto& [label, c] : rep.per_class) {
    py::dict cd;
    cd["count"] = c.count;
    cd["correct"] = c.correct;
    per_class[py::int_(label)] = cd;
  }
  d["per_class"] = per_class;
  return d;
}

template <FeatureMap M>
void bind_map_functions(py::module_& m) {
  m.def("approx_mse",
        [](const M& map, const KernelSpec& spec, const Dataset& ds) {
          return approx_mse(map, spec, ds);
        },
        py::arg("map"), py::arg("spec"), py::arg("dataset"),
        "Mean squared error between the exact Gram matrix and the feature inner products.");
  m.def("evaluate",
        [](const LinearModel& model, const M& map, const Dataset& ds) {
          return report_dict(evaluate(model, map, ds));
        },
        py::arg("model"), py::arg("map"), py::arg("dataset"));
  m.def("train_fixed_map",
        [](const M& map, const Dataset& train, const TrainConfig& cfg, const Dataset* test) {
          return train_fixed_map(map, train, cfg, test);
        },
        py::arg("map"), py::arg("train"), py::arg("config"), py::arg("test") = nullptr,
        "Pegasos on a frozen feature map.");
}

template <class M>
void bind_result(py::module_& m, const char* name) {
  py::class_<TrainResult<M>>(m, name)
      .def_readonly("map", &TrainResult<M>::map)
      .def_readonly("model", &TrainResult<M>::model)
      .def_property_readonly("trace",
                             [](const TrainResult<M>& r) { return trace_records(r.trace); })
      .def_property_readonly("trace_csv",
                             [](const TrainResult<M>& r) { return r.trace.to_csv(); });
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compact nonlinear feature maps for shift-invariant kernels.";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DegenerateData>(m, "DegenerateData", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("features"), py::arg("labels"),
           py::arg("name") = "")
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("name", &Dataset::name)
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim)
      .def("is_binary", &Dataset::is_binary)
      .def("classes", &Dataset::classes)
      .def("__len__", &Dataset::size);

  m.def("load_libsvm", &load_libsvm, py::arg("path"));
  m.def("save_libsvm", &save_libsvm, py::arg("dataset"), py::arg("path"));
  m.def("load_csv",
        [](const std::filesystem::path& path, Index label_column, bool has_header) {
          return load_csv(path, CsvOptions{label_column, has_header, ','});
        },
        py::arg("path"), py::arg("label_column") = 0, py::arg("has_header") = false);
  m.def("make_two_rings", &make_two_rings, py::arg("n_per_class"), py::arg("inner_radius") = 1.0,
        py::arg("outer_radius") = 3.0, py::arg("noise_sd") = 0.5, py::arg("seed") = 0);
  m.def("make_gaussian", &make_gaussian, py::arg("n"), py::arg("d"), py::arg("seed") = 0);
  m.def("binarize",
        [](const Dataset& ds, const std::vector<int>& positive) {
          return binarize(ds, std::set<int>(positive.begin(), positive.end()));
        },
        py::arg("dataset"), py::arg("positive"));
  m.def("estimate_gamma",
        [](const Dataset& ds, std::uint64_t seed, Index sample_n, Index nn_rank) {
          Rng rng(seed);
          const auto g = estimate_gamma(ds, rng, sample_n, nn_rank);
          py::dict d;
          d["gamma"] = g.gamma;
          d["sigma"] = g.sigma;
          d["sample_used"] = g.sample_used;
          d["clamped"] = g.clamped;
          return d;
        },
        py::arg("dataset"), py::arg("seed") = 0, py::arg("sample_n") = 1000,
        py::arg("nn_rank") = 50, "RBF bandwidth gamma = 2 / sigma^2 from nearest-neighbour distances.");

  py::class_<KernelSpec>(m, "KernelSpec")
      .def(py::init([](double gamma) {
             KernelSpec s;
             s.gamma = gamma;
             s.validate();
             return s;
           }),
           py::arg("gamma"))
      .def_readonly("gamma", &KernelSpec::gamma)
      .def("__call__", [](const KernelSpec& s, const Vector& x,
                          const Vector& y) { return kernel_eval(s, x, y); });
  m.def("gram_exact",
        [](const KernelSpec& spec, const Dataset& ds, Index cap) {
          return gram_exact(spec, ds, cap).values;
        },
        py::arg("spec"), py::arg("dataset"), py::arg("cap") = kDefaultGramCap);

  py::class_<DenseFourierMap>(m, "DenseFourierMap")
      .def(py::init<Matrix, std::optional<Vector>>(), py::arg("theta"),
           py::arg("phases") = std::nullopt)
      .def_property_readonly("input_dim", &DenseFourierMap::input_dim)
      .def_property_readonly("output_dim", &DenseFourierMap::output_dim)
      .def_property_readonly("theta", &DenseFourierMap::theta)
      .def_property_readonly("phases", &DenseFourierMap::phases)
      .def("project", &DenseFourierMap::project, py::arg("x"))
      .def("transform", &transform<DenseFourierMap>, py::arg("x"))
      .def("to_json", [](const DenseFourierMap& map) { return map_to_json(map).dump(); });

  py::class_<CirculantFourierMap>(m, "CirculantFourierMap")
      .def(py::init<Index, std::vector<Vector>, Vector, std::optional<Vector>>(), py::arg("k"),
           py::arg("blocks"), py::arg("sign_flip"), py::arg("phases") = std::nullopt)
      .def_property_readonly("input_dim", &CirculantFourierMap::input_dim)
      .def_property_readonly("output_dim", &CirculantFourierMap::output_dim)
      .def_property_readonly("num_blocks", &CirculantFourierMap::num_blocks)
      .def_property_readonly("blocks", &CirculantFourierMap::blocks)
      .def_property_readonly("sign_flip", &CirculantFourierMap::sign_flip)
      .def_property_readonly("phases", &CirculantFourierMap::phases)
      .def("project", &CirculantFourierMap::project, py::arg("x"))
      .def("transform", &transform<CirculantFourierMap>, py::arg("x"))
      .def("to_json", [](const CirculantFourierMap& map) { return map_to_json(map).dump(); });

  m.def("map_from_json", [](const std::string& text) { return map_from_json(nlohmann::json::parse(text)); },
        py::arg("text"));

  m.def("init_random_dense",
        [](const KernelSpec& spec, Index d, Index k, bool with_phases, std::uint64_t seed) {
          Rng rng(seed);
          return init_random_dense(spec, d, k, with_phases, rng);
        },
        py::arg("spec"), py::arg("d"), py::arg("k"), py::arg("with_phases") = true,
        py::arg("seed") = 0);
  m.def("init_random_circulant",
        [](const KernelSpec& spec, Index d, Index k, bool with_phases, std::uint64_t seed) {
          Rng rng(seed);
          return init_random_circulant(spec, d, k, rng, with_phases);
        },
        py::arg("spec"), py::arg("d"), py::arg("k"), py::arg("with_phases") = false,
        py::arg("seed") = 0);

  py::class_<LinearModel>(m, "LinearModel")
      .def(py::init<Vector, double>(), py::arg("w"), py::arg("lambda_"))
      .def_readonly("w", &LinearModel::w)
      .def_readonly("lambda_", &LinearModel::lambda)
      .def("decision", [](const LinearModel& model, const Vector& z) { return model.w.dot(z); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("k", &TrainConfig::k)
      .def_readwrite("outer_iters", &TrainConfig::outer_iters)
      .def_readwrite("w_steps", &TrainConfig::w_steps)
      .def_readwrite("map_steps", &TrainConfig::map_steps)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("theta_decay", &TrainConfig::theta_decay)
      .def_readwrite("eta0", &TrainConfig::eta0)
      .def_readwrite("continue_step_counter", &TrainConfig::continue_step_counter)
      .def_readwrite("with_phases", &TrainConfig::with_phases)
      .def_readwrite("mse_pairs", &TrainConfig::mse_pairs)
      .def_readwrite("validation_pairs", &TrainConfig::validation_pairs)
      .def("validate", &TrainConfig::validate);

  bind_result<DenseFourierMap>(m, "DenseTrainResult");
  bind_result<CirculantFourierMap>(m, "CirculantTrainResult");

  m.def("train_cnm", &train_cnm, py::arg("train"), py::arg("config"), py::arg("spec"),
        py::arg("test") = nullptr, "Alternating Pegasos / projection SGD on a dense map.");
  m.def("train_circulant_cnm", &train_circulant_cnm, py::arg("train"), py::arg("config"),
        py::arg("spec"), py::arg("test") = nullptr,
        "Alternating Pegasos / circulant SGD with FFT projections.");

  py::class_<KernelApproxResult>(m, "KernelApproxResult")
      .def_readonly("map", &KernelApproxResult::map)
      .def_readonly("initial_mse", &KernelApproxResult::initial_mse)
      .def_property_readonly("trace",
                             [](const KernelApproxResult& r) { return trace_records(r.trace); });
  m.def("train_kernel_approx", &train_kernel_approx, py::arg("train"), py::arg("config"),
        py::arg("spec"), py::arg("validation") = nullptr,
        "SGD on the kernel approximation MSE starting from a random Fourier draw.");

  bind_map_functions<DenseFourierMap>(m);
  bind_map_functions<CirculantFourierMap>(m);

  m.def("psd_check", &psd_check, py::arg("gram"));
  m.def("bench_projection",
        [](const std::vector<Index>& d_list, const std::string& mode, int reps,
           std::uint64_t seed) {
          if (mode != "equal" && mode != "twice")
            throw InvalidArgument("bench mode must be 'equal' or 'twice'");
          py::list out;
          for (const auto& r : bench_projection(d_list, mode == "equal" ? KMode::EqualD : KMode::TwiceD,
                                                reps, seed)) {
            py::dict d;
            d["d"] = r.d;
            d["k"] = r.k;
            d["family"] = r.family;
            d["median_seconds"] = r.median_seconds;
            d["repetitions"] = r.repetitions;
            out.append(d);
          }
          return out;
        },
        py::arg("d_list"), py::arg("mode") = "equal", py::arg("reps") = 5, py::arg("seed") = 0);
}
