#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dsel/checkpoint.hpp"
#include "dsel/cli.hpp"
#include "dsel/oracle.hpp"
#include "dsel/pipelines.hpp"
#include "dsel/rng.hpp"
#include "dsel/selection.hpp"

namespace py = pybind11;
using namespace dsel;

namespace {

py::array_t<double> to_numpy(const ParamVector& p) {
  return py::array_t<double>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(p.size())}, p.values().data());
}

ParamVector from_numpy(const ParamVector& like, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (static_cast<std::size_t>(a.size()) != like.size())
    throw ConfigError("expected " + std::to_string(like.size()) + " values, got " + std::to_string(a.size()));
  ParamVector out(like.layout_ptr());
  std::copy(a.data(), a.data() + a.size(), out.values().begin());
  return out;
}

py::dict row_dict(const MetricsRow& r) {
  py::dict d;
  d["step"] = r.step;
  d["phase"] = r.phase;
  d["heldout_specific_loss"] = r.heldout_specific_loss;
  d["heldout_generic_loss"] = r.heldout_generic_loss;
  d["mean_target_weight"] = r.mean_target_weight;
  d["mean_distractor_weight"] = r.mean_distractor_weight;
  d["weight_entropy"] = r.weight_entropy;
  d["sar"] = r.sar;
  d["gar"] = r.gar;
  return d;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_eigen(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

PYBIND11_MODULE(_dsel, m) {
  m.doc() = "Online bilevel data selection: pipelines, oracles and the command-line entry point";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  py::class_<TrainConfig>(m, "Config")
      .def(py::init<>())
      .def_static("parse", &parse_config, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_config(path); }, py::arg("path"))
      .def("set", [](TrainConfig& c, const std::string& a) { apply_override(c, a); return &c; },
           py::arg("assignment"), py::return_value_policy::reference_internal,
           "Apply one key=value override; returns self.")
      .def("validate", &TrainConfig::validate)
      .def("to_text", &serialize_config)
      .def("__eq__", [](const TrainConfig& a, const TrainConfig& b) { return a == b; })
      .def("__repr__", [](const TrainConfig& c) { return "Config(" + std::string(task_name(c.task)) + ", T=" + std::to_string(c.T) + ")"; })
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("data_seed", &TrainConfig::data_seed)
      .def_readwrite("T", &TrainConfig::T)
      .def_readwrite("b_small", &TrainConfig::b_small)
      .def_readwrite("b_large", &TrainConfig::b_large)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("eta_alpha", &TrainConfig::eta_alpha)
      .def_readwrite("eval_every", &TrainConfig::eval_every);

  py::class_<Task>(m, "Task")
      .def_property_readonly("n_generic", [](const Task& t) { return t.data.generic.size(); })
      .def_property_readonly("n_specific", [](const Task& t) { return t.data.specific.size(); })
      .def_property_readonly("generic_domain_tags", [](const Task& t) {
        const auto tags = t.data.generic.domain_tags_for_diagnostics();
        return std::vector<int>(tags.begin(), tags.end());
      })
      .def_property_readonly("target_tag", [](const Task& t) { return t.data.target_tag; })
      .def("heldout_specific_loss", [](const Task& t, py::array_t<double> theta) {
        const ParamVector like = MainModel(t.main_spec).init(0);
        return heldout_specific_loss(t, from_numpy(like, theta));
      });
  m.def("build_task", [](const TrainConfig& c, const std::string& base) { return build_task(c, base); },
        py::arg("config"), py::arg("base_dir") = ".");

  py::class_<WeightTrajectory>(m, "WeightTrajectory")
      .def("__len__", &WeightTrajectory::size)
      .def_property_readonly("steps", [](const WeightTrajectory& t) {
        std::vector<std::uint64_t> s;
        for (const auto& x : t.snapshots()) s.push_back(x.t);
        return s;
      })
      .def("save", [](const WeightTrajectory& t, const std::string& dir) { save_trajectory(dir, t); })
      .def_static("load", [](const std::string& dir) { return load_trajectory(dir); });

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("arm", &RunResult::arm)
      .def_property_readonly("theta", [](const RunResult& r) { return to_numpy(r.theta); })
      .def_property_readonly("alpha", [](const RunResult& r) -> py::object {
        return r.alpha ? py::object(to_numpy(*r.alpha)) : py::none();
      })
      .def_property_readonly("metrics", [](const RunResult& r) {
        py::list l;
        for (const auto& row : r.metrics) l.append(row_dict(row));
        return l;
      })
      .def_property_readonly("metrics_csv", [](const RunResult& r) { return format_metrics(r.metrics); })
      .def_readonly("trajectory", &RunResult::trajectory)
      .def_readonly("theta_trace", &RunResult::theta_trace)
      .def_readonly("events", &RunResult::events)
      .def_readonly("kept", &RunResult::kept)
      .def_readonly("last_step", &RunResult::last_step)
      .def_readonly("classifier_accuracy", &RunResult::classifier_accuracy)
      .def_property_readonly("main_update_examples", [](const RunResult& r) { return r.main_update_counts.backward; })
      .def("save_theta", [](const RunResult& r, const std::string& stem) { save_checkpoint(stem, r.theta); });

  py::call_guard<py::gil_scoped_release> nogil;
  m.def("pretrain_bilevel", &pretrain_bilevel, py::arg("task"), py::arg("config"), nogil);
  m.def("pretrain_uniform", &pretrain_uniform, py::arg("task"), py::arg("config"), nogil);
  m.def("mixing", &mixing, py::arg("task"), py::arg("config"), nogil);
  m.def("cds", &cds_pipeline, py::arg("task"), py::arg("config"), nogil);
  m.def("classifier", &classifier_pipeline, py::arg("task"), py::arg("config"), nogil);
  m.def("finetune", [](const Task& t, const TrainConfig& c, const RunResult& from) {
        return finetune(t, c, from.theta, from.arm, from.last_step);
      }, py::arg("task"), py::arg("config"), py::arg("run"), nogil);
  m.def("curriculum", &curriculum_ablation, py::arg("task"), py::arg("config"), py::arg("trajectory"),
        py::arg("mode") = "final", nogil);
  m.def("transfer", [](const Task& large, const TrainConfig& c, const WeightTrajectory& traj, const Task& small,
                       const TrainConfig& small_cfg) {
        return transfer_weights(large, c, traj, scorer_spec(small, small_cfg.method));
      }, py::arg("task"), py::arg("config"), py::arg("trajectory"), py::arg("small_task"),
      py::arg("small_config"), nogil);

  m.def("filter", [](const std::vector<double>& weights, std::size_t n, const std::string& rule,
                     std::uint64_t seed, std::uint64_t counter) {
        std::vector<std::int64_t> ids(weights.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
        auto rng = stream_rng(seed, Stream::kFilter, counter);
        return filter(BatchWeights{ids, weights}, n, parse_filter_rule(rule), rng);
      }, py::arg("weights"), py::arg("n"), py::arg("rule"), py::arg("seed") = 0, py::arg("counter") = 0,
      "Positions kept by a filter rule over normalized weights.");

  py::module_ o = m.def_submodule("oracle", "Closed-form quadratic bilevel problems");
  o.def("analytic_hypergrad", [](std::size_t n, std::size_t dim, std::uint64_t seed, const std::vector<double>& a) {
    return from_eigen(oracle::analytic_hypergrad(oracle::random_instance(n, dim, seed), to_eigen(a)));
  }, py::arg("n"), py::arg("dim"), py::arg("seed"), py::arg("alpha"));
  o.def("finite_diff_hypergrad", [](std::size_t n, std::size_t dim, std::uint64_t seed,
                                    const std::vector<double>& a, double h) {
    return from_eigen(oracle::finite_diff_hypergrad(oracle::random_instance(n, dim, seed), to_eigen(a), h));
  }, py::arg("n"), py::arg("dim"), py::arg("seed"), py::arg("alpha"), py::arg("h") = 1e-5);
  o.def("soba_direction", [](std::size_t n, std::size_t dim, std::uint64_t seed, const std::vector<double>& a) {
    return from_eigen(oracle::soba_direction_exact(oracle::random_instance(n, dim, seed), to_eigen(a)));
  }, py::arg("n"), py::arg("dim"), py::arg("seed"), py::arg("alpha"));
  o.def("outer_value", [](std::size_t n, std::size_t dim, std::uint64_t seed, const std::vector<double>& a) {
    return oracle::outer_value(oracle::random_instance(n, dim, seed), to_eigen(a));
  }, py::arg("n"), py::arg("dim"), py::arg("seed"), py::arg("alpha"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
  m.def("sha256_file", [](const std::string& p) { return sha256_file(p); });
}
