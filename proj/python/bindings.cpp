#include <optional>
#include <string>

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aleanav/error.hpp"
#include "aleanav/eval.hpp"
#include "aleanav/pipeline.hpp"

namespace py = pybind11;
using namespace aleanav;

namespace {

RunConfig config_from(const std::optional<std::string>& text) {
  return text ? RunConfig::from_json(nlohmann::json::parse(*text)) : RunConfig{};
}

// N x 8 rows of (t, px, py, pz, qx, qy, qz, qw)
Eigen::MatrixXd pose_table(std::size_t n, auto&& at) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), 8);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [t, pose] = at(i);
    const auto r = static_cast<Eigen::Index>(i);
    out(r, 0) = t;
    out.block<1, 3>(r, 1) = pose.p.transpose();
    out.block<1, 4>(r, 4) = pose.q.coeffs().transpose();
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Object-relative aleatoric-uncertainty navigation filter";

  static py::exception<Error> error_type(m, "AleanavError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("so3_exp", &so3_exp, py::arg("theta"));
  m.def("so3_log", &so3_log, py::arg("R"));
  m.def("gram_schmidt_rotation", &gram_schmidt_rotation, py::arg("m"));
  m.def(
      "rotate_covariance", [](const Mat3& cov, const Mat3& R) { return rotate_covariance(cov, R); }, py::arg("cov"),
      py::arg("R"));
  m.def("nll_loss", &nll_loss, py::arg("e"), py::arg("s"));
  m.def("nll_loss_gradient", &nll_loss_gradient, py::arg("e"), py::arg("s"));
  m.def("central_z", &central_z, py::arg("alpha"));
  m.def(
      "picp",
      [](const std::vector<double>& errors, const std::vector<double>& sigmas, double alpha) {
        return picp(errors, sigmas, alpha);
      },
      py::arg("errors"), py::arg("sigmas"), py::arg("alpha") = 0.95);

  m.def(
      "default_config", [] { return RunConfig{}.to_json().dump(); }, "Default run config as JSON text");
  m.def(
      "normalize_config", [](const std::string& text) { return config_from(text).to_json().dump(); },
      py::arg("config"), "Validates a JSON config and fills defaults");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("duration", [](const Dataset& d) { return d.spec.duration; })
      .def_property_readonly("imu",
                             [](const Dataset& d) {
                               Eigen::MatrixXd out(static_cast<Eigen::Index>(d.imu.size()), 7);
                               for (std::size_t i = 0; i < d.imu.size(); ++i) {
                                 const auto r = static_cast<Eigen::Index>(i);
                                 out(r, 0) = d.imu[i].t;
                                 out.block<1, 3>(r, 1) = d.imu[i].gyro.transpose();
                                 out.block<1, 3>(r, 4) = d.imu[i].accel.transpose();
                               }
                               return out;
                             })
      .def_property_readonly("truth",
                             [](const Dataset& d) {
                               return pose_table(d.truth.size(), [&](std::size_t i) {
                                 return std::pair{d.truth[i].t, d.truth[i].pose};
                               });
                             })
      .def_property_readonly("measurements",
                             [](const Dataset& d) {
                               return pose_table(d.measurements.size(), [&](std::size_t i) {
                                 return std::pair{d.measurements[i].t, d.measurements[i].measured};
                               });
                             })
      .def_property_readonly("measurement_objects",
                             [](const Dataset& d) {
                               std::vector<int> ids;
                               for (const auto& r : d.measurements) ids.push_back(r.object_id);
                               return ids;
                             })
      .def("save", [](const Dataset& d, const std::string& dir) { save_dataset(d, dir); }, py::arg("directory"));

  m.def(
      "simulate", [](const std::optional<std::string>& config) { return simulate_from_config(config_from(config)); },
      py::arg("config") = py::none(), "Simulates the dataset described by a JSON run config");
  m.def(
      "load_dataset", [](const std::string& dir) { return load_dataset(dir); }, py::arg("directory"));

  py::class_<HeadBundle>(m, "Head")
      .def("to_json", &HeadBundle::to_json)
      .def_static("from_json", &HeadBundle::from_json, py::arg("text"))
      .def_static("load", [](const std::string& f) { return HeadBundle::load(f); }, py::arg("file"))
      .def_property_readonly("aor_max_trace_trans", [](const HeadBundle& b) { return b.aor_max_trace_trans; })
      .def_property_readonly("aor_max_trace_rot", [](const HeadBundle& b) { return b.aor_max_trace_rot; })
      .def(
          "predict",
          [](const HeadBundle& b, const FeatureVec& features, int class_id) {
            return b.head.predict(features, class_id).variances();
          },
          py::arg("features"), py::arg("class_id") = 0,
          "Translation then rotation variances for one feature vector");

  py::class_<TrainOutcome>(m, "TrainOutcome")
      .def_property_readonly("head", [](const TrainOutcome& o) { return o.bundle; })
      .def_property_readonly("initial_loss", [](const TrainOutcome& o) { return o.report.initial_loss; })
      .def_property_readonly("final_loss", [](const TrainOutcome& o) { return o.report.final_loss; })
      .def_property_readonly("validation_picp", [](const TrainOutcome& o) {
        std::array<double, 6> out{};
        for (int c = 0; c < 6; ++c) out[static_cast<std::size_t>(c)] = o.validation.at(0.95, c);
        return out;
      });

  m.def(
      "train_head", [](const std::optional<std::string>& config) { return train_from_config(config_from(config)); },
      py::arg("config") = py::none(), "Trains the uncertainty head on simulated runs of the config");

  py::class_<TrajectoryResult>(m, "FilterResult")
      .def_property_readonly("mode", [](const TrajectoryResult& r) { return std::string(to_string(r.mode)); })
      .def_property_readonly("poses",
                             [](const TrajectoryResult& r) {
                               return pose_table(r.rows.size(),
                                                 [&](std::size_t i) { return std::pair{r.rows[i].t, r.rows[i].pose}; });
                             })
      .def_property_readonly("anchors",
                             [](const TrajectoryResult& r) {
                               std::vector<int> ids;
                               for (const auto& row : r.rows) ids.push_back(row.anchor_id);
                               return ids;
                             })
      .def_readonly("anchor_switches", &TrajectoryResult::anchor_switches)
      .def_readonly("aor_rejections", &TrajectoryResult::aor_rejections)
      .def_readonly("gate_rejections", &TrajectoryResult::gate_rejections);

  m.def(
      "run_filter",
      [](const Dataset& d, const std::string& mode, const std::optional<std::string>& config,
         const HeadBundle* head) {
        const FilterMode fm = parse_filter_mode(mode);
        const EstimatorConfig ec = estimator_for_mode(config_from(config), fm, head);
        py::gil_scoped_release release;
        return run(d, ec, head ? &head->head : nullptr);
      },
      py::arg("dataset"), py::arg("mode") = "fixed", py::arg("config") = py::none(), py::arg("head") = py::none());

  m.def(
      "metrics",
      [](const TrajectoryResult& r, const Dataset& d) {
        return compute_metrics(r, d.truth, d.spec.imu_rate).to_json();
      },
      py::arg("result"), py::arg("dataset"), "Metrics report as JSON text");
}
