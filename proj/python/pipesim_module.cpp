/**
 * Copyright 2026 The pipesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python bindings. Structured results cross the boundary as JSON text and
// are decoded by the pure-Python wrapper in pipesim/__init__.py.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "pipesim/config.hpp"
#include "pipesim/error.hpp"
#include "pipesim/experiment.hpp"
#include "pipesim/optimizer.hpp"
#include "pipesim/schedule.hpp"

namespace py = pybind11;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace pipesim {
namespace {

Matrix to_matrix(const Array &a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix &m) {
  Array out({m.rows(), m.cols()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) view(r, c) = m(r, c);
  return out;
}

Timeline make_timeline(const std::string &schedule, int depth, std::int64_t n_batches, int micro) {
  Timeline tl = build_timeline(parse_schedule(schedule), depth, n_batches, micro);
  return tl;
}

ExperimentConfig config_from(const std::string &config_json) {
  return parse_config(nlohmann::json::parse(config_json));
}

}  // namespace
}  // namespace pipesim

PYBIND11_MODULE(_core, m) {
  using namespace pipesim;
  m.doc() = "pipesim native core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("version_difference", &version_difference, py::arg("depth"), py::arg("rank"));

  m.def(
      "predict_weights",
      [](const Array &w, double lr, std::int64_t s, const Array &dw) {
        return to_array(predict_weights(to_matrix(w), lr, s, to_matrix(dw)));
      },
      py::arg("weights"), py::arg("lr"), py::arg("s"), py::arg("delta"));

  m.def(
      "timeline_json",
      [](const std::string &schedule, int depth, std::int64_t n_batches, int micro) {
        return timeline_json(make_timeline(schedule, depth, n_batches, micro)).dump();
      },
      py::arg("schedule"), py::arg("depth"), py::arg("n_batches"), py::arg("micro_batches") = 1);

  m.def(
      "validate_timeline",
      [](const std::string &schedule, int depth, std::int64_t n_batches, int micro) {
        return validate_timeline(make_timeline(schedule, depth, n_batches, micro));
      },
      py::arg("schedule"), py::arg("depth"), py::arg("n_batches"), py::arg("micro_batches") = 1);

  m.def(
      "bubble_stats_json",
      [](const std::string &schedule, int depth, std::int64_t n_batches, int micro) {
        return bubble_stats(make_timeline(schedule, depth, n_batches, micro)).dump();
      },
      py::arg("schedule"), py::arg("depth"), py::arg("n_batches"), py::arg("micro_batches") = 1);

  m.def(
      "makespan",
      [](const std::string &schedule, int depth, std::int64_t n_batches, int micro,
         std::optional<std::vector<double>> forward, std::optional<std::vector<double>> backward) {
        CostModel costs = CostModel::uniform(depth);
        if (forward) costs.forward = *forward;
        if (backward) costs.backward = *backward;
        return makespan(make_timeline(schedule, depth, n_batches, micro), costs);
      },
      py::arg("schedule"), py::arg("depth"), py::arg("n_batches"), py::arg("micro_batches") = 1,
      py::arg("forward_costs") = py::none(), py::arg("backward_costs") = py::none());

  m.def(
      "normalize_config_json",
      [](const std::string &config_json) { return to_json(config_from(config_json)).dump(); },
      py::arg("config_json"));

  m.def(
      "run_json",
      [](const std::string &config_json, std::optional<std::string> out_dir) {
        const ExperimentConfig cfg = config_from(config_json);
        RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_experiment(cfg);
        }
        nlohmann::json j = report_json(outcome);
        if (out_dir) j["output_dir"] = write_run(outcome, *out_dir).string();
        return j.dump();
      },
      py::arg("config_json"), py::arg("out_dir") = py::none());
}
