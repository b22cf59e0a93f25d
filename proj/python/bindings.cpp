#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rvg/cli.hpp"
#include "rvg/cost_model.hpp"
#include "rvg/error.hpp"
#include "rvg/geometry.hpp"

namespace py = pybind11;

namespace {

rvg::Box to_box(const std::array<double, 4>& c) { return {c[0], c[1], c[2], c[3]}; }

rvg::Scenario scenario(long long targets, long long frames, const std::string& flags) {
  return {targets, frames, rvg::parse_flags(flags)};
}

}  // namespace

PYBIND11_MODULE(_rvgcore, m) {
  m.doc() = "Bindings for the rvgcore C++ library";

  py::register_exception<rvg::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<rvg::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("iou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) { return rvg::iou(to_box(a), to_box(b)); });
  m.def("giou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) { return rvg::giou(to_box(a), to_box(b)); });
  m.def(
      "nms",
      [](const std::vector<std::array<double, 4>>& boxes, const std::vector<double>& scores, double thr) {
        if (boxes.size() != scores.size()) throw rvg::InvalidArgument("nms: one score per box");
        std::vector<rvg::ScoredBox> c;
        for (std::size_t i = 0; i < boxes.size(); ++i) c.push_back({to_box(boxes[i]), scores[i]});
        return rvg::nms_indices(c, thr);
      },
      py::arg("boxes"), py::arg("scores"), py::arg("iou_threshold") = 0.5, "Indices kept by greedy NMS, best first.");

  m.def(
      "total_overhead", [](long long n, long long t) { return rvg::total_overhead({n, t, {}}); }, py::arg("targets"),
      py::arg("frames"));
  m.def(
      "component_breakdown",
      [](long long n, long long t) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& c : rvg::component_breakdown({n, t, {}})) out.emplace_back(c.name, c.seconds);
        return out;
      },
      py::arg("targets"), py::arg("frames"));
  m.def(
      "recommend_tsf",
      [](const std::string& flags) { return std::string(rvg::to_string(rvg::recommend_tsf(scenario(1, 1, flags)))); },
      py::arg("flags") = "");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = rvg::cli_main(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the rvg command line in-process; returns (exit_code, stdout, stderr).");
}
