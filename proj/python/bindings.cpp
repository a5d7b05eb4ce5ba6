//Copyright (c) 2026, spinv authors
//
//Licensed under the Apache License, Version 2.0 (the "License");
//you may not use this file except in compliance with the License.
//You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//Unless required by applicable law or agreed to in writing, software
//distributed under the License is distributed on an "AS IS" BASIS,
//WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//See the License for the specific language governing permissions and
//limitations under the License.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "spinv/cli.hpp"
#include "spinv/dynamics.hpp"
#include "spinv/errors.hpp"
#include "spinv/hill.hpp"
#include "spinv/kerr.hpp"
#include "spinv/period_matrix.hpp"

namespace py = pybind11;
using namespace spinv;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hill spectra, period matrices, Kerr tables and collapse dynamics";

  auto input = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  auto numeric = py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DomainError>(m, "DomainError", numeric);
  (void)input;

  py::class_<HillPotential>(m, "HillPotential")
      .def_static("constant", &HillPotential::constant, py::arg("c"))
      .def_static("mathieu", &HillPotential::mathieu, py::arg("amplitude") = 1.0)
      .def_static("trigonometric", &HillPotential::trigonometric, py::arg("a0"), py::arg("a"),
                  py::arg("b") = std::vector<double>{})
      .def_static("from_samples", &HillPotential::from_samples, py::arg("samples"), py::arg("length") = 1.0)
      .def_readonly("mean", &HillPotential::mean)
      .def_readonly("length", &HillPotential::length)
      .def_readonly("family", &HillPotential::family)
      .def("shifted", &HillPotential::shifted)
      .def("__call__", &HillPotential::operator());

  py::class_<HillOptions>(m, "HillOptions")
      .def_static("standard", &HillOptions::standard)
      .def_static("extended", &HillOptions::extended)
      .def_static("fast", &HillOptions::fast);

  py::class_<SpectrumBundle>(m, "SpectrumBundle")
      .def_readonly("lambda_", &SpectrumBundle::lambda)
      .def_readonly("mu", &SpectrumBundle::mu)
      .def_readonly("nu", &SpectrumBundle::nu)
      .def_readonly("disc", &SpectrumBundle::disc)
      .def_readonly("n", &SpectrumBundle::n)
      .def("gap_width", &SpectrumBundle::gap_width)
      .def("open_gaps", &SpectrumBundle::open_gaps);

  m.def("periodic_spectrum", &periodic_spectrum, py::arg("q"), py::arg("n"),
        py::arg("opt") = HillOptions::standard());
  m.def("discriminant", &discriminant, py::arg("q"), py::arg("lam"), py::arg("opt") = HillOptions::standard());

  py::class_<CurveModel>(m, "CurveModel")
      .def_static("from_branch_points", &CurveModel::from_branch_points)
      .def_readonly("branch", &CurveModel::branch)
      .def_readonly("genus", &CurveModel::genus);
  py::class_<PeriodMatrix>(m, "PeriodMatrix")
      .def_readonly("R", &PeriodMatrix::R)
      .def_readonly("genus", &PeriodMatrix::genus)
      .def_readonly("degenerate", &PeriodMatrix::degenerate);
  m.def("truncate_curve", &truncate_curve, py::arg("spec"), py::arg("m"), py::arg("min_width") = 0.0);
  m.def("period_matrix", [](const CurveModel& c) { return period_matrix(c); });

  py::class_<KerrParams>(m, "KerrParams")
      .def(py::init([](double mass, double a, double eps) { return KerrParams{mass, a, eps}; }), py::arg("m") = 1.0,
           py::arg("a") = 0.5, py::arg("epsilon") = 0.05)
      .def("r_plus", &KerrParams::r_plus)
      .def("r_minus", &KerrParams::r_minus)
      .def("validate", &KerrParams::validate);
  m.def("kerr_r", &kerr_r, py::arg("x"), py::arg("y"), py::arg("z"), py::arg("a"));
  m.def("kerr_index_table", [] {
    const auto& t = kerr_index_table();
    return std::vector<int>(t.begin(), t.end());
  });

  py::class_<CollapseTrajectory>(m, "CollapseTrajectory")
      .def_readonly("t", &CollapseTrajectory::t)
      .def_readwrite("u", &CollapseTrajectory::u)
      .def_readonly("du", &CollapseTrajectory::du)
      .def_readonly("energy", &CollapseTrajectory::energy)
      .def_readonly("energy_monotone", &CollapseTrajectory::energy_monotone);
  py::class_<DampingTable>(m, "DampingTable")
      .def_readonly("t", &DampingTable::t)
      .def_readonly("amplitude", &DampingTable::amplitude)
      .def_readonly("F", &DampingTable::F)
      .def_readonly("F0", &DampingTable::F0)
      .def_readonly("slope", &DampingTable::slope);
  py::class_<Signature>(m, "Signature").def_readonly("coeffs", &Signature::coeffs);
  py::class_<NoGoResult>(m, "NoGoResult")
      .def_readonly("accept", &NoGoResult::accept)
      .def_readonly("degree", &NoGoResult::degree)
      .def_readonly("message", &NoGoResult::message);
  m.def(
      "simulate_collapse",
      [](const std::function<double(double)>& F, double u0, double du0, double dt, double t_max) {
        return simulate_collapse(F, u0, du0, dt, t_max);
      },
      py::arg("F"), py::arg("u0") = 1.0, py::arg("du0") = 0.0, py::arg("dt") = 1e-3, py::arg("t_max") = 40.0);
  m.def("fit_damping", [](const CollapseTrajectory& t) { return fit_damping(t); });
  m.def("polynomial_signature", &polynomial_signature, py::arg("table"), py::arg("degree"));
  m.def(
      "no_go_test", [](const DampingTable& c, const Signature& s) { return no_go_test(c, s); }, py::arg("candidate"),
      py::arg("reference"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in process; returns (exit code, stdout, stderr).");
}
