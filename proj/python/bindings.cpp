// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/error.hpp"
#include "gnatrom/pipeline.hpp"
#include "gnatrom/pod.hpp"
#include "gnatrom/sampling.hpp"
#include "gnatrom/solvers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace gnatrom;

PYBIND11_MODULE(_gnatrom, m) {
  m.doc() = "Hyper-reduced Gauss-Newton model reduction for parameterized 1D Burgers";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<ParameterPoint>(m, "ParameterPoint")
      .def(py::init<double, double>(), py::arg("a"), py::arg("b"))
      .def_readwrite("a", &ParameterPoint::a)
      .def_readwrite("b", &ParameterPoint::b)
      .def("__repr__", [](const ParameterPoint& p) {
        return "ParameterPoint(a=" + std::to_string(p.a) + ", b=" + std::to_string(p.b) + ")";
      });

  py::class_<TimeDiscretization>(m, "TimeDiscretization")
      .def(py::init([](double dt, Index num_steps) {
             TimeDiscretization t;
             t.dt = dt;
             t.num_steps = num_steps;
             t.validate();
             return t;
           }),
           py::arg("dt") = 0.05, py::arg("num_steps") = 1000)
      .def_readonly("dt", &TimeDiscretization::dt)
      .def_readonly("num_steps", &TimeDiscretization::num_steps);

  py::class_<BurgersModel>(m, "BurgersModel")
      .def(py::init([](Index num_nodes, double length) { return BurgersModel(Grid1D(num_nodes, length)); }),
           py::arg("num_nodes") = 4001, py::arg("domain_length") = 100.0)
      .def_property_readonly("dimension", &BurgersModel::dimension)
      .def("initial_condition", &BurgersModel::initial_condition)
      .def("semi_discrete_rhs", &BurgersModel::semi_discrete_rhs, py::arg("state"),
           py::arg("t"), py::arg("mu"))
      .def("residual", &BurgersModel::residual, py::arg("next"), py::arg("prev"),
           py::arg("t_next"), py::arg("dt"), py::arg("mu"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("newton_abs_tol", &SolverConfig::newton_abs_tol)
      .def_readwrite("newton_rel_tol", &SolverConfig::newton_rel_tol)
      .def_readwrite("max_newton_iters", &SolverConfig::max_newton_iters)
      .def_readwrite("gn_max_iters", &SolverConfig::gn_max_iters);

  // Trajectories come back as (states, ok, message) to keep the surface small.
  m.def(
      "solve_fom",
      [](const ParameterPoint& mu, const BurgersModel& model, const TimeDiscretization& time,
         const SolverConfig& config) {
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = solve_fom(mu, model, time, config);
        }
        return py::make_tuple(t.states, t.status.ok, t.status.message);
      },
      py::arg("mu"), py::arg("model"), py::arg("time"), py::arg("config") = SolverConfig{});

  m.def(
      "pod",
      [](const Matrix& snapshots, double energy) {
        const PodBasis b = compute_pod(snapshots, Truncation::energy(energy));
        return py::make_tuple(b.basis, b.singular_values);
      },
      py::arg("snapshots"), py::arg("energy") = 0.9999);

  m.def(
      "greedy_select",
      [](const Matrix& phi_r, const Matrix& phi_j, Index n_s, Index n_c, IndexSet seeds) {
        return greedy_select(phi_r, phi_j, {n_s, n_c, std::move(seeds), 1}).sequence;
      },
      py::arg("phi_r"), py::arg("phi_j"), py::arg("n_s"), py::arg("n_c"),
      py::arg("seeds") = IndexSet{0});

  m.def("parse_parameter_point", &parse_parameter_point);

  m.def(
      "run_offline",
      [](const std::filesystem::path& config, const std::filesystem::path& out) {
        py::gil_scoped_release release;
        return run_offline(load_offline_config(config), out).directory / "manifest.json";
      },
      py::arg("config"), py::arg("out"), "Runs the offline stage; returns the manifest path.");

  m.def(
      "run_online",
      [](const std::filesystem::path& manifest, const ParameterPoint& mu) {
        OnlineResult r;
        {
          py::gil_scoped_release release;
          r = run_online(load_manifest(manifest), mu, false);
        }
        return py::make_tuple(r.rom.coords, r.wall_seconds, r.rom.status.ok);
      },
      py::arg("manifest"), py::arg("mu"),
      "GNAT online solve; returns (reduced coordinates, seconds, ok).");

  m.def(
      "run_compare",
      [](const std::filesystem::path& manifest, const std::vector<std::string>& methods,
         const std::filesystem::path& reference, const std::filesystem::path& out) {
        MetricsReport r;
        {
          py::gil_scoped_release release;
          r = run_compare(load_manifest(manifest), methods, reference, out);
        }
        return r.to_json().dump();
      },
      py::arg("manifest"), py::arg("methods"), py::arg("reference"), py::arg("out"),
      "Compares methods with the full model; returns the report as a JSON string.");
}
