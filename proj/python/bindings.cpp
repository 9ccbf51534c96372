// pyaimd: thin bindings over the aimd library. Runs return numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aimd/config.hpp"
#include "aimd/harness.hpp"
#include "aimd/metrics.hpp"
#include "aimd/solver.hpp"

namespace py = pybind11;
using namespace aimd;

namespace {

py::array_t<double> rows_to_array(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  py::array_t<double> out({rows.size(), cols});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) v(r, c) = rows[r][c];
  return out;
}

py::dict stats_dict(const ProbabilityStats& s) {
  py::dict d;
  d["evaluations"] = s.evaluations;
  d["min"] = s.min;
  d["max"] = s.max;
  d["clamped"] = s.clamped;
  d["reseeded"] = s.reseeded;
  return d;
}

// Full per-step series plus the final state. Row 0 of each series is the
// initial state.
py::dict run_experiment(const ExperimentDef& def, std::uint64_t stride, bool parallel) {
  validate_experiment(def);
  const auto costs = build_costs(def);
  TraceRecorder rec(RecorderOptions{stride, 1, def.system.horizon, {}});
  py::dict out;
  {
    py::gil_scoped_release release;
    if (def.mode == Mode::Divisible) {
      const auto s = run_divisible(def.system, costs, rec, RunOptions{parallel});
      py::gil_scoped_acquire acquire;
      out["probability"] = stats_dict(s.lambda_stats);
      out["final_alloc"] = s.allocations();
      out["final_avg"] = s.averages();
    } else {
      const auto s = run_binary(def.system, costs, def.binary, rec, RunOptions{parallel});
      py::gil_scoped_acquire acquire;
      out["probability"] = stats_dict(s.sigma_stats);
      out["final_alloc"] = s.allocations();
      out["final_avg"] = s.averages();
      out["final_omega"] = s.omega;
      out["omega_floor_hits"] = s.omega_floor_hits;
    }
  }
  const std::size_t m = def.system.m;
  const auto& series = rec.series();
  std::vector<std::vector<double>> totals{rec.initial().totals}, avg_totals{rec.initial().avg_totals}, signal;
  std::vector<std::uint64_t> steps{0}, bits;
  for (const auto& row : series) {
    steps.push_back(row.step);
    totals.push_back(row.totals);
    avg_totals.push_back(row.avg_totals);
    bits.push_back(row.bits_broadcast);
    std::vector<double> sig(m);
    for (std::size_t j = 0; j < m; ++j)
      sig[j] = def.mode == Mode::Divisible ? (row.signal.bits[j] ? 1.0 : 0.0) : row.signal.omega[j];
    signal.push_back(std::move(sig));
  }
  out["mode"] = to_string(def.mode);
  out["steps"] = py::array_t<std::uint64_t>(steps.size(), steps.data());
  out["totals"] = rows_to_array(totals, m);
  out["avg_totals"] = rows_to_array(avg_totals, m);
  out["bits"] = py::array_t<std::uint64_t>(bits.size(), bits.data());
  out["signal"] = rows_to_array(signal, m);
  return out;
}

py::dict result_dict(const SolverResult& r) {
  py::dict d;
  d["solution"] = r.solution;
  d["objective"] = r.objective;
  d["kkt_residual"] = r.kkt_residual;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(pyaimd, mod) {
  mod.doc() = "AIMD resource allocation: engines, costs, oracle solver and canned experiments";

  auto base = py::register_exception<Error>(mod, "Error");
  py::register_exception<ConfigError>(mod, "ConfigError", base.ptr());
  py::register_exception<InfeasibleError>(mod, "InfeasibleError", base.ptr());
  py::register_exception<NumericError>(mod, "NumericError", base.ptr());

  py::class_<PolynomialCost>(mod, "PolynomialCost")
      .def(py::init([](std::size_t m, const std::vector<std::pair<double, std::vector<unsigned>>>& terms) {
             std::vector<Monomial> ms;
             for (const auto& [c, e] : terms) ms.push_back({c, e});
             return PolynomialCost(m, std::move(ms));
           }),
           py::arg("m"), py::arg("terms"), "terms: list of (coeff, exponents)")
      .def_static("monomial", &PolynomialCost::monomial, py::arg("m"), py::arg("coeff"), py::arg("power"),
                  py::arg("var"))
      .def_static("power_of_sum", &PolynomialCost::power_of_sum, py::arg("m"), py::arg("coeff"), py::arg("power"),
                  py::arg("vars"))
      .def_property_readonly("m", &PolynomialCost::dimension)
      .def("evaluate", [](const PolynomialCost& f, const std::vector<double>& x) { return f.evaluate(x); })
      .def("gradient", [](const PolynomialCost& f, const std::vector<double>& x) { return f.gradient(x); })
      .def("__call__", [](const PolynomialCost& f, const std::vector<double>& x) { return f.evaluate(x); })
      .def(py::self + py::self)
      .def(py::self == py::self)
      .def("__repr__", &PolynomialCost::to_string);

  py::class_<DomainBox>(mod, "DomainBox")
      .def_static("uniform", &DomainBox::uniform, py::arg("m"), py::arg("lo"), py::arg("hi"), py::arg("points") = 64)
      .def(py::init([](const std::vector<double>& lo, const std::vector<double>& hi, std::size_t points) {
             DomainBox b{lo, hi, points};
             b.validate();
             return b;
           }),
           py::arg("lower"), py::arg("upper"), py::arg("points") = 64)
      .def_readonly("lower", &DomainBox::lower)
      .def_readonly("upper", &DomainBox::upper)
      .def_readonly("points", &DomainBox::grid_points_per_axis);

  py::class_<FDeltaReport>(mod, "FDeltaReport")
      .def_readonly("passed", &FDeltaReport::pass)
      .def_readonly("worst_margin", &FDeltaReport::worst_margin)
      .def_readonly("worst_resource", &FDeltaReport::worst_resource)
      .def_readonly("min_hessian_eigenvalue", &FDeltaReport::min_hessian_eigenvalue)
      .def_readonly("reason", &FDeltaReport::reason)
      .def("__bool__", [](const FDeltaReport& r) { return r.pass; });

  mod.def("check_f_delta", &check_f_delta, py::arg("cost"), py::arg("delta"), py::arg("box"));
  mod.def("check_increasing_convex", &check_increasing_convex, py::arg("cost"), py::arg("box"));
  mod.def(
      "derive_gamma",
      [](const std::vector<PolynomialCost>& costs, std::size_t j, const DomainBox& box, double delta, double margin) {
        return derive_gamma(costs, j, box, delta, margin);
      },
      py::arg("costs"), py::arg("j"), py::arg("box"), py::arg("delta"), py::arg("margin") = 1.0);
  mod.def(
      "derive_tau",
      [](const std::vector<PolynomialCost>& costs, std::size_t j, const DomainBox& box) {
        return derive_tau(costs, j, box);
      },
      py::arg("costs"), py::arg("j"), py::arg("box"));

  py::class_<ExperimentDef>(mod, "Experiment")
      .def_readonly("name", &ExperimentDef::name)
      .def_property_readonly("mode", [](const ExperimentDef& d) { return to_string(d.mode); })
      .def_property_readonly("n", [](const ExperimentDef& d) { return d.system.n; })
      .def_property_readonly("m", [](const ExperimentDef& d) { return d.system.m; })
      .def_property_readonly("seed", [](const ExperimentDef& d) { return d.system.master_seed; })
      .def_property_readonly("capacities",
                             [](const ExperimentDef& d) {
                               std::vector<double> c;
                               for (const auto& r : d.system.resources) c.push_back(r.capacity);
                               return c;
                             })
      .def_property(
          "horizon", [](const ExperimentDef& d) { return d.system.horizon; },
          [](ExperimentDef& d, std::size_t k) { d.system.horizon = k; })
      .def_readonly("seeds", &ExperimentDef::seeds)
      .def("with_seed", [](const ExperimentDef& d, std::uint64_t s) { return with_seed(d, s); })
      .def("to_json", [](const ExperimentDef& d, int indent) { return experiment_to_json(d, indent); },
           py::arg("indent") = 2)
      .def_static("from_json", &experiment_from_json)
      .def("costs", [](const ExperimentDef& d) { return build_costs(d); })
      .def("validate", [](const ExperimentDef& d) { validate_experiment(d); })
      .def(py::self == py::self);

  mod.def("experiments", &experiment_names);
  mod.def("experiment", &find_experiment, py::arg("name"));
  mod.def("load_experiment", &load_experiment, py::arg("path"));
  mod.def("save_experiment", &save_experiment, py::arg("experiment"), py::arg("path"));

  mod.def("run", &run_experiment, py::arg("experiment"), py::arg("stride") = 100, py::arg("parallel") = false,
          "Simulate the experiment at its seed and horizon");
  mod.def(
      "oracle",
      [](const ExperimentDef& d, double tol, std::uint64_t max_iters) {
        return result_dict(solve(program_for(d, build_costs(d)), tol, max_iters));
      },
      py::arg("experiment"), py::arg("tol") = 1e-10, py::arg("max_iters") = 200000);
  mod.def(
      "solve",
      [](const std::vector<PolynomialCost>& costs, const std::vector<double>& capacities, std::optional<double> cap,
         double tol, std::uint64_t max_iters) {
        return result_dict(solve(ConvexProgram{costs, capacities, cap}, tol, max_iters));
      },
      py::arg("costs"), py::arg("capacities"), py::arg("cap") = std::nullopt, py::arg("tol") = 1e-10,
      py::arg("max_iters") = 200000);
  mod.def(
      "project",
      [](const std::vector<double>& v, double total, std::optional<double> cap) {
        return project_capped_simplex(v, total, cap);
      },
      py::arg("v"), py::arg("total"), py::arg("cap") = std::nullopt);
  mod.def("running_average", &update_running_average, py::arg("avg"), py::arg("alloc"), py::arg("k"));
}
