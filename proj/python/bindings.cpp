#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hspde/app.hpp"
#include "hspde/config.hpp"
#include "hspde/errors.hpp"
#include "hspde/hermite.hpp"
#include "hspde/monotonicity.hpp"
#include "hspde/operators.hpp"
#include "hspde/pde_solver.hpp"
#include "hspde/serialize.hpp"
#include "hspde/spde_sim.hpp"

namespace py = pybind11;
using namespace hspde;

namespace {

MatrixForm form_from_string(const std::string& name) {
  if (name == "exact") return MatrixForm::exact;
  if (name == "galerkin") return MatrixForm::galerkin;
  throw std::invalid_argument("form must be 'exact' or 'galerkin', got '" + name + "'");
}

OperatorParams make_params(double kappa, double sigma, double b) {
  OperatorParams params{kappa, sigma, b};
  params.validate();
  return params;
}

CoeffVec coeffs(const std::vector<double>& v) { return CoeffVec(v); }

/// Stacks states into a (times, N) array.
Eigen::MatrixXd stack(const std::vector<CoeffVec>& states, std::size_t n) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t k = 0; k < n; ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = states[i][k];
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hermite spectral solvers for a fourth-order stochastic PDE";

  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.attr("REPORT_SCHEMA") = kReportSchema;

  m.def("hermite_eval", &hermite_eval, py::arg("k"), py::arg("t"));
  m.def("hermite_values", &hermite_values, py::arg("n"), py::arg("t"));
  m.def(
      "gauss_hermite",
      [](std::size_t count) {
        const QuadratureRule rule = gauss_hermite_rule(count);
        return py::make_tuple(rule.nodes, rule.weights);
      },
      py::arg("count"), "Nodes and weights for the weight exp(-t^2).");
  m.def(
      "project",
      [](const std::function<double(double)>& f, std::size_t n, std::size_t nodes) {
        return project(f, n, gauss_hermite_rule(nodes)).vector();
      },
      py::arg("f"), py::arg("n"), py::arg("nodes") = 256);
  m.def(
      "norm_p", [](const std::vector<double>& u, double p) { return norm_p(coeffs(u), p); }, py::arg("u"),
      py::arg("p"));
  m.def(
      "inner_p",
      [](const std::vector<double>& u, const std::vector<double>& v, double p) {
        return inner_p(coeffs(u), coeffs(v), p);
      },
      py::arg("u"), py::arg("v"), py::arg("p"));

  m.def(
      "derivative_matrix",
      [](int order, std::size_t n, const std::string& form) {
        return derivative_matrix(order, n, form_from_string(form)).to_dense();
      },
      py::arg("order"), py::arg("n"), py::arg("form") = "exact");
  m.def(
      "L_matrix",
      [](double kappa, double sigma, double b, std::size_t n, const std::string& form) {
        return L_matrix(make_params(kappa, sigma, b), n, form_from_string(form)).to_dense();
      },
      py::arg("kappa"), py::arg("sigma"), py::arg("b"), py::arg("n"), py::arg("form") = "exact");
  m.def(
      "A_matrices",
      [](double kappa, double sigma, double b, std::size_t n, const std::string& form) {
        const auto [a1, a2] = A_matrices(make_params(kappa, sigma, b), n, form_from_string(form));
        return py::make_tuple(a1.to_dense(), a2.to_dense());
      },
      py::arg("kappa"), py::arg("sigma"), py::arg("b"), py::arg("n"), py::arg("form") = "exact");

  m.def(
      "f_functions",
      [](double z, double p) {
        const FValues f = f_functions(z, p);
        return py::make_tuple(f.f1, f.f2, f.f3, f.f4);
      },
      py::arg("z"), py::arg("p"));
  m.def("g_at_zero", &g_at_zero, py::arg("j"), py::arg("p"));
  m.def(
      "abc_sequences",
      [](double p, std::size_t n) {
        const ABCSequences s = abc_sequences(p, n);
        return py::make_tuple(s.a, s.b, s.c);
      },
      py::arg("p"), py::arg("n"));
  m.def(
      "bilap_form", [](const std::vector<double>& u, double p) { return bilap_form(coeffs(u), p); }, py::arg("u"),
      py::arg("p"));
  m.def(
      "abc_form",
      [](const std::vector<double>& u, double p) { return abc_form(coeffs(u), abc_sequences(p, u.size() + 4)); },
      py::arg("u"), py::arg("p"));
  m.def(
      "LA_form",
      [](const std::vector<double>& u, double kappa, double sigma, double b, double p) {
        return LA_form(coeffs(u), make_params(kappa, sigma, b), p);
      },
      py::arg("u"), py::arg("kappa"), py::arg("sigma"), py::arg("b"), py::arg("p"));
  m.def(
      "_estimate_constant_json",
      [](double p, std::optional<std::vector<double>> params, std::size_t n_max, double tol) {
        std::optional<OperatorParams> op;
        if (params) {
          if (params->size() != 3) throw std::invalid_argument("params must be (kappa, sigma, b)");
          op = make_params((*params)[0], (*params)[1], (*params)[2]);
        }
        py::gil_scoped_release release;
        return to_json(estimate_constant(p, op, n_max, tol)).dump();
      },
      py::arg("p"), py::arg("params"), py::arg("N_max"), py::arg("tol"));

  m.def(
      "solve_pde",
      [](const std::vector<double>& psi, double kappa, double sigma, double b, double p, std::size_t n, double T,
         double dt, const std::string& method) {
        const std::vector<double> grid = uniform_grid(T, dt);
        PdeRun run;
        {
          py::gil_scoped_release release;
          run = solve_pde(coeffs(psi), make_params(kappa, sigma, b), p, n, grid, time_method_from_string(method));
        }
        return py::make_tuple(run.t_grid, stack(run.states, n));
      },
      py::arg("psi"), py::arg("kappa"), py::arg("sigma"), py::arg("b"), py::arg("p"), py::arg("N"), py::arg("T"),
      py::arg("dt"), py::arg("method") = "matrix-exponential",
      "Returns (times, states) with states of shape (len(times), N).");
  m.def(
      "simulate",
      [](const std::vector<double>& psi, double kappa, double sigma, double b, double p, std::size_t n, double dt,
         double T, std::size_t paths, std::uint64_t seed, const std::vector<double>& save_times, unsigned threads) {
        PathEnsemble ens;
        {
          py::gil_scoped_release release;
          SimulationOptions options;
          options.threads = threads;
          ens = simulate(coeffs(psi), make_params(kappa, sigma, b), p, n, dt, T, paths, seed, save_times, options);
        }
        py::list out;
        for (std::size_t i = 0; i < ens.paths.size(); ++i) {
          if (ens.path_ok(i)) {
            out.append(stack(ens.paths[i], n));
          } else {
            out.append(py::none());
          }
        }
        return py::make_tuple(ens.t_grid, out);
      },
      py::arg("psi"), py::arg("kappa"), py::arg("sigma"), py::arg("b"), py::arg("p"), py::arg("N"), py::arg("dt"),
      py::arg("T"), py::arg("M"), py::arg("seed"), py::arg("save_times"), py::arg("threads") = 1,
      "Returns (times, paths); each path is a (len(times), N) array or None if it failed.");

  m.def(
      "_run_json",
      [](const std::string& config_text) {
        const RunConfig cfg = parse_config(json::parse(config_text));
        std::ostringstream log;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run(cfg, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("config_json"));
}
