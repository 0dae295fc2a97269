#include "condexp/cde.hpp"
#include "condexp/errors.hpp"
#include "condexp/filters.hpp"
#include "condexp/oracle.hpp"
#include "condexp/problem_io.hpp"
#include "condexp/quadrature.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace condexp;

namespace {

std::vector<GridAxis> grid_for(const InverseProblem& problem, std::size_t points) {
  auto grid = default_grid(problem);
  if (points > 0) {
    for (auto& axis : grid) axis.points = points;
  }
  return grid;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditioned expectations for Bayesian parameter identification";

  auto base = py::register_exception<Error>(m, "CondexpError", PyExc_RuntimeError);
  py::register_exception<VanishingEvidenceError>(m, "VanishingEvidenceError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<InverseProblem>(m, "InverseProblem")
      .def_property_readonly("name", &InverseProblem::name)
      .def_property_readonly("germ_dim", &InverseProblem::germ_dim)
      .def_property_readonly("parameter_dim", &InverseProblem::parameter_dim)
      .def_property_readonly("measurement_dim", &InverseProblem::measurement_dim)
      .def_property_readonly("observed", &InverseProblem::observed)
      .def("parameter", &InverseProblem::parameter, py::arg("xi"))
      .def("observation", &InverseProblem::observation, py::arg("xi"))
      .def("__repr__", [](const InverseProblem& p) {
        return "<InverseProblem '" + p.name() + "' params=" + std::to_string(p.parameter_dim()) + ">";
      });

  m.def("builtin_problem", &builtin_problem, py::arg("name"));
  m.def("builtin_problem_names", &builtin_problem_names);
  m.def("parse_problem", &parse_problem, py::arg("json_text"));
  m.def("load_problem", &resolve_problem, py::arg("name_or_path"));
  m.def("problem_to_json", &problem_to_json, py::arg("problem"));

  py::class_<QuadratureRule>(m, "QuadratureRule")
      .def_property_readonly("nodes", &QuadratureRule::nodes)
      .def_property_readonly("log_weights", &QuadratureRule::log_weights)
      .def_property_readonly("weights", &QuadratureRule::weights)
      .def("__len__", &QuadratureRule::size);

  m.def("gauss_hermite", &gauss_hermite, py::arg("dim"), py::arg("order"));
  m.def("monte_carlo", &monte_carlo, py::arg("dim"), py::arg("n"), py::arg("seed"));
  m.def("gauss_legendre_normal", &gauss_legendre_normal, py::arg("dim"), py::arg("panels"),
        py::arg("points_per_panel") = 8, py::arg("half_width") = 8.0);

  py::class_<PosteriorSummary>(m, "PosteriorSummary")
      .def_readonly("observation", &PosteriorSummary::observation)
      .def_readonly("mean", &PosteriorSummary::mean)
      .def_readonly("covariance", &PosteriorSummary::covariance)
      .def_readonly("log_evidence", &PosteriorSummary::log_evidence)
      .def_readonly("effective_sample_fraction", &PosteriorSummary::effective_sample_fraction)
      .def_readonly("flags", &PosteriorSummary::flags)
      .def_property_readonly("has_moments", &PosteriorSummary::has_moments);

  py::class_<PosteriorEngine>(m, "PosteriorEngine")
      .def(py::init([](const InverseProblem& p, const QuadratureRule& r, unsigned threads) {
             return PosteriorEngine(p, r, EngineOptions{threads});
           }),
           py::arg("problem"), py::arg("rule"), py::arg("threads") = 1)
      .def("mean", &PosteriorEngine::mean, py::arg("y"), py::call_guard<py::gil_scoped_release>())
      .def("covariance", &PosteriorEngine::covariance, py::arg("y"), py::call_guard<py::gil_scoped_release>())
      .def("summarize", &PosteriorEngine::summarize, py::arg("y"), py::call_guard<py::gil_scoped_release>())
      .def("sweep", &PosteriorEngine::sweep, py::arg("ys"), py::call_guard<py::gil_scoped_release>())
      .def("log_evidence", &PosteriorEngine::log_evidence, py::arg("y"))
      .def("expectation",
           [](const PosteriorEngine& e, const std::function<Vector(const Vector&)>& f, const Vector& y) {
             return e.expectation(PosteriorEngine::GermFunctional(f), y);
           },
           py::arg("functional"), py::arg("y"));

  m.def("summarize",
        py::overload_cast<const InverseProblem&, const QuadratureRule&, const Vector&>(&condexp::summarize),
        py::arg("problem"), py::arg("rule"), py::arg("y"));

  m.def(
      "posterior_density",
      [](const InverseProblem& p, const Vector& y, std::size_t points) {
        const auto d = posterior_density(p, grid_for(p, points), y);
        const auto mom = posterior_moments(d);
        py::dict out;
        out["axes"] = d.axes;
        Eigen::Map<const Vector> values(d.values.data(), static_cast<Eigen::Index>(d.values.size()));
        out["values"] = Vector(values);
        out["log_evidence"] = d.log_evidence;
        out["mean"] = mom.mean;
        out["covariance"] = mom.covariance;
        return out;
      },
      py::arg("problem"), py::arg("y"), py::arg("points") = 0);

  py::class_<Ensemble>(m, "Ensemble")
      .def_readonly("xi", &Ensemble::xi)
      .def_readonly("theta", &Ensemble::theta)
      .def_readonly("weights", &Ensemble::weights)
      .def_readonly("q", &Ensemble::q)
      .def_readonly("z", &Ensemble::z)
      .def("__len__", &Ensemble::size);

  py::class_<PolynomialCeMap>(m, "PolynomialCeMap")
      .def_readonly("degree", &PolynomialCeMap::degree)
      .def_readonly("coefficients", &PolynomialCeMap::coefficients)
      .def_readonly("shift", &PolynomialCeMap::shift)
      .def_readonly("scale", &PolynomialCeMap::scale)
      .def_readonly("residual", &PolynomialCeMap::residual)
      .def_readonly("condition_estimate", &PolynomialCeMap::condition_estimate)
      .def_readonly("ill_conditioned", &PolynomialCeMap::ill_conditioned)
      .def_readonly("rank", &PolynomialCeMap::rank)
      .def("__call__", &evaluate_ce_map, py::arg("y"));

  m.def("build_ensemble", &build_ensemble, py::arg("problem"), py::arg("xi_rule"), py::arg("theta_rule"));
  m.def("kalman_gain", &kalman_gain, py::arg("ensemble"));
  m.def("fit_polynomial_ce", &fit_polynomial_ce, py::arg("ensemble"), py::arg("degree"));
  m.def("apply_filter", &apply_filter, py::arg("ensemble"), py::arg("map"), py::arg("y"));
  m.def("covariance_corrected_filter", &covariance_corrected_filter, py::arg("ensemble"), py::arg("map"),
        py::arg("y"), py::arg("target_cov"));
  m.def("polynomial_conditional_covariance", &polynomial_conditional_covariance, py::arg("ensemble"),
        py::arg("degree"), py::arg("y"));
}
