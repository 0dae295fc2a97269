"""Conditioned expectations, density oracle and filter approximations."""

from ._core import (
    CondexpError,
    Ensemble,
    InverseProblem,
    ParseError,
    PolynomialCeMap,
    PosteriorEngine,
    PosteriorSummary,
    QuadratureRule,
    VanishingEvidenceError,
    apply_filter,
    build_ensemble,
    builtin_problem,
    builtin_problem_names,
    covariance_corrected_filter,
    fit_polynomial_ce,
    gauss_hermite,
    gauss_legendre_normal,
    kalman_gain,
    load_problem,
    monte_carlo,
    parse_problem,
    polynomial_conditional_covariance,
    posterior_density,
    problem_to_json,
    summarize,
)

__all__ = [
    "CondexpError",
    "Ensemble",
    "InverseProblem",
    "ParseError",
    "PolynomialCeMap",
    "PosteriorEngine",
    "PosteriorSummary",
    "QuadratureRule",
    "VanishingEvidenceError",
    "apply_filter",
    "build_ensemble",
    "builtin_problem",
    "builtin_problem_names",
    "covariance_corrected_filter",
    "fit_polynomial_ce",
    "gauss_hermite",
    "gauss_legendre_normal",
    "kalman_gain",
    "load_problem",
    "monte_carlo",
    "parse_problem",
    "polynomial_conditional_covariance",
    "posterior_density",
    "problem_to_json",
    "summarize",
]
