import json
import math

import numpy as np
import pytest

import condexp


def test_builtin_names():
    assert set(condexp.builtin_problem_names()) == {"cubic-1d", "quadratic-1d", "twopar-2d"}


def test_linear_gaussian_summary():
    problem = condexp.parse_problem(json.dumps({
        "prior": {"type": "gaussian", "mean": [0], "covariance": [[1]]},
        "forward": {"input_dim": 1, "output_dim": 1, "terms": ["0 : 1 : 1"]},
        "error": {"type": "gaussian", "mean": [0], "covariance": [[0.5]]},
    }))
    s = condexp.summarize(problem, condexp.gauss_hermite(1, 48), np.array([0.9]))
    assert s.mean[0] == pytest.approx(0.9 / 1.5, abs=1e-10)
    assert s.covariance[0, 0] == pytest.approx(0.5 / 1.5, abs=1e-10)
    assert 0 < s.effective_sample_fraction <= 1


def test_engine_matches_oracle():
    problem = condexp.builtin_problem("cubic-1d")
    engine = condexp.PosteriorEngine(problem, condexp.gauss_legendre_normal(1, 200, 8, 10.0))
    y = np.array([0.125])
    oracle = condexp.posterior_density(problem, y)
    assert engine.mean(y)[0] == pytest.approx(oracle["mean"][0], abs=1e-6)
    assert oracle["values"].shape == (4001,)


def test_two_parameter_values():
    problem = condexp.builtin_problem("twopar-2d")
    s = condexp.summarize(problem, condexp.gauss_legendre_normal(2, 100), np.array([1.5]))
    assert s.mean == pytest.approx([-0.2834, -0.2834], abs=1e-3)
    ens = condexp.build_ensemble(problem, condexp.gauss_hermite(2, 32), condexp.gauss_hermite(1, 32))
    affine = condexp.fit_polynomial_ce(ens, 1)
    assert affine(np.array([1.5])) == pytest.approx([0.0775, 0.0775], abs=2e-3)


def test_filters():
    problem = condexp.builtin_problem("cubic-1d")
    ens = condexp.build_ensemble(problem, condexp.gauss_hermite(1, 16), condexp.gauss_hermite(1, 16))
    assert len(ens) == 256
    k = condexp.kalman_gain(ens)
    fit = condexp.fit_polynomial_ce(ens, 1)
    assert k[0, 0] == pytest.approx(fit.coefficients[0, 1] / fit.scale[0], abs=1e-10)
    updated = condexp.apply_filter(ens, fit, np.array([0.3]))
    assert np.dot(updated.weights, updated.q[:, 0]) == pytest.approx(fit(np.array([0.3]))[0], abs=1e-10)


def test_errors_map_to_exceptions():
    problem = condexp.builtin_problem("quadratic-1d")
    with pytest.raises(condexp.VanishingEvidenceError):
        condexp.summarize(problem, condexp.gauss_hermite(1, 16), np.array([1e6]))
    with pytest.raises(condexp.ParseError):
        condexp.parse_problem("{")
    with pytest.raises(condexp.CondexpError):
        condexp.builtin_problem("nope")


def test_problem_round_trip():
    problem = condexp.builtin_problem("twopar-2d")
    text = condexp.problem_to_json(problem)
    assert condexp.problem_to_json(condexp.parse_problem(text)) == text


def test_monte_carlo_is_deterministic():
    a = condexp.monte_carlo(2, 100, 5)
    b = condexp.monte_carlo(2, 100, 5)
    assert np.array_equal(a.nodes, b.nodes)
    assert math.isclose(a.weights.sum(), 1.0)
