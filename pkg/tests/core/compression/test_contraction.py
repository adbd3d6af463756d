"""Tests for contraction-parameter bookkeeping."""

import math

import pytest

from ef21sim.core.compression import contraction_params, optimal_s
from ef21sim.core.exceptions import ParameterError


def test_optimal_s_half():
    """At alpha = 1/2 the optimal s is sqrt(2) - 1."""
    assert optimal_s(0.5) == pytest.approx(math.sqrt(2.0) - 1.0)


def test_default_params_at_half():
    """theta and beta at the optimal s for alpha = 1/2."""
    params = contraction_params(0.5)
    s = math.sqrt(2.0) - 1.0
    assert params.theta == pytest.approx(1.0 - 0.5 * (1.0 + s))
    assert params.beta == pytest.approx(0.5 * (1.0 + 1.0 / s))
    assert params.beta_over_theta == pytest.approx(0.5 / (1.0 - math.sqrt(0.5)) ** 2)


def test_optimal_s_minimizes_ratio():
    """Nearby admissible s values give a larger beta/theta."""
    alpha = 0.3
    best = contraction_params(alpha).beta_over_theta
    s_star = optimal_s(alpha)
    for s in (0.5 * s_star, 0.9 * s_star, 1.1 * s_star):
        assert contraction_params(alpha, s).beta_over_theta >= best


def test_lossless_params():
    """alpha = 1 gives theta = 1 and beta = 0."""
    params = contraction_params(1.0)
    assert params.theta == 1.0
    assert params.beta == 0.0


def test_inadmissible_s_rejected():
    """s at or beyond alpha/(1-alpha) makes theta non-positive."""
    with pytest.raises(ParameterError, match="inadmissible"):
        contraction_params(0.5, 1.0)


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
def test_alpha_range(alpha):
    """alpha must lie in (0, 1]."""
    with pytest.raises(ParameterError):
        contraction_params(alpha)
