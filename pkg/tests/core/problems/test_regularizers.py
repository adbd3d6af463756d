"""Tests for regularizers and the gradient mapping."""

import numpy as np
import pytest

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.problems import (
    Regularizer,
    gradient_mapping,
    mapping_from_grad,
    project_domain,
    prox,
    regularizer_value,
)


def test_l1_prox_soft_thresholds():
    """The l1 prox shrinks toward zero by gamma * weight."""
    out = prox(Regularizer.l1(0.5), np.array([2.0, -0.2, -1.0]), 1.0)
    np.testing.assert_allclose(out, [1.5, 0.0, -0.5])


def test_box_prox_clips():
    """The box prox is a projection."""
    out = prox(Regularizer.box(-1.0, 1.0), np.array([3.0, 0.5, -7.0]), 0.1)
    np.testing.assert_array_equal(out, [1.0, 0.5, -1.0])


def test_none_prox_is_identity():
    """Without a regularizer prox returns the point."""
    x = np.array([1.0, -2.0])
    np.testing.assert_array_equal(prox(Regularizer.none(), x, 0.3), x)


def test_prox_requires_positive_gamma():
    """gamma must be positive."""
    with pytest.raises(ContractViolation):
        prox(Regularizer.l1(1.0), np.zeros(2), 0.0)


def test_regularizer_values():
    """l1 is weighted absolute sum; box is an indicator."""
    assert regularizer_value(Regularizer.l1(2.0), np.array([1.0, -0.5])) == pytest.approx(3.0)
    assert regularizer_value(Regularizer.box(0.0, 1.0), np.array([0.5])) == 0.0
    assert regularizer_value(Regularizer.box(0.0, 1.0), np.array([1.5])) == float("inf")


def test_gradient_mapping_without_regularizer(half_square):
    """With r = 0 the mapping is the plain gradient."""
    x = np.array([2.0])
    np.testing.assert_allclose(gradient_mapping(half_square, Regularizer.none(), x, 0.5), [2.0])


def test_gradient_mapping_vanishes_at_constrained_minimum(half_square):
    """On the box [1, 2] the minimizer of x^2/2 is 1 and the mapping vanishes there."""
    np.testing.assert_allclose(gradient_mapping(half_square, Regularizer.box(1.0, 2.0), np.array([1.0]), 0.5), [0.0])


def test_from_mapping():
    """Settings mappings build regularizers."""
    assert Regularizer.from_mapping(None).is_none
    reg = Regularizer.from_mapping({"kind": "l1", "weight": 0.1})
    assert reg.describe() == "l1(0.1)"
    with pytest.raises(ContractViolation):
        Regularizer.from_mapping({"kind": "box", "lo": 1.0, "hi": 0.0})


@pytest.mark.parametrize("reg", [Regularizer.l1(0.3), Regularizer.box(-0.5, 0.5), Regularizer.none()])
def test_prox_is_nonexpansive(reg):
    """|prox(x) - prox(y)| <= |x - y| on random pairs."""
    rng = np.random.default_rng(5)
    for _ in range(200):
        x, y = rng.normal(size=6) * 2.0, rng.normal(size=6) * 2.0
        gamma = float(rng.uniform(0.01, 3.0))
        gap = np.linalg.norm(prox(reg, x, gamma) - prox(reg, y, gamma))
        assert gap <= np.linalg.norm(x - y) + 1e-12


def test_project_domain_clips_only_the_box():
    """Points outside the box move to its nearest point; other regularizers leave x alone."""
    x = np.array([0.0, 0.7, 3.0])
    np.testing.assert_array_equal(project_domain(Regularizer.box(0.5, 1.0), x), [0.5, 0.7, 1.0])
    np.testing.assert_array_equal(project_domain(Regularizer.l1(0.1), x), x)


@pytest.mark.parametrize(
    ("reg", "x"),
    [
        (Regularizer.l1(0.4), np.array([1.0, -2.0, 0.0, 0.0, 0.0])),
        (Regularizer.box(0.0, 1.0), np.array([0.0, 1.0, 0.5, 0.0, 1.0])),
    ],
)
def test_zero_gamma_mapping_is_the_small_gamma_limit(reg, x):
    """At gamma = 0 the mapping equals its value for a vanishing stepsize."""
    grad = np.array([0.3, 0.3, 1.0, -0.1, 0.2])
    limit = mapping_from_grad(reg, x, grad, 0.0)
    np.testing.assert_allclose(limit, mapping_from_grad(reg, x, grad, 1e-6), atol=1e-6)


def test_zero_gamma_box_mapping_drops_blocked_components():
    """Components pushing out through an active bound vanish at gamma = 0."""
    reg = Regularizer.box(0.0, 1.0)
    out = mapping_from_grad(reg, np.array([0.0, 1.0, 0.5]), np.array([2.0, -2.0, 2.0]), 0.0)
    np.testing.assert_array_equal(out, [0.0, 0.0, 2.0])
