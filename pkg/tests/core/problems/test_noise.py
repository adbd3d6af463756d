"""Tests for stochastic-oracle noise constants."""

import numpy as np
import pytest

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.problems import NoiseConstants, bounded_variance_noise, importance_sampling_noise, sample_smoothness


def test_bounded_variance():
    """Bounded variance gives A = 0, B = 1, C = sigma^2."""
    noise = bounded_variance_noise([0.5, 2.0])
    assert noise.A == (0.0, 0.0)
    assert noise.B == (1.0, 1.0)
    assert noise.C == (0.5, 2.0)


def test_importance_sampling(small_logistic):
    """A_i is the mean per-sample constant and C_i = 2 A_i Delta_i."""
    deltas = [0.1] * small_logistic.n_clients
    noise = importance_sampling_noise(small_logistic, deltas)
    expected = float(np.mean(sample_smoothness(small_logistic, 0)))
    assert noise.A[0] == pytest.approx(expected)
    assert noise.C[0] == pytest.approx(0.2 * expected)


def test_importance_sampling_needs_one_gap_per_client(small_logistic):
    """The gap list must match the client count."""
    with pytest.raises(ContractViolation):
        importance_sampling_noise(small_logistic, [0.1])


def test_negative_constants_rejected():
    """Noise constants must be non-negative."""
    with pytest.raises(ContractViolation):
        NoiseConstants(A=(0.0,), B=(-1.0,), C=(0.0,))
