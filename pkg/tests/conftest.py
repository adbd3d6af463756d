"""Shared fixtures: small objectives with known structure."""

from __future__ import annotations

import numpy as np
import pytest

from ef21sim.core.problems import ClientShard, Objective, ObjectiveKind
from ef21sim.plugins.datasources import synth


@pytest.fixture
def half_square() -> Objective:
    """``f(x) = x^2 / 2`` held by a single client."""
    shard = ClientShard(features=np.ones((1, 1)), labels=np.zeros(1))
    return Objective(ObjectiveKind.QUADRATIC, (shard,))


@pytest.fixture
def small_logistic() -> Objective:
    return synth("logistic", 120, 10, 4, seed=3, noise=0.5, lam=0.1)


@pytest.fixture
def small_least_squares() -> Objective:
    return synth("least_squares", 80, 6, 4, seed=5, noise=0.1)


@pytest.fixture
def three_line_libsvm(tmp_path):
    path = tmp_path / "three.svm"
    path.write_text("1 1:0.5 3:-2\n-1 2:1.5\n1 1:1 2:2 3:3\n", encoding="utf-8")
    return path
