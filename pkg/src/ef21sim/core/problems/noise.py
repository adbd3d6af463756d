"""Second-moment constants ``(A_i, B_i, C_i)`` of stochastic gradient oracles.

An oracle satisfies ``E|g_i(x)|^2 <= 2 A_i (f_i(x) - f_i^inf) + B_i |grad f_i(x)|^2 + C_i``.
Only two families are derivable from data; anything else is user supplied.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.problems.objectives import Objective, sample_smoothness


@dataclass(frozen=True)
class NoiseConstants:
    A: tuple[float, ...]
    B: tuple[float, ...]
    C: tuple[float, ...]

    def __post_init__(self) -> None:
        if not len(self.A) == len(self.B) == len(self.C):
            raise ContractViolation("noise constants must have one entry per client")
        if any(value < 0 for value in (*self.A, *self.B, *self.C)):
            raise ContractViolation("noise constants must be non-negative")

    @property
    def n_clients(self) -> int:
        return len(self.A)


def bounded_variance_noise(sigma_sq: Sequence[float]) -> NoiseConstants:
    """Unbiased oracle with variance at most ``sigma_i^2``: ``A=0, B=1, C=sigma_i^2``."""
    sigma = tuple(float(value) for value in sigma_sq)
    return NoiseConstants(A=(0.0,) * len(sigma), B=(1.0,) * len(sigma), C=sigma)


def importance_sampling_noise(obj: Objective, delta_inf: Sequence[float]) -> NoiseConstants:
    """Importance sampling proportional to ``L_ij``: ``A_i = mean_j L_ij, B_i = 1, C_i = 2 A_i Delta_i^inf``.

    ``delta_inf`` holds the user-supplied ``Delta_i^inf`` gaps, one per client.
    """
    if len(delta_inf) != obj.n_clients:
        raise ContractViolation(f"expected {obj.n_clients} Delta_i^inf values, got {len(delta_inf)}")
    A = tuple(float(np.mean(sample_smoothness(obj, client))) for client in range(obj.n_clients))
    C = tuple(2.0 * a * float(delta) for a, delta in zip(A, delta_inf))
    return NoiseConstants(A=A, B=(1.0,) * len(A), C=C)


__all__ = ["NoiseConstants", "bounded_variance_noise", "importance_sampling_noise"]
