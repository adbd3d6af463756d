"""Contraction-parameter bookkeeping for the error-feedback recursion."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ef21sim.core.exceptions import ParameterError


@dataclass(frozen=True)
class ContractionParams:
    alpha: float
    s: float
    theta: float
    beta: float

    @property
    def beta_over_theta(self) -> float:
        return self.beta / self.theta


def optimal_s(alpha: float) -> float:
    """Minimizer of beta/theta over admissible ``s``; any ``s`` works when alpha is 1."""
    if alpha == 1.0:
        return 1.0
    return 1.0 / math.sqrt(1.0 - alpha) - 1.0


def contraction_params(alpha: float, s: float | None = None) -> ContractionParams:
    """Return ``theta = 1 - (1-alpha)(1+s)`` and ``beta = (1-alpha)(1+1/s)``.

    ``s`` defaults to the value minimizing ``beta / theta``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}", name="alpha")
    if s is not None and s <= 0.0:
        raise ParameterError(f"s must be positive, got {s}", name="s")

    if alpha == 1.0:
        return ContractionParams(alpha=1.0, s=1.0 if s is None else s, theta=1.0, beta=0.0)

    if s is None:
        s = optimal_s(alpha)
    elif s >= alpha / (1.0 - alpha):
        raise ParameterError(
            f"s={s} is inadmissible for alpha={alpha}: theta would be <= 0 (need s < {alpha / (1.0 - alpha)})",
            name="s",
        )
    theta = 1.0 - (1.0 - alpha) * (1.0 + s)
    beta = (1.0 - alpha) * (1.0 + 1.0 / s)
    if theta <= 0.0:
        raise ParameterError(f"theta={theta} is not positive for alpha={alpha}, s={s}", name="s")
    return ContractionParams(alpha=alpha, s=s, theta=theta, beta=beta)


__all__ = ["ContractionParams", "contraction_params", "optimal_s"]
