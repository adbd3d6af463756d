"""Smoothness constants, PL constants and minimizers for the finite-sum objectives."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ef21sim.core.exceptions import ContractViolation, ParameterError
from ef21sim.core.problems.objectives import Objective, ObjectiveKind, loss, sample_smoothness
from ef21sim.core.randomness import StreamRole, derive_stream

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 200
POWER_TOLERANCE = 1e-10
_POWER_SEED = 0x5EED


@dataclass(frozen=True)
class SmoothnessReport:
    L_i: tuple[float, ...]
    L: float
    L_tilde: float
    script_L_i: tuple[float, ...]

    @property
    def n_clients(self) -> int:
        return len(self.L_i)

    def as_dict(self) -> dict[str, object]:
        return {
            "L": self.L,
            "L_tilde": self.L_tilde,
            "L_i": list(self.L_i),
            "script_L_i": list(self.script_L_i),
        }


def power_iteration(
    operator: Callable[[np.ndarray], np.ndarray],
    dimension: int,
    *,
    max_iter: int = POWER_ITERATIONS,
    tol: float = POWER_TOLERANCE,
) -> float:
    """Largest eigenvalue of a symmetric PSD operator given as a matvec."""
    vector = derive_stream(_POWER_SEED, StreamRole.DIAGNOSTIC).standard_normal(dimension)
    vector /= np.linalg.norm(vector)
    estimate = 0.0
    for _ in range(max_iter):
        image = operator(vector)
        norm = float(np.linalg.norm(image))
        if norm == 0.0:
            return 0.0
        vector = image / norm
        if abs(norm - estimate) <= tol * norm:
            estimate = norm
            break
        estimate = norm
    return estimate


def _gram_scale(kind: ObjectiveKind) -> float:
    if kind == ObjectiveKind.LOGISTIC_NONCONVEX:
        return 0.25
    if kind == ObjectiveKind.LEAST_SQUARES:
        return 2.0
    return 1.0


def _client_operator(features: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    count = features.shape[0]
    return lambda v: features.T @ (features @ v) / count


def smoothness(obj: Objective) -> SmoothnessReport:
    """Per-client and global Lipschitz-gradient bounds.

    ``L`` is taken on the averaged curvature ``(1/n) sum_i A_i^T A_i / N_i``, which is the
    pooled Gram matrix whenever shards are equal in size.
    """
    scale = _gram_scale(obj.kind)
    curvature = 2.0 * obj.lam if obj.kind == ObjectiveKind.LOGISTIC_NONCONVEX else 0.0
    d = obj.dimension

    L_i = tuple(
        scale * power_iteration(_client_operator(shard.features), d) + curvature for shard in obj.shards
    )
    operators = [_client_operator(shard.features) for shard in obj.shards]

    def averaged(v: np.ndarray) -> np.ndarray:
        total = np.zeros(d)
        for op in operators:
            total += op(v)
        return total / len(operators)

    L = scale * power_iteration(averaged, d) + curvature
    L_tilde = math.sqrt(sum(value * value for value in L_i) / len(L_i))
    script_L_i = tuple(float(np.max(sample_smoothness(obj, client))) for client in range(obj.n_clients))
    logger.debug("Smoothness: L=%.6g L_tilde=%.6g", L, L_tilde)
    return SmoothnessReport(L_i=L_i, L=L, L_tilde=L_tilde, script_L_i=script_L_i)


def _require_quadratic(obj: Objective) -> None:
    if obj.kind == ObjectiveKind.LOGISTIC_NONCONVEX:
        raise ParameterError(
            "PL constant and minimizer are only computable for least_squares/quadratic objectives; "
            "supply mu explicitly",
            name="mu",
        )


def hessian(obj: Objective) -> np.ndarray:
    _require_quadratic(obj)
    scale = _gram_scale(obj.kind)
    total = np.zeros((obj.dimension, obj.dimension))
    for shard in obj.shards:
        total += shard.features.T @ shard.features / shard.n_samples
    return scale * total / obj.n_clients


def pl_constant(obj: Objective, *, rel_tol: float = 1e-10) -> float:
    """Smallest positive eigenvalue of the (constant) Hessian."""
    eigenvalues = np.linalg.eigvalsh(hessian(obj))
    top = float(eigenvalues[-1])
    if top <= 0.0:
        raise ContractViolation("objective has zero curvature; no PL constant")
    positive = eigenvalues[eigenvalues > rel_tol * top]
    return float(positive[0])


def minimizer(obj: Objective) -> np.ndarray:
    """Minimum-norm minimizer via a weighted least-squares solve."""
    _require_quadratic(obj)
    rows = []
    targets = []
    for shard in obj.shards:
        weight = 1.0 / math.sqrt(shard.n_samples * obj.n_clients)
        rows.append(weight * shard.features)
        targets.append(weight * shard.labels)
    solution, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(targets), rcond=None)
    return solution


def minimum_value(obj: Objective) -> float:
    return loss(obj, minimizer(obj))


__all__ = [
    "POWER_ITERATIONS",
    "POWER_TOLERANCE",
    "SmoothnessReport",
    "hessian",
    "minimizer",
    "minimum_value",
    "pl_constant",
    "power_iteration",
    "smoothness",
]
