"""Seeded synthetic problems with a planted linear model."""

from __future__ import annotations

import logging
from enum import StrEnum

import numpy as np

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.interfaces import DataSource
from ef21sim.core.problems import ClientShard, Objective, ObjectiveKind
from ef21sim.core.randomness import StreamRole, derive_stream
from ef21sim.plugins.datasources.partition import shard_sizes

logger = logging.getLogger(__name__)


class SynthKind(StrEnum):
    LOGISTIC = "logistic"
    LEAST_SQUARES = "least_squares"


def planted_point(d: int, seed: int) -> np.ndarray:
    """The ``x*`` used by :func:`synth` for the same ``(d, seed)``."""
    return derive_stream(seed, StreamRole.SYNTHETIC).standard_normal(d)


def synth(
    kind: str,
    N: int,
    d: int,
    n: int,
    seed: int,
    *,
    noise: float = 0.0,
    lam: float = 0.1,
) -> Objective:
    """Gaussian features; labels ``sign(a^T x* + noise)`` or ``a^T x* + noise``.

    ``lam`` is used by the logistic kind only.
    """
    kind = SynthKind(kind)
    if not N >= n >= 1 or d < 1:
        raise ContractViolation(f"synthetic problem needs N >= n >= 1 and d >= 1 (N={N}, n={n}, d={d})")
    if noise < 0:
        raise ContractViolation(f"noise must be non-negative, got {noise}")

    rng = derive_stream(seed, StreamRole.SYNTHETIC)
    x_star = rng.standard_normal(d)
    features = rng.standard_normal((N, d))
    perturbation = noise * rng.standard_normal(N)

    shards: list[ClientShard] = []
    start = 0
    for size in shard_sizes(N, n):
        block = np.ascontiguousarray(features[start : start + size])
        response = block @ x_star
        if noise:
            response = response + perturbation[start : start + size]
        if kind == SynthKind.LOGISTIC:
            response = np.where(response >= 0.0, 1.0, -1.0)
        shards.append(ClientShard(features=block, labels=response))
        start += size

    if kind == SynthKind.LOGISTIC:
        return Objective(kind=ObjectiveKind.LOGISTIC_NONCONVEX, shards=tuple(shards), lam=lam)
    return Objective(kind=ObjectiveKind.LEAST_SQUARES, shards=tuple(shards))


class SyntheticDataSource(DataSource):
    def __init__(
        self,
        *,
        objective: str = ObjectiveKind.LOGISTIC_NONCONVEX,
        samples: int,
        dimension: int,
        clients: int,
        seed: int = 0,
        noise: float = 0.0,
        lam: float = 0.0,
    ) -> None:
        self.objective = ObjectiveKind(objective)
        self.samples = samples
        self.dimension = dimension
        self.clients = clients
        self.seed = seed
        self.noise = noise
        self.lam = lam

    def load(self) -> Objective:
        kind = SynthKind.LOGISTIC if self.objective == ObjectiveKind.LOGISTIC_NONCONVEX else SynthKind.LEAST_SQUARES
        problem = synth(kind, self.samples, self.dimension, self.clients, self.seed, noise=self.noise, lam=self.lam)
        if self.objective == ObjectiveKind.QUADRATIC:
            problem = Objective(kind=ObjectiveKind.QUADRATIC, shards=problem.shards)
        logger.info(
            "Generated synthetic %s problem: N=%d d=%d n=%d seed=%d",
            self.objective,
            self.samples,
            self.dimension,
            self.clients,
            self.seed,
        )
        return problem


__all__ = ["SynthKind", "SyntheticDataSource", "planted_point", "synth"]
