"""Finite-sum objectives split across clients, with exact and sampled gradient oracles.

Every per-sample loss is a function of the margin ``z = a^T x``, so a client
gradient is ``A^T w / N_i`` with per-sample weights ``w``. The nonconvex
regularizer ``lambda * sum_j x_j^2 / (1 + x_j^2)`` is part of every logistic
client function and is always evaluated deterministically.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.randomness import RandomStream


class ObjectiveKind(StrEnum):
    LOGISTIC_NONCONVEX = "logistic_nonconvex"
    LEAST_SQUARES = "least_squares"
    QUADRATIC = "quadratic"


@dataclass(frozen=True, eq=False)
class ClientShard:
    """One client's rows: features ``(N_i, d)`` and labels ``(N_i,)``."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=float)
        labels = np.ascontiguousarray(self.labels, dtype=float)
        if features.ndim != 2:
            raise ContractViolation(f"features must be a matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ContractViolation(f"labels shape {labels.shape} does not match {features.shape[0]} rows")
        if features.shape[0] < 1:
            raise ContractViolation("a client shard needs at least one row")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def same_as(self, other: ClientShard) -> bool:
        return np.array_equal(self.features, other.features) and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True, eq=False)
class Objective:
    """``f(x) = (1/n) sum_i f_i(x)`` with ``f_i`` the mean of the client's per-sample losses."""

    kind: ObjectiveKind
    shards: tuple[ClientShard, ...]
    lam: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))
        object.__setattr__(self, "shards", tuple(self.shards))
        if not self.shards:
            raise ContractViolation("an objective needs at least one client")
        if self.lam < 0:
            raise ContractViolation(f"lambda must be non-negative, got {self.lam}")
        if self.lam and self.kind != ObjectiveKind.LOGISTIC_NONCONVEX:
            raise ContractViolation("lambda applies only to logistic_nonconvex objectives")
        dims = {shard.dimension for shard in self.shards}
        if len(dims) != 1:
            raise ContractViolation(f"client shards disagree on the dimension: {sorted(dims)}")

    @property
    def n_clients(self) -> int:
        return len(self.shards)

    @property
    def dimension(self) -> int:
        return self.shards[0].dimension

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(shard.n_samples for shard in self.shards)

    @property
    def total_samples(self) -> int:
        return sum(self.sizes)

    def same_as(self, other: Objective) -> bool:
        return (
            self.kind == other.kind
            and self.lam == other.lam
            and self.n_clients == other.n_clients
            and all(a.same_as(b) for a, b in zip(self.shards, other.shards))
        )

    def describe(self) -> str:
        if self.kind == ObjectiveKind.LOGISTIC_NONCONVEX:
            return f"{self.kind}(lambda={self.lam})"
        return str(self.kind)


def ordered_mean(vectors: Iterable[np.ndarray]) -> np.ndarray:
    """Mean with a fixed left-to-right summation order (bit-reproducible)."""
    total: np.ndarray | None = None
    count = 0
    for vector in vectors:
        total = np.array(vector, dtype=float, copy=True) if total is None else total + vector
        count += 1
    if total is None:
        raise ContractViolation("cannot average an empty collection")
    return total / count


def _check_point(obj: Objective, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != obj.dimension:
        raise ContractViolation(f"expected a point of dimension {obj.dimension}, got shape {x.shape}")
    return x


def _check_client(obj: Objective, client: int) -> ClientShard:
    if not 0 <= client < obj.n_clients:
        raise ContractViolation(f"client index {client} out of range for {obj.n_clients} clients")
    return obj.shards[client]


def _sigmoid(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _sample_losses(kind: ObjectiveKind, margins: np.ndarray, labels: np.ndarray) -> np.ndarray:
    if kind == ObjectiveKind.LOGISTIC_NONCONVEX:
        return np.logaddexp(0.0, -labels * margins)
    residual = margins - labels
    if kind == ObjectiveKind.LEAST_SQUARES:
        return residual * residual
    return 0.5 * residual * residual


def _sample_weights(kind: ObjectiveKind, margins: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Derivative of each per-sample loss with respect to its margin."""
    if kind == ObjectiveKind.LOGISTIC_NONCONVEX:
        return -labels * _sigmoid(-labels * margins)
    residual = margins - labels
    if kind == ObjectiveKind.LEAST_SQUARES:
        return 2.0 * residual
    return residual


def nonconvex_penalty(x: np.ndarray, lam: float) -> float:
    squares = x * x
    return float(lam * np.sum(squares / (1.0 + squares)))


def nonconvex_penalty_grad(x: np.ndarray, lam: float) -> np.ndarray:
    denom = 1.0 + x * x
    return 2.0 * lam * x / (denom * denom)


def client_loss(obj: Objective, x: np.ndarray, client: int) -> float:
    x = _check_point(obj, x)
    shard = _check_client(obj, client)
    value = float(np.mean(_sample_losses(obj.kind, shard.features @ x, shard.labels)))
    if obj.lam:
        value += nonconvex_penalty(x, obj.lam)
    return value


def loss(obj: Objective, x: np.ndarray) -> float:
    """``f(x)``: client losses averaged in client order."""
    x = _check_point(obj, x)
    total = 0.0
    for client in range(obj.n_clients):
        total += client_loss(obj, x, client)
    return total / obj.n_clients


def _data_grad(obj: Objective, shard: ClientShard, x: np.ndarray, indices: np.ndarray | None) -> np.ndarray:
    if indices is None or len(indices) == shard.n_samples:
        features, labels = shard.features, shard.labels
    else:
        features, labels = shard.features[indices], shard.labels[indices]
    weights = _sample_weights(obj.kind, features @ x, labels)
    return features.T @ weights / features.shape[0]


def full_grad(obj: Objective, x: np.ndarray, client: int) -> np.ndarray:
    """Exact ``grad f_i(x)``."""
    x = _check_point(obj, x)
    shard = _check_client(obj, client)
    grad = _data_grad(obj, shard, x, None)
    if obj.lam:
        grad = grad + nonconvex_penalty_grad(x, obj.lam)
    return grad


def full_objective_grad(obj: Objective, x: np.ndarray) -> np.ndarray:
    """Exact ``grad f(x)`` as the ordered mean of client gradients."""
    return ordered_mean(full_grad(obj, x, client) for client in range(obj.n_clients))


def batch_grad(obj: Objective, x: np.ndarray, client: int, indices: Sequence[int] | np.ndarray) -> np.ndarray:
    """Minibatch oracle on an explicit set of distinct row indices (regularizer added in full)."""
    x = _check_point(obj, x)
    shard = _check_client(obj, client)
    rows = np.sort(np.asarray(indices, dtype=np.int64))
    if rows.size == 0 or rows[0] < 0 or rows[-1] >= shard.n_samples or np.any(np.diff(rows) == 0):
        raise ContractViolation(f"batch indices must be distinct rows of client {client}")
    grad = _data_grad(obj, shard, x, rows)
    if obj.lam:
        grad = grad + nonconvex_penalty_grad(x, obj.lam)
    return grad


def sample_batch(obj: Objective, client: int, batch_size: int, rng: RandomStream) -> np.ndarray:
    """Uniform batch of ``batch_size`` rows drawn without replacement, sorted."""
    shard = _check_client(obj, client)
    if not 1 <= batch_size <= shard.n_samples:
        raise ContractViolation(
            f"batch size {batch_size} out of range [1, {shard.n_samples}] for client {client}"
        )
    if batch_size == shard.n_samples:
        return np.arange(shard.n_samples)
    return np.sort(rng.choice(shard.n_samples, size=batch_size, replace=False))


def stoch_grad(obj: Objective, x: np.ndarray, client: int, batch_size: int, rng: RandomStream) -> np.ndarray:
    """Unbiased minibatch estimate of ``grad f_i(x)``."""
    return batch_grad(obj, x, client, sample_batch(obj, client, batch_size, rng))


def batch_grad_diff_on(
    obj: Objective,
    x_new: np.ndarray,
    x_old: np.ndarray,
    client: int,
    indices: Sequence[int] | np.ndarray,
) -> np.ndarray:
    return batch_grad(obj, x_new, client, indices) - batch_grad(obj, x_old, client, indices)


def batch_grad_diff(
    obj: Objective,
    x_new: np.ndarray,
    x_old: np.ndarray,
    client: int,
    batch_size: int,
    rng: RandomStream,
) -> np.ndarray:
    """Gradient difference on one sampled batch shared by both points."""
    indices = sample_batch(obj, client, batch_size, rng)
    return batch_grad_diff_on(obj, x_new, x_old, client, indices)


def sample_smoothness(obj: Objective, client: int) -> np.ndarray:
    """Per-sample smoothness constants ``L_ij`` of client ``client``."""
    shard = _check_client(obj, client)
    row_norms_sq = np.einsum("ij,ij->i", shard.features, shard.features)
    if obj.kind == ObjectiveKind.LOGISTIC_NONCONVEX:
        return row_norms_sq / 4.0 + 2.0 * obj.lam
    if obj.kind == ObjectiveKind.LEAST_SQUARES:
        return 2.0 * row_norms_sq
    return row_norms_sq


__all__ = [
    "ClientShard",
    "Objective",
    "ObjectiveKind",
    "batch_grad",
    "batch_grad_diff",
    "batch_grad_diff_on",
    "client_loss",
    "full_grad",
    "full_objective_grad",
    "loss",
    "nonconvex_penalty",
    "nonconvex_penalty_grad",
    "ordered_mean",
    "sample_batch",
    "sample_smoothness",
    "stoch_grad",
]
