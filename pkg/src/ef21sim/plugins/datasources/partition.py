"""Contiguous partitioning of a dataset among simulated clients."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.problems import ClientShard

if TYPE_CHECKING:
    from ef21sim.plugins.datasources.libsvm import RawDataset

logger = logging.getLogger(__name__)


def shard_sizes(N: int, n: int) -> list[int]:
    """First ``n - 1`` clients get ``N // n`` rows, the last one the rest."""
    if n < 1:
        raise ContractViolation(f"number of clients must be positive, got {n}")
    if n > N:
        raise ContractViolation(f"cannot split {N} rows among {n} clients")
    base = N // n
    return [base] * (n - 1) + [N - base * (n - 1)]


def labels_to_signs(labels: np.ndarray) -> np.ndarray:
    """Map a two-valued label vector onto ``{-1, +1}``: smaller value to -1, larger to +1."""
    labels = np.asarray(labels, dtype=float)
    values = np.unique(labels)
    if set(values.tolist()) <= {-1.0, 1.0}:
        return labels.copy()
    if len(values) > 2:
        raise ContractViolation(f"binary labels expected, found {len(values)} distinct values")
    logger.warning("Remapping labels %s onto {-1, +1}", values.tolist())
    signs = np.where(labels == values[0], -1.0, 1.0)
    return signs


def dense_matrix(raw: RawDataset, dimension: int) -> np.ndarray:
    matrix = np.zeros((raw.n_rows, dimension))
    for row_index, row in enumerate(raw.rows):
        for index, value in row.features:
            matrix[row_index, index - 1] = value
    return matrix


def max_abs_scale(matrix: np.ndarray) -> np.ndarray:
    """Divide each column by its largest magnitude; all-zero columns stay as they are."""
    peaks = np.max(np.abs(matrix), axis=0)
    peaks[peaks == 0.0] = 1.0
    return matrix / peaks


def partition(
    raw: RawDataset,
    n: int,
    *,
    dimension: int | None = None,
    scale_features: bool = False,
    remap_labels: bool = True,
) -> list[ClientShard]:
    """Split rows in file order into ``n`` contiguous shards at a common dimension."""
    sizes = shard_sizes(raw.n_rows, n)
    d = raw.inferred_dim if dimension is None else dimension
    if d < raw.inferred_dim:
        raise ContractViolation(f"forced dimension {d} is below the inferred dimension {raw.inferred_dim}")
    if d < 1:
        raise ContractViolation("dataset has no features; force a dimension")

    features = dense_matrix(raw, d)
    if scale_features:
        features = max_abs_scale(features)
    labels = np.array([row.label for row in raw.rows])
    if remap_labels:
        labels = labels_to_signs(labels)

    shards: list[ClientShard] = []
    start = 0
    for size in sizes:
        stop = start + size
        shards.append(ClientShard(features=features[start:stop], labels=labels[start:stop]))
        start = stop
    return shards


__all__ = ["dense_matrix", "labels_to_signs", "max_abs_scale", "partition", "shard_sizes"]
