"""Contractive and unbiased compression operators with exact bit accounting."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from ef21sim.core.exceptions import ContractViolation, ParameterError
from ef21sim.core.randomness import RandomStream

DEFAULT_VALUE_BITS = 64


class CompressorKind(StrEnum):
    IDENTITY = "identity"
    TOP_K = "top_k"
    RAND_K = "rand_k"
    SCALE = "scale"


def default_index_bits(dimension: int) -> int:
    return max(1, math.ceil(math.log2(dimension)))


@dataclass(frozen=True)
class CompressorSpec:
    """Compressor kind, dimension and wire encoding.

    ``index_bits`` defaults to ``ceil(log2 d)`` (at least one bit).
    """

    kind: CompressorKind
    dimension: int
    k: int | None = None
    factor: float | None = None
    value_bits: int = DEFAULT_VALUE_BITS
    index_bits: int = field(default=0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CompressorKind(self.kind))
        if self.dimension < 1:
            raise ParameterError(f"compressor dimension must be positive, got {self.dimension}", name="dimension")
        if self.kind in (CompressorKind.TOP_K, CompressorKind.RAND_K):
            if self.k is None or not 1 <= self.k <= self.dimension:
                raise ParameterError(
                    f"{self.kind} requires 1 <= k <= d (k={self.k}, d={self.dimension})", name="k"
                )
        if self.kind == CompressorKind.SCALE and (self.factor is None or not 0.0 < self.factor <= 1.0):
            raise ParameterError(f"scale factor must lie in (0, 1], got {self.factor}", name="factor")
        if self.value_bits < 1:
            raise ParameterError("value_bits must be positive", name="value_bits")
        if not self.index_bits:
            object.__setattr__(self, "index_bits", default_index_bits(self.dimension))
        elif self.index_bits < 1:
            raise ParameterError("index_bits must be positive", name="index_bits")

    @classmethod
    def identity(cls, dimension: int, **encoding: int) -> CompressorSpec:
        return cls(CompressorKind.IDENTITY, dimension, **encoding)

    @classmethod
    def top_k(cls, dimension: int, k: int, **encoding: int) -> CompressorSpec:
        return cls(CompressorKind.TOP_K, dimension, k=k, **encoding)

    @classmethod
    def rand_k(cls, dimension: int, k: int, **encoding: int) -> CompressorSpec:
        return cls(CompressorKind.RAND_K, dimension, k=k, **encoding)

    @classmethod
    def scale(cls, dimension: int, factor: float, **encoding: int) -> CompressorSpec:
        return cls(CompressorKind.SCALE, dimension, factor=factor, **encoding)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], dimension: int) -> CompressorSpec:
        """Build from the run-config form ``{kind, k | ratio, factor, value_bits, index_bits}``."""
        k = data.get("k")
        ratio = data.get("ratio")
        if k is None and ratio is not None:
            k = min(dimension, max(1, math.ceil(ratio * dimension)))
        return cls(
            kind=CompressorKind(data["kind"]),
            dimension=dimension,
            k=k,
            factor=data.get("factor"),
            value_bits=data.get("value_bits") or DEFAULT_VALUE_BITS,
            index_bits=data.get("index_bits") or 0,
        )

    def to_mapping(self) -> dict[str, Any]:
        return {
            "kind": str(self.kind),
            "k": self.k,
            "factor": self.factor,
            "value_bits": self.value_bits,
            "index_bits": self.index_bits,
        }

    @property
    def is_sparse(self) -> bool:
        return self.kind in (CompressorKind.TOP_K, CompressorKind.RAND_K)

    @property
    def is_randomized(self) -> bool:
        return self.kind == CompressorKind.RAND_K

    def describe(self) -> str:
        if self.kind in (CompressorKind.TOP_K, CompressorKind.RAND_K):
            return f"{self.kind}(k={self.k})"
        if self.kind == CompressorKind.SCALE:
            return f"scale({self.factor})"
        return str(self.kind)


@dataclass(frozen=True, eq=False)
class CompressedDelta:
    """Sparse payload: strictly increasing 0-based indices, their values, and the wire cost."""

    indices: np.ndarray
    values: np.ndarray
    bit_cost: int
    source_dim: int

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.source_dim)
        out[self.indices] = self.values
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompressedDelta):
            return NotImplemented
        return (
            self.bit_cost == other.bit_cost
            and self.source_dim == other.source_dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


def _payload_bits(spec: CompressorSpec, entries: int) -> int:
    if spec.is_sparse:
        return entries * (spec.value_bits + spec.index_bits)
    return spec.dimension * spec.value_bits


def compress(spec: CompressorSpec, x: np.ndarray, rng: RandomStream | None = None) -> CompressedDelta:
    """Apply the compressor to ``x``; only randomized kinds consume ``rng``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != spec.dimension:
        raise ContractViolation(f"expected a vector of dimension {spec.dimension}, got shape {x.shape}")

    d = spec.dimension
    if spec.kind == CompressorKind.TOP_K:
        assert spec.k is not None
        # stable sort on -|x| keeps the lowest index first among ties
        chosen = np.argsort(-np.abs(x), kind="stable")[: spec.k]
        indices = np.sort(chosen)
        values = x[indices].copy()
    elif spec.kind == CompressorKind.RAND_K:
        assert spec.k is not None
        if rng is None:
            raise ContractViolation("rand_k compression requires a random stream")
        indices = np.sort(rng.choice(d, size=spec.k, replace=False))
        scale = (d / spec.k) / (1.0 + omega_of(spec))
        values = scale * x[indices]
    elif spec.kind == CompressorKind.SCALE:
        assert spec.factor is not None
        indices = np.arange(d)
        values = spec.factor * x
    else:
        indices = np.arange(d)
        values = x.copy()

    return CompressedDelta(
        indices=indices.astype(np.int64),
        values=values,
        bit_cost=_payload_bits(spec, len(indices)),
        source_dim=d,
    )


def decompress(delta: CompressedDelta) -> np.ndarray:
    return delta.to_dense()


def alpha_of(spec: CompressorSpec) -> float:
    if spec.kind in (CompressorKind.TOP_K, CompressorKind.RAND_K):
        assert spec.k is not None
        return spec.k / spec.dimension
    if spec.kind == CompressorKind.SCALE:
        assert spec.factor is not None
        return 1.0 - (1.0 - spec.factor) ** 2
    return 1.0


def omega_of(spec: CompressorSpec) -> float:
    """Variance parameter of the unbiased family; zero for everything else."""
    if spec.kind == CompressorKind.RAND_K:
        assert spec.k is not None
        return spec.dimension / spec.k - 1.0
    return 0.0


def is_lossless(spec: CompressorSpec) -> bool:
    return alpha_of(spec) == 1.0


def contraction_samples(
    spec: CompressorSpec,
    trials: int,
    d: int,
    rng: RandomStream,
    *,
    inner_draws: int = 1,
) -> np.ndarray:
    """Per-trial ratios ``|C(x) - x|^2 / |x|^2`` over standard Gaussian ``x``.

    Randomized kinds average ``inner_draws`` compressions of each ``x``.
    """
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    if d != spec.dimension:
        raise ContractViolation(f"dimension {d} does not match compressor dimension {spec.dimension}")
    draws = inner_draws if spec.is_randomized else 1
    ratios = np.empty(trials)
    for trial in range(trials):
        x = rng.standard_normal(d)
        norm_sq = float(x @ x)
        total = 0.0
        for _ in range(draws):
            residual = decompress(compress(spec, x, rng)) - x
            total += float(residual @ residual)
        ratios[trial] = total / draws / norm_sq
    return ratios


def estimate_contraction(
    spec: CompressorSpec,
    trials: int,
    d: int,
    rng: RandomStream,
    *,
    inner_draws: int = 1,
) -> float:
    """Empirical contraction factor.

    Deterministic kinds report the worst ratio over the sampled vectors (the bound
    holds pointwise). Randomized kinds report the mean ratio, an estimate of the
    expectation in the contraction inequality.
    """
    ratios = contraction_samples(spec, trials, d, rng, inner_draws=inner_draws)
    if spec.is_randomized:
        return float(ratios.mean())
    return float(ratios.max())


def shift_update(shift: np.ndarray, target: np.ndarray, delta: CompressedDelta, lossless: bool) -> np.ndarray:
    """Error-feedback update ``shift + C(target - shift)``.

    A lossless compressor reproduces ``target`` exactly instead of accumulating rounding.
    """
    if lossless:
        return target.copy()
    updated = shift.copy()
    updated[delta.indices] += delta.values
    return updated


__all__ = [
    "DEFAULT_VALUE_BITS",
    "CompressedDelta",
    "CompressorKind",
    "CompressorSpec",
    "alpha_of",
    "compress",
    "contraction_samples",
    "decompress",
    "default_index_bits",
    "estimate_contraction",
    "is_lossless",
    "omega_of",
    "shift_update",
]
