"""Counter-based random streams.

Every stream is a ``numpy.random.Generator`` over a Philox bit generator whose
seed sequence is keyed by ``(root seed, role, index)``. Streams for different
roles and workers are independent, so a method that never draws from a role
leaves every other stream untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

RandomStream = np.random.Generator


class StreamRole(IntEnum):
    COMPRESS = 0
    SAMPLE = 1
    COIN = 2
    MASTER = 3
    SYNTHETIC = 4
    DIAGNOSTIC = 5


class MasterSlot(IntEnum):
    PARTICIPATION = 0
    SHARED_COIN = 1
    COMPRESS = 2


def derive_stream(seed: int, *key: int) -> RandomStream:
    """Return the generator for ``seed`` and the counter ``key``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def bernoulli(rng: RandomStream, prob: float) -> bool:
    """Draw one coin; ``prob == 1`` never touches the stream."""
    if prob >= 1.0:
        return True
    if prob <= 0.0:
        return False
    return bool(rng.random() < prob)


@dataclass
class RandomStreams:
    """All streams used by one simulated run."""

    seed: int
    compress: list[RandomStream]
    sample: list[RandomStream]
    coin: list[RandomStream]
    participation: RandomStream
    shared_coin: RandomStream
    master_compress: RandomStream

    @classmethod
    def from_seed(cls, seed: int, n_workers: int) -> RandomStreams:
        return cls(
            seed=seed,
            compress=[derive_stream(seed, StreamRole.COMPRESS, i) for i in range(n_workers)],
            sample=[derive_stream(seed, StreamRole.SAMPLE, i) for i in range(n_workers)],
            coin=[derive_stream(seed, StreamRole.COIN, i) for i in range(n_workers)],
            participation=derive_stream(seed, StreamRole.MASTER, MasterSlot.PARTICIPATION),
            shared_coin=derive_stream(seed, StreamRole.MASTER, MasterSlot.SHARED_COIN),
            master_compress=derive_stream(seed, StreamRole.MASTER, MasterSlot.COMPRESS),
        )

    @property
    def n_workers(self) -> int:
        return len(self.compress)


__all__ = [
    "MasterSlot",
    "RandomStream",
    "RandomStreams",
    "StreamRole",
    "bernoulli",
    "derive_stream",
]
