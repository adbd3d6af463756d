"""Per-run master and worker state, and the per-round diagnostics report."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MethodState:
    """Iterate plus the error-feedback shifts held by workers and master.

    For bidirectional compression ``g_i`` holds the worker shifts whose mean is
    ``g_tilde``; ``g`` is the master's copy of the broadcast estimate and
    ``g_worker`` the copy every worker keeps.
    """

    x: np.ndarray
    g_i: list[np.ndarray]
    g: np.ndarray
    round_index: int = 0
    v_i: list[np.ndarray] | None = None
    g_tilde: np.ndarray | None = None
    g_worker: np.ndarray | None = None
    momentum: np.ndarray | None = None

    @property
    def n_workers(self) -> int:
        return len(self.g_i)

    def copy(self) -> MethodState:
        def _dup(value: np.ndarray | None) -> np.ndarray | None:
            return None if value is None else value.copy()

        return MethodState(
            x=self.x.copy(),
            g_i=[shift.copy() for shift in self.g_i],
            g=self.g.copy(),
            round_index=self.round_index,
            v_i=None if self.v_i is None else [v.copy() for v in self.v_i],
            g_tilde=_dup(self.g_tilde),
            g_worker=_dup(self.g_worker),
            momentum=_dup(self.momentum),
        )


@dataclass(frozen=True)
class RoundReport:
    """Diagnostics at ``x^t`` and the costs of the round that leaves it.

    ``step_norm_sq`` is ``|x^{t+1} - x^t|^2``; it is ``None`` for observation-only reports.
    """

    t: int
    f: float
    grad_norm_sq: float
    G_t: float
    bits_up: int = 0
    bits_down: int = 0
    grad_evals: tuple[int, ...] = field(default_factory=tuple)
    lyapunov: float | None = None
    step_norm_sq: float | None = None


__all__ = ["MethodState", "RoundReport"]
