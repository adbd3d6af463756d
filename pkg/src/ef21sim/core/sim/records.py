"""Run records: header, recorded rows and terminal status."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any


class RunStatus(StrEnum):
    CONVERGED = "Converged"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class RecordRow:
    """Diagnostics at ``x^t`` with raw costs.

    Cumulative totals cover rounds ``0 .. t-1``; ``bits_up``/``bits_down`` are the
    raw costs of round ``t`` itself (zero for a terminal observation).
    """

    t: int
    f: float
    grad_norm_sq: float
    G_t: float
    bits_up_total: int
    bits_down_total: int
    epochs_cum: float
    lyapunov: float | None = None
    bits_up: int = 0
    bits_down: int = 0


@dataclass
class RunRecord:
    header: dict[str, Any]
    rows: list[RecordRow] = field(default_factory=list)
    status: RunStatus = RunStatus.BUDGET_EXHAUSTED
    halt_reason: dict[str, Any] | None = None

    @property
    def n_clients(self) -> int:
        return int(self.header.get("n", 1))

    @property
    def last_row(self) -> RecordRow | None:
        return self.rows[-1] if self.rows else None

    @property
    def rounds(self) -> int:
        return self.rows[-1].t if self.rows else 0

    @property
    def converged(self) -> bool:
        return self.status == RunStatus.CONVERGED


__all__ = ["RecordRow", "RunRecord", "RunStatus"]
