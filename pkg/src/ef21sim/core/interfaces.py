"""Interfaces defining key plugin contracts."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Protocol, runtime_checkable

if TYPE_CHECKING:
    from ef21sim.core.problems import Objective
    from ef21sim.core.sim.records import RunRecord


@runtime_checkable
class DataSource(Protocol):
    """Builds the client-partitioned objective a run optimizes."""

    def load(self) -> Objective:
        ...


@runtime_checkable
class RecordSink(Protocol):
    """Receives a finished run record and persists it externally."""

    def write(self, record: RunRecord, *, metadata: dict[str, Any] | None = None) -> None:
        ...


__all__ = ["DataSource", "RecordSink"]
