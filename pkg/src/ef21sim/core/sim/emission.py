"""CSV/JSON emission of run records and the per-run output layout."""

from __future__ import annotations

import hashlib
import io
import json
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Any

import pandas as pd

from ef21sim.core.sim.records import RecordRow, RunRecord, RunStatus

if TYPE_CHECKING:
    from ef21sim.core.registry import PluginRegistry

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("t", "f", "grad_norm_sq", "G_t", "bits_up_cum", "bits_down_cum", "epochs_cum", "lyapunov")
FORMATS = ("csv", "json")
RECORD_BASENAME = "record"


def normalized_row(row: RecordRow, n_clients: int) -> dict[str, Any]:
    """A row in the emitted schema: cumulative bits are reported per client."""
    return {
        "t": row.t,
        "f": row.f,
        "grad_norm_sq": row.grad_norm_sq,
        "G_t": row.G_t,
        "bits_up_cum": row.bits_up_total / n_clients,
        "bits_down_cum": row.bits_down_total / n_clients,
        "epochs_cum": row.epochs_cum,
        "lyapunov": row.lyapunov,
    }


def record_frame(record: RunRecord) -> pd.DataFrame:
    rows = [normalized_row(row, record.n_clients) for row in record.rows]
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS))


def record_to_payload(record: RunRecord) -> dict[str, Any]:
    rows = []
    for row in record.rows:
        entry = normalized_row(row, record.n_clients)
        entry.update(
            bits_up_total=row.bits_up_total,
            bits_down_total=row.bits_down_total,
            bits_up_round=row.bits_up,
            bits_down_round=row.bits_down,
        )
        rows.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "status": str(record.status),
        "halt_reason": record.halt_reason,
        "header": record.header,
        "columns": list(CSV_COLUMNS),
        "rows": rows,
    }


def emit(record: RunRecord, fmt: str = "csv") -> bytes:
    """Serialize ``record`` as CSV (header row first) or JSON."""
    if fmt == "csv":
        buffer = io.StringIO()
        record_frame(record).to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue().encode("utf-8")
    if fmt == "json":
        return (json.dumps(record_to_payload(record), sort_keys=True, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"Unsupported emission format '{fmt}'")


def parse_record(data: bytes | str) -> RunRecord:
    """Rebuild a record from its JSON emission."""
    payload = json.loads(data)
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"Unsupported record schema_version {version!r}")
    rows = [
        RecordRow(
            t=int(entry["t"]),
            f=float(entry["f"]),
            grad_norm_sq=float(entry["grad_norm_sq"]),
            G_t=float(entry["G_t"]),
            bits_up_total=int(entry["bits_up_total"]),
            bits_down_total=int(entry["bits_down_total"]),
            epochs_cum=float(entry["epochs_cum"]),
            lyapunov=None if entry.get("lyapunov") is None else float(entry["lyapunov"]),
            bits_up=int(entry.get("bits_up_round", 0)),
            bits_down=int(entry.get("bits_down_round", 0)),
        )
        for entry in payload.get("rows", [])
    ]
    return RunRecord(
        header=payload.get("header") or {},
        rows=rows,
        status=RunStatus(payload["status"]),
        halt_reason=payload.get("halt_reason"),
    )


def config_digest(settings: Mapping[str, Any]) -> str:
    encoded = json.dumps(settings, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(encoded).hexdigest()[:12]


def run_directory(base: str | Path, settings: Mapping[str, Any]) -> Path:
    """``<base>/<content hash of the resolved settings>``."""
    return Path(base) / config_digest(settings)


def write_run(
    record: RunRecord,
    directory: str | Path,
    formats: Sequence[str] = FORMATS,
    *,
    registry: PluginRegistry | None = None,
) -> dict[str, Path]:
    """Write ``record.<fmt>`` files into ``directory`` through the registered sinks."""
    if registry is None:
        from ef21sim.core.registry import registry as default_registry

        registry = default_registry
    target = Path(directory)
    written: dict[str, Path] = {}
    for fmt in formats:
        path = target / f"{RECORD_BASENAME}.{fmt}"
        sink = registry.create_sink(fmt, {"path": str(path)})
        sink.write(record, metadata={"format": fmt})
        written[fmt] = path
    return written


__all__ = [
    "CSV_COLUMNS",
    "FORMATS",
    "SCHEMA_VERSION",
    "config_digest",
    "emit",
    "normalized_row",
    "parse_record",
    "record_frame",
    "record_to_payload",
    "run_directory",
    "write_run",
]
