"""Shared file handling for the record sinks."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, ClassVar

from ef21sim.core.sim.emission import emit
from ef21sim.core.sim.records import RunRecord

logger = logging.getLogger(__name__)

ON_ERROR_POLICIES = ("abort", "skip")


class FileRecordSink:
    """Writes :func:`emit` output for ``fmt`` to ``path``.

    ``overwrite=False`` refuses an existing file. With ``on_error="skip"`` any write
    failure is logged and swallowed; ``"abort"`` re-raises it.
    """

    fmt: ClassVar[str]

    def __init__(self, *, path: str, overwrite: bool = True, on_error: str = "abort"):
        if on_error not in ON_ERROR_POLICIES:
            raise ValueError(f"on_error must be one of {ON_ERROR_POLICIES}, got {on_error!r}")
        self.path = Path(path)
        self.overwrite = overwrite
        self.on_error = on_error
        self.last_written_path: str | None = None

    def write(self, record: RunRecord, *, metadata: dict[str, Any] | None = None) -> None:
        try:
            if not self.overwrite and self.path.exists():
                raise FileExistsError(f"{self.fmt} sink destination exists: {self.path}")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_bytes(emit(record, self.fmt))
        except Exception as exc:
            if self.on_error == "abort":
                raise
            logger.warning("Skipped %s record at %s: %s", self.fmt, self.path, exc)
            return
        self.last_written_path = str(self.path)
        logger.info("Wrote %s record (%d rows, %s) to %s", self.fmt, len(record.rows), record.status, self.path)
