"""Full versioned record: header, terminal status, halt reason and rows with raw totals."""

from __future__ import annotations

from ef21sim.plugins.outputs.file_sink import FileRecordSink


class JsonRecordSink(FileRecordSink):
    fmt = "json"
