"""Per-round table with the normalized record columns."""

from __future__ import annotations

from ef21sim.plugins.outputs.file_sink import FileRecordSink


class CsvRecordSink(FileRecordSink):
    fmt = "csv"
