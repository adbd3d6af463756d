"""Core simulation components for ef21-sim."""

from .interfaces import DataSource, RecordSink

__all__ = [
    "DataSource",
    "RecordSink",
]
