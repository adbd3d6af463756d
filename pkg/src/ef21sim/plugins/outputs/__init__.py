"""Record sinks."""

from .csv_file import CsvRecordSink
from .json_file import JsonRecordSink

__all__ = ["CsvRecordSink", "JsonRecordSink"]
