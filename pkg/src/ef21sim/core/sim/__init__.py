"""Experiment harness: run loop, halting, records and emission."""

from .early_stop import EarlyStopCoordinator
from .emission import CSV_COLUMNS, SCHEMA_VERSION, emit, parse_record, run_directory, write_run
from .records import RecordRow, RunRecord, RunStatus
from .runner import RunConfig, StepsizeMode, StepsizeRule, resolve_theory, run

__all__ = [
    "CSV_COLUMNS",
    "SCHEMA_VERSION",
    "EarlyStopCoordinator",
    "RecordRow",
    "RunConfig",
    "RunRecord",
    "RunStatus",
    "StepsizeMode",
    "StepsizeRule",
    "emit",
    "parse_record",
    "resolve_theory",
    "run",
    "run_directory",
    "write_run",
]
