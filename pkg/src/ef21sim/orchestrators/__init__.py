"""Orchestrators built on top of the single-run harness."""

from .tuning import DEFAULT_MULTIPLIERS, TuningResult, select_best, tune, write_tuning
from .verification import SUITES, CheckResult, VerificationReport, run_suites

__all__ = [
    "DEFAULT_MULTIPLIERS",
    "SUITES",
    "CheckResult",
    "TuningResult",
    "VerificationReport",
    "run_suites",
    "select_best",
    "tune",
    "write_tuning",
]
