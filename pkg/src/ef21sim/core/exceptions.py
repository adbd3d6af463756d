"""Custom exceptions for the simulator."""

from __future__ import annotations


class SimulationError(RuntimeError):
    """Base class for simulator failures."""


class ContractViolation(SimulationError, ValueError):
    """Raised when an operation receives inputs outside its contract (shape, range)."""


class ParameterError(SimulationError, ValueError):
    """Raised when a method or theory parameter is inadmissible."""

    def __init__(self, message: str, *, name: str | None = None):
        super().__init__(message)
        self.name = name


class ParseError(SimulationError, ValueError):
    """Base class for LibSVM parse failures."""

    def __init__(self, message: str, *, line: int | None = None):
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)
        self.line = line


class MalformedTokenError(ParseError):
    """A token could not be read as a label or ``index:value`` pair."""


class NonPositiveIndexError(ParseError):
    """A feature index was zero or negative."""


class NonIncreasingIndexError(ParseError):
    """Feature indices within a line were not strictly increasing."""


class EmptyDatasetError(ParseError):
    """The input contained no data rows."""


class DivergenceError(SimulationError):
    """Raised when the iterate or a gradient becomes non-finite."""

    def __init__(self, message: str, *, round_index: int):
        super().__init__(message)
        self.round_index = round_index


class UnsupportedVariantError(SimulationError):
    """Raised when a diagnostic is not defined for the requested method variant."""

    def __init__(self, message: str, *, variant: str | None = None):
        super().__init__(message)
        self.variant = variant


class TuningError(SimulationError):
    """Raised when a stepsize grid yields no usable run."""


__all__ = [
    "ContractViolation",
    "DivergenceError",
    "EmptyDatasetError",
    "MalformedTokenError",
    "NonIncreasingIndexError",
    "NonPositiveIndexError",
    "ParameterError",
    "ParseError",
    "SimulationError",
    "TuningError",
    "UnsupportedVariantError",
]
