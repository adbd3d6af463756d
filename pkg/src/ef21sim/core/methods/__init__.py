"""Error-feedback method engines."""

from .config import InitKind, MethodConfig, Variant
from .engine import (
    epoch_count,
    init_state,
    lyapunov,
    lyapunov_value,
    observe,
    shift_consistency_error,
    step,
)
from .state import MethodState, RoundReport

__all__ = [
    "InitKind",
    "MethodConfig",
    "MethodState",
    "RoundReport",
    "Variant",
    "epoch_count",
    "init_state",
    "lyapunov",
    "lyapunov_value",
    "observe",
    "shift_consistency_error",
    "step",
]
