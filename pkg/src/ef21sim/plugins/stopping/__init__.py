"""Halt-condition plugins (registered on import)."""

from .thresholds import EpochBudgetHalt, GradNormToleranceHalt, ThresholdHaltPlugin

__all__ = ["EpochBudgetHalt", "GradNormToleranceHalt", "ThresholdHaltPlugin"]
