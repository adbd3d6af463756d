"""Prox-friendly regularizers and the generalized gradient mapping."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from ef21sim.core.exceptions import ContractViolation
from ef21sim.core.problems.objectives import Objective, full_objective_grad


class RegularizerKind(StrEnum):
    NONE = "none"
    L1 = "l1"
    BOX = "box"


@dataclass(frozen=True)
class Regularizer:
    kind: RegularizerKind = RegularizerKind.NONE
    weight: float | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RegularizerKind(self.kind))
        if self.kind == RegularizerKind.L1 and (self.weight is None or self.weight <= 0):
            raise ContractViolation(f"l1 weight must be positive, got {self.weight}")
        if self.kind == RegularizerKind.BOX and (self.lo is None or self.hi is None or not self.lo < self.hi):
            raise ContractViolation(f"box bounds need lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def none(cls) -> Regularizer:
        return cls()

    @classmethod
    def l1(cls, weight: float) -> Regularizer:
        return cls(RegularizerKind.L1, weight=weight)

    @classmethod
    def box(cls, lo: float, hi: float) -> Regularizer:
        return cls(RegularizerKind.BOX, lo=lo, hi=hi)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> Regularizer:
        if not data:
            return cls.none()
        return cls(
            kind=RegularizerKind(data.get("kind", "none")),
            weight=data.get("weight"),
            lo=data.get("lo"),
            hi=data.get("hi"),
        )

    @property
    def is_none(self) -> bool:
        return self.kind == RegularizerKind.NONE

    def describe(self) -> str:
        if self.kind == RegularizerKind.L1:
            return f"l1({self.weight})"
        if self.kind == RegularizerKind.BOX:
            return f"box({self.lo}, {self.hi})"
        return "none"


def prox(reg: Regularizer, x: np.ndarray, gamma: float) -> np.ndarray:
    """``argmin_y r(y) + |y - x|^2 / (2 gamma)``."""
    if gamma <= 0:
        raise ContractViolation(f"prox requires gamma > 0, got {gamma}")
    x = np.asarray(x, dtype=float)
    if reg.kind == RegularizerKind.L1:
        assert reg.weight is not None
        threshold = gamma * reg.weight
        return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)
    if reg.kind == RegularizerKind.BOX:
        return np.clip(x, reg.lo, reg.hi)
    return x


def project_domain(reg: Regularizer, x: np.ndarray) -> np.ndarray:
    """Nearest point of the regularizer's domain; only the box restricts it."""
    x = np.asarray(x, dtype=float)
    if reg.kind == RegularizerKind.BOX:
        return np.clip(x, reg.lo, reg.hi)
    return x


def regularizer_value(reg: Regularizer, x: np.ndarray) -> float:
    if reg.kind == RegularizerKind.L1:
        assert reg.weight is not None
        return float(reg.weight * np.sum(np.abs(x)))
    if reg.kind == RegularizerKind.BOX:
        inside = np.all((x >= reg.lo) & (x <= reg.hi))
        return 0.0 if inside else float("inf")
    return 0.0


def gradient_mapping(obj: Objective, reg: Regularizer, x: np.ndarray, gamma: float) -> np.ndarray:
    """``G_gamma(x) = (x - prox(x - gamma grad f(x))) / gamma``; plain ``grad f`` without a regularizer."""
    grad = full_objective_grad(obj, x)
    return mapping_from_grad(reg, x, grad, gamma)


def mapping_from_grad(reg: Regularizer, x: np.ndarray, grad: np.ndarray, gamma: float) -> np.ndarray:
    """Gradient mapping from a known ``grad f(x)``; ``gamma == 0`` gives its limit as gamma shrinks."""
    if reg.is_none:
        return grad
    x = np.asarray(x, dtype=float)
    if gamma == 0:
        return _mapping_limit(reg, x, np.asarray(grad, dtype=float))
    return (x - prox(reg, x - gamma * grad, gamma)) / gamma


def _mapping_limit(reg: Regularizer, x: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if reg.kind == RegularizerKind.L1:
        assert reg.weight is not None
        at_zero = np.sign(grad) * np.maximum(np.abs(grad) - reg.weight, 0.0)
        return np.where(x == 0, at_zero, grad + reg.weight * np.sign(x))
    # Box: the projected gradient; components pushing out of an active bound vanish.
    blocked = ((x <= reg.lo) & (grad > 0)) | ((x >= reg.hi) & (grad < 0))
    return np.where(blocked, 0.0, grad)


__all__ = [
    "Regularizer",
    "RegularizerKind",
    "gradient_mapping",
    "mapping_from_grad",
    "project_domain",
    "prox",
    "regularizer_value",
]
