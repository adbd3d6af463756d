"""Built-in halt conditions: metric thresholds, convergence tolerance, epoch budget."""

from __future__ import annotations

import operator
from collections.abc import Callable, Mapping
from typing import Any

from ef21sim.core.sim.plugin_registry import register_halt_condition_plugin

COMPARATORS: dict[str, Callable[[float, float], bool]] = {
    "gte": operator.ge,
    "gt": operator.gt,
    "lte": operator.le,
    "lt": operator.lt,
}


def _lookup(metrics: Mapping[str, Any], dotted: str) -> float | None:
    node: Any = metrics
    for key in dotted.split("."):
        if not isinstance(node, Mapping) or key not in node:
            return None
        node = node[key]
    try:
        return None if node is None else float(node)
    except (TypeError, ValueError):
        return None


class ThresholdHaltPlugin:
    """Halts once ``metrics[metric]`` compares true against ``threshold``.

    Rows where the metric is absent or not numeric are skipped and do not count
    toward ``min_rounds``. After firing, the plugin keeps returning the same reason
    until :meth:`reset`.
    """

    name = "threshold"

    def __init__(
        self,
        *,
        metric: str,
        threshold: Any,
        comparison: str = "gte",
        min_rounds: int = 1,
        label: str | None = None,
    ) -> None:
        if not metric:
            raise ValueError("Threshold halt condition requires a 'metric' path")
        try:
            self.threshold = float(threshold)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"Invalid threshold value {threshold!r}") from exc
        self.comparison = str(comparison or "gte").lower()
        if self.comparison not in COMPARATORS:
            raise ValueError(f"comparison must be one of {sorted(COMPARATORS)}, got {comparison!r}")
        self.metric = metric
        self.min_rounds = max(int(min_rounds or 1), 1)
        self.label = label
        self.reset()

    def reset(self) -> None:
        self._seen = 0
        self._fired: dict[str, Any] | None = None

    def check(self, record: dict[str, Any], *, metadata: dict[str, Any] | None = None) -> dict[str, Any] | None:
        if self._fired is not None:
            return dict(self._fired)
        value = _lookup(record.get("metrics") or {}, self.metric)
        if value is None:
            return None
        self._seen += 1
        if self._seen < self.min_rounds or not COMPARATORS[self.comparison](value, self.threshold):
            return None

        self._fired = {
            **(metadata or {}),
            "metric": self.metric,
            "comparison": self.comparison,
            "threshold": self.threshold,
            "value": value,
            "rounds_observed": self._seen,
        }
        if self.label:
            self._fired["label"] = self.label
        return dict(self._fired)


class GradNormToleranceHalt(ThresholdHaltPlugin):
    """Converged once the squared stationarity measure drops to the tolerance."""

    name = "grad_norm_tolerance"

    def __init__(self, *, tolerance: float = 1e-7) -> None:
        super().__init__(metric="grad_norm_sq", threshold=tolerance, comparison="lte", label="converged")


class EpochBudgetHalt(ThresholdHaltPlugin):
    name = "epoch_budget"

    def __init__(self, *, max_epochs: float) -> None:
        super().__init__(metric="epochs_cum", threshold=max_epochs, comparison="gte", label="epoch_budget")


def _options_schema(properties: dict[str, Any], *required: str) -> dict[str, Any]:
    return {"type": "object", "properties": properties, "required": list(required), "additionalProperties": False}


register_halt_condition_plugin(
    ThresholdHaltPlugin.name,
    lambda options: ThresholdHaltPlugin(**options),
    schema=_options_schema(
        {
            "metric": {"type": "string"},
            "threshold": {"type": ["number", "string"]},
            "comparison": {"type": "string", "enum": sorted(COMPARATORS)},
            "min_rounds": {"type": "integer", "minimum": 1},
            "label": {"type": "string"},
        },
        "metric",
        "threshold",
    ),
)
register_halt_condition_plugin(
    GradNormToleranceHalt.name,
    lambda options: GradNormToleranceHalt(**options),
    schema=_options_schema({"tolerance": {"type": "number", "minimum": 0}}),
)
register_halt_condition_plugin(
    EpochBudgetHalt.name,
    lambda options: EpochBudgetHalt(**options),
    schema=_options_schema({"max_epochs": {"type": "number", "exclusiveMinimum": 0}}, "max_epochs"),
)


__all__ = ["COMPARATORS", "EpochBudgetHalt", "GradNormToleranceHalt", "ThresholdHaltPlugin"]
