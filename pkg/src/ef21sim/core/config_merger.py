"""Layered settings: defaults, then a settings-file profile, then command-line overrides."""

from __future__ import annotations

import copy
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, ClassVar


class MergeStrategy(StrEnum):
    OVERRIDE = "override"
    DEEP_MERGE = "deep_merge"


@dataclass
class ConfigSource:
    """One layer of settings; higher ``precedence`` wins (defaults 1, profile 2, overrides 3)."""

    name: str
    data: dict[str, Any]
    precedence: int


@dataclass(frozen=True)
class _Assignment:
    path: str
    source: str
    strategy: MergeStrategy

    def covers(self, key: str) -> bool:
        return self.path == key or key.startswith(f"{self.path}.") or self.path.startswith(f"{key}.")


@dataclass
class ConfigurationMerger:
    """Merges :class:`ConfigSource` layers and remembers which layer set each leaf.

    The settings sections merge key by key; top-level scalars and every list are
    replaced wholesale. A section given as a non-mapping replaces the section.
    """

    SECTIONS: ClassVar[frozenset[str]] = frozenset(
        {"data", "objective", "method", "stepsize", "stopping", "output", "tuning"}
    )

    _assignments: list[_Assignment] = field(default_factory=list, init=False, repr=False)

    def merge(self, *sources: ConfigSource) -> dict[str, Any]:
        self._assignments = []
        merged: dict[str, Any] = {}
        for source in sorted(sources, key=lambda item: item.precedence):
            for key, value in source.data.items():
                if key in self.SECTIONS and isinstance(value, Mapping):
                    base = merged.get(key)
                    merged[key] = _overlay(base if isinstance(base, Mapping) else {}, value)
                    self._assignments.extend(
                        _Assignment(path, source.name, MergeStrategy.DEEP_MERGE) for path in _leaves(value, key)
                    )
                else:
                    merged[key] = copy.deepcopy(value)
                    self._assignments.append(_Assignment(key, source.name, MergeStrategy.OVERRIDE))
        return merged

    def explain(self, key: str, merged_config: Mapping[str, Any]) -> str:
        """Report the merged value of a dotted ``key`` and the layer that set it last."""

        value: Any = merged_config
        for part in key.split("."):
            if not isinstance(value, Mapping) or part not in value:
                return f"{key} = <not found>"
            value = value[part]

        winner = next((item for item in reversed(self._assignments) if item.covers(key)), None)
        if winner is None:
            return f"{key} = {value}\nSource: <unknown>"
        return f"{key} = {value}\nSource: {winner.source}\nStrategy: {winner.strategy}"


def _overlay(base: Mapping[str, Any], top: Mapping[str, Any]) -> dict[str, Any]:
    result = copy.deepcopy(dict(base))
    for key, value in top.items():
        inner = result.get(key)
        if isinstance(inner, Mapping) and isinstance(value, Mapping):
            result[key] = _overlay(inner, value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def _leaves(value: Any, prefix: str) -> Iterator[str]:
    if not isinstance(value, Mapping) or not value:
        yield prefix
        return
    for key, inner in value.items():
        yield from _leaves(inner, f"{prefix}.{key}")


__all__ = ["ConfigSource", "ConfigurationMerger", "MergeStrategy"]
