"""Named halt conditions, resolved from ``{"name": ..., "options": {...}}`` definitions."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from typing import Any

from ef21sim.core.sim.plugins import HaltConditionPlugin
from ef21sim.core.validation import ConfigurationError, PluginFactory

_halt_conditions: dict[str, PluginFactory] = {}


def register_halt_condition_plugin(
    name: str,
    factory: Callable[[dict[str, Any]], HaltConditionPlugin],
    *,
    schema: Mapping[str, Any] | None = None,
) -> None:
    _halt_conditions[name] = PluginFactory(create=factory, schema=schema)


def registered_halt_conditions() -> list[str]:
    return sorted(_halt_conditions)


def _resolve(definition: Mapping[str, Any], error: type[Exception]) -> tuple[PluginFactory, dict[str, Any], str]:
    if not definition:
        raise error("Halt condition plugin definition cannot be empty")
    name = definition.get("name")
    factory = _halt_conditions.get(str(name))
    if factory is None:
        raise error(f"Unknown halt condition plugin '{name}'")
    return factory, dict(definition.get("options") or {}), f"halt_condition_plugin:{name}"


def create_halt_condition_plugin(definition: Mapping[str, Any]) -> HaltConditionPlugin:
    factory, options, context = _resolve(definition, ValueError)
    plugin: HaltConditionPlugin = factory.build(options, context)
    return plugin


def validate_halt_condition_definition(definition: Mapping[str, Any]) -> None:
    factory, options, context = _resolve(definition, ConfigurationError)
    factory.validate(options, context)


def create_halt_condition_plugins(definitions: Sequence[Mapping[str, Any]]) -> list[HaltConditionPlugin]:
    return [create_halt_condition_plugin(definition) for definition in definitions]


# Built-ins register themselves on import.
import ef21sim.plugins.stopping  # noqa: E402, F401

__all__ = [
    "create_halt_condition_plugin",
    "create_halt_condition_plugins",
    "register_halt_condition_plugin",
    "registered_halt_conditions",
    "validate_halt_condition_definition",
]
