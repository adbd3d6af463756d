"""Registry resolving datasource and record-sink plugins by name."""

from __future__ import annotations

from typing import Any

from ef21sim.core.interfaces import DataSource, RecordSink
from ef21sim.core.validation import ConfigurationError, PluginFactory
from ef21sim.plugins.datasources import LibsvmDataSource, SyntheticDataSource
from ef21sim.plugins.outputs import CsvRecordSink, JsonRecordSink

_OBJECTIVE = {"type": "string", "enum": ["logistic_nonconvex", "least_squares", "quadratic"]}
_COUNT = {"type": "integer", "minimum": 1}
_NON_NEGATIVE = {"type": "number", "minimum": 0}


def _options(properties: dict[str, Any], *required: str) -> dict[str, Any]:
    return {"type": "object", "properties": properties, "required": list(required), "additionalProperties": False}


LIBSVM_OPTIONS = _options(
    {
        "path": {"type": "string"},
        "clients": _COUNT,
        "objective": _OBJECTIVE,
        "lam": _NON_NEGATIVE,
        "scale_features": {"type": "boolean"},
        "dimension": {"type": ["integer", "null"], "minimum": 1},
    },
    "path",
    "clients",
)
SYNTHETIC_OPTIONS = _options(
    {
        "objective": _OBJECTIVE,
        "samples": _COUNT,
        "dimension": _COUNT,
        "clients": _COUNT,
        "seed": {"type": "integer", "minimum": 0},
        "noise": _NON_NEGATIVE,
        "lam": _NON_NEGATIVE,
    },
    "samples",
    "dimension",
    "clients",
)
SINK_OPTIONS = _options(
    {
        "path": {"type": "string"},
        "overwrite": {"type": "boolean"},
        "on_error": {"type": "string", "enum": ["abort", "skip"]},
    },
    "path",
)


class PluginRegistry:
    """Datasources (``libsvm``, ``synthetic``) and sinks (``csv``, ``json``).

    ``create_*`` raises ``ValueError`` for an unknown name; ``validate_*`` raises
    :class:`ConfigurationError` so settings checks report it alongside schema errors.
    """

    def __init__(self) -> None:
        self._plugins: dict[str, dict[str, PluginFactory]] = {
            "datasource": {
                "libsvm": PluginFactory(lambda options: LibsvmDataSource(**options), LIBSVM_OPTIONS),
                "synthetic": PluginFactory(lambda options: SyntheticDataSource(**options), SYNTHETIC_OPTIONS),
            },
            "sink": {
                "csv": PluginFactory(lambda options: CsvRecordSink(**options), SINK_OPTIONS),
                "json": PluginFactory(lambda options: JsonRecordSink(**options), SINK_OPTIONS),
            },
        }

    def _factory(self, kind: str, name: str, error: type[Exception]) -> PluginFactory:
        factory = self._plugins[kind].get(name)
        if factory is None:
            raise error(f"Unknown {kind} plugin '{name}'")
        return factory

    def create_datasource(self, name: str, options: dict[str, Any]) -> DataSource:
        source: DataSource = self._factory("datasource", name, ValueError).build(options, f"datasource:{name}")
        return source

    def create_sink(self, name: str, options: dict[str, Any]) -> RecordSink:
        sink: RecordSink = self._factory("sink", name, ValueError).build(options, f"sink:{name}")
        return sink

    def validate_datasource(self, name: str, options: dict[str, Any] | None) -> None:
        self._factory("datasource", name, ConfigurationError).validate(options, f"datasource:{name}")

    def validate_sink(self, name: str, options: dict[str, Any] | None) -> None:
        self._factory("sink", name, ConfigurationError).validate(options, f"sink:{name}")

    def register_datasource(self, name: str, factory: PluginFactory) -> None:
        self._plugins["datasource"][name] = factory

    def register_sink(self, name: str, factory: PluginFactory) -> None:
        self._plugins["sink"][name] = factory


registry = PluginRegistry()

__all__ = ["PluginFactory", "PluginRegistry", "registry"]
