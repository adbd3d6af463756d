"""Settings schema and the checks run on merged settings."""

from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigurationError(RuntimeError):
    """Settings or plugin options were rejected."""


@dataclass(frozen=True)
class ValidationMessage:
    message: str
    context: str | None = None

    def format(self) -> str:
        return f"{self.context}: {self.message}" if self.context else self.message


@dataclass
class ValidationReport:
    """Errors block a run; warnings are logged and ignored."""

    errors: list[ValidationMessage] = field(default_factory=list)
    warnings: list[ValidationMessage] = field(default_factory=list)

    def add_error(self, message: str, context: str | None = None) -> None:
        self.errors.append(ValidationMessage(message, context))

    def add_warning(self, message: str, context: str | None = None) -> None:
        self.warnings.append(ValidationMessage(message, context))

    def has_errors(self) -> bool:
        return len(self.errors) > 0

    def has_warnings(self) -> bool:
        return len(self.warnings) > 0

    def raise_if_errors(self) -> None:
        if self.has_errors():
            raise ConfigurationError("; ".join(item.format() for item in self.errors))


KeyPath = tuple[str | int, ...]


def _is_real(value: Any) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool)


_TYPE_CHECKS: dict[str, Callable[[Any], bool]] = {
    "null": lambda value: value is None,
    "object": lambda value: isinstance(value, Mapping),
    "array": lambda value: isinstance(value, list),
    "string": lambda value: isinstance(value, str),
    "boolean": lambda value: isinstance(value, bool),
    "integer": lambda value: isinstance(value, int) and not isinstance(value, bool),
    "number": _is_real,
}

# keyword -> (violated(value, bound), message prefix)
_BOUNDS: dict[str, tuple[Callable[[float, float], bool], str]] = {
    "minimum": (lambda value, bound: value < bound, ">="),
    "exclusiveMinimum": (lambda value, bound: value <= bound, ">"),
    "maximum": (lambda value, bound: value > bound, "<="),
    "exclusiveMaximum": (lambda value, bound: value >= bound, "<"),
}


def _pointer(path: KeyPath) -> str:
    text = ""
    for part in path:
        if isinstance(part, int):
            text += f"[{part}]"
        else:
            text += f".{part}" if text else str(part)
    return text


def _walk(value: Any, schema: Mapping[str, Any], path: KeyPath) -> Iterator[tuple[KeyPath, str]]:
    alternatives = schema.get("anyOf")
    if alternatives and not any(next(_walk(value, option, path), None) is None for option in alternatives):
        yield path, "did not match any allowed schemas"

    declared = schema.get("type")
    if declared:
        allowed = declared if isinstance(declared, list) else [declared]
        if not any(_TYPE_CHECKS.get(name, lambda _: True)(value) for name in allowed):
            yield path, f"must be of type {declared}"
            return
    if value is None:
        return

    if isinstance(value, Mapping):
        properties: Mapping[str, Any] = schema.get("properties", {})
        for key in schema.get("required", ()):
            if key not in value:
                yield (*path, key), "is a required property"
        for key, item in value.items():
            if key in properties:
                yield from _walk(item, properties[key], (*path, key))
            elif schema.get("additionalProperties") is False:
                yield (*path, key), "is not a recognised key"
    elif isinstance(value, list):
        if "items" in schema:
            for index, item in enumerate(value):
                yield from _walk(item, schema["items"], (*path, index))
        if len(value) < schema.get("minItems", 0):
            yield path, f"must contain at least {schema['minItems']} items"

    if "enum" in schema and value not in schema["enum"]:
        yield path, f"must be one of {schema['enum']}"
    if _is_real(value):
        for keyword, (violated, symbol) in _BOUNDS.items():
            bound = schema.get(keyword)
            if bound is not None and violated(value, bound):
                yield path, f"must be {symbol} {bound}"


def validate_schema(
    data: Mapping[str, object] | None,
    schema: Mapping[str, object],
    *,
    context: str | None = None,
) -> Iterator[ValidationMessage]:
    """Yield one message per violation of ``schema`` in ``data``.

    Understands the keywords the settings and plugin schemas use: ``type`` (a name or
    a list of names, ``null`` included), ``anyOf``, ``required``, ``properties``,
    ``additionalProperties: false``, ``items``, ``minItems``, ``enum`` and the four
    numeric bounds.
    """

    if data is None:
        yield ValidationMessage("value is missing", context)
        return
    for path, problem in _walk(data, schema, ()):
        where = _pointer(path)
        yield ValidationMessage(f"{problem} (path: {where})" if where else problem, context)


@dataclass
class PluginFactory:
    """A plugin constructor paired with the schema its options must satisfy."""

    create: Callable[[dict[str, Any]], Any]
    schema: Mapping[str, Any] | None = None

    def validate(self, options: Mapping[str, Any] | None, context: str) -> None:
        if self.schema is None:
            return
        problems = [message.format() for message in validate_schema(options or {}, self.schema, context=context)]
        if problems:
            raise ConfigurationError("\n".join(problems))

    def build(self, options: dict[str, Any], context: str) -> Any:
        self.validate(options, context)
        return self.create(options)


def _section(properties: dict[str, Any], *required: str, closed: bool = True) -> dict[str, Any]:
    schema: dict[str, Any] = {"type": "object", "properties": properties}
    if required:
        schema["required"] = list(required)
    if closed:
        schema["additionalProperties"] = False
    return schema


def _optional(kind: str, **bounds: float) -> dict[str, Any]:
    return {"type": [kind, "null"], **bounds}


_POSITIVE_NUMBER = {"type": "number", "exclusiveMinimum": 0}
_POSITIVE_INTEGER = {"type": "integer", "minimum": 1}
_UNIT_INTERVAL = {"exclusiveMinimum": 0, "maximum": 1}

COMPRESSOR_SCHEMA: dict[str, Any] = _section(
    {
        "kind": {"type": "string", "enum": ["identity", "top_k", "rand_k", "scale"]},
        "k": _optional("integer", minimum=1),
        "ratio": _optional("number", **_UNIT_INTERVAL),
        "factor": _optional("number", **_UNIT_INTERVAL),
        "value_bits": _POSITIVE_INTEGER,
        "index_bits": _optional("integer", minimum=1),
    },
    "kind",
)

HALT_CONDITION_SCHEMA: dict[str, Any] = _section({"name": {"type": "string"}, "options": {"type": "object"}}, "name")

_REGULARIZER_SCHEMA = _section(
    {
        "kind": {"type": "string", "enum": ["none", "l1", "box"]},
        "weight": _optional("number", exclusiveMinimum=0),
        "lo": _optional("number"),
        "hi": _optional("number"),
    },
    "kind",
)

SETTINGS_SCHEMA: dict[str, Any] = _section(
    {
        "data": _section(
            {
                "source": {"type": "string", "enum": ["synthetic", "libsvm"]},
                "path": _optional("string"),
                "samples": _POSITIVE_INTEGER,
                "dimension": _POSITIVE_INTEGER,
                "noise": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "scale_features": {"type": "boolean"},
                "dimension_override": _optional("integer", minimum=1),
            },
            "source",
        ),
        "objective": _section(
            {
                "kind": {"type": "string", "enum": ["logistic_nonconvex", "least_squares", "quadratic"]},
                "lambda": _optional("number", minimum=0),
            },
            "kind",
        ),
        "clients": _POSITIVE_INTEGER,
        "seed": {"type": "integer", "minimum": 0},
        "x0": {"type": ["array", "null"], "items": {"type": "number"}},
        "method": _section(
            {
                "variant": {
                    "type": "string",
                    "enum": ["ef21", "ef21_sgd", "ef21_page", "ef21_pp", "ef21_bc", "ef21_hb", "ef21_prox"],
                },
                "compressor": COMPRESSOR_SCHEMA,
                "master_compressor": {"anyOf": [{"type": "null"}, COMPRESSOR_SCHEMA]},
                "init": {"type": "string", "enum": ["exact_grad", "compressed_grad", "zero"]},
                "batch_size": _optional("integer", minimum=1),
                "batch_fraction": _optional("number", **_UNIT_INTERVAL),
                "page_probability": _optional("number", **_UNIT_INTERVAL),
                "page_shared_coin": {"type": "boolean"},
                "participation": {"type": "number", **_UNIT_INTERVAL},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "regularizer": _REGULARIZER_SCHEMA,
                "rho": _optional("number", exclusiveMinimum=0),
                "nu": _optional("number", exclusiveMinimum=0),
                "s": _optional("number", exclusiveMinimum=0),
                "s_master": _optional("number", exclusiveMinimum=0),
            },
            "variant",
            "compressor",
        ),
        "stepsize": _section(
            {
                "mode": {"type": "string", "enum": ["theory", "theory_times", "fixed"]},
                "multiplier": _POSITIVE_NUMBER,
                "value": _optional("number", minimum=0),
                "regime": {"type": "string", "enum": ["nonconvex", "pl"]},
                "mu": _optional("number", exclusiveMinimum=0),
            },
            "mode",
        ),
        "stopping": _section(
            {
                "max_rounds": _POSITIVE_INTEGER,
                "tolerance": {"type": "number", "minimum": 0},
                "max_epochs": _optional("number", exclusiveMinimum=0),
                "record_every": _POSITIVE_INTEGER,
                "halt_conditions": {"type": "array", "items": HALT_CONDITION_SCHEMA},
            }
        ),
        "output": _section(
            {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"type": "string", "enum": ["csv", "json"]}, "minItems": 1},
            }
        ),
        "tuning": _section(
            {
                "multipliers": {"type": "array", "items": _POSITIVE_NUMBER, "minItems": 1},
                "concurrency": _section({"enabled": {"type": "boolean"}, "max_workers": _POSITIVE_INTEGER}),
            }
        ),
    },
    "data",
    "objective",
    "clients",
    "method",
    "stepsize",
)


def validate_settings_data(data: Mapping[str, Any], *, context: str = "settings") -> ValidationReport:
    """Validate a merged settings mapping: schema first, then cross-field rules."""

    report = ValidationReport(errors=list(validate_schema(data, SETTINGS_SCHEMA, context=context)))
    if report.has_errors():
        return report

    data_cfg = data["data"]
    if data_cfg["source"] == "libsvm" and not data_cfg.get("path"):
        report.add_error("libsvm source requires 'path'", context=f"{context}.data")

    objective_cfg = data["objective"]
    if objective_cfg["kind"] != "logistic_nonconvex" and objective_cfg.get("lambda"):
        report.add_error("'lambda' applies only to logistic_nonconvex", context=f"{context}.objective")

    stepsize_cfg = data["stepsize"]
    if stepsize_cfg["mode"] == "fixed" and stepsize_cfg.get("value") is None:
        report.add_error("fixed stepsize mode requires 'value'", context=f"{context}.stepsize")
    if stepsize_cfg["mode"] != "fixed" and stepsize_cfg.get("value") is not None:
        report.add_warning("'value' is ignored outside fixed mode", context=f"{context}.stepsize")
    if stepsize_cfg.get("regime") == "pl" and stepsize_cfg["mode"] != "fixed" and stepsize_cfg.get("mu") is None:
        if objective_cfg["kind"] == "logistic_nonconvex":
            report.add_error("PL regime on a logistic objective requires 'mu'", context=f"{context}.stepsize")

    method_cfg = data["method"]
    variant = method_cfg["variant"]
    if variant in {"ef21_sgd", "ef21_page"}:
        if method_cfg.get("batch_size") is None and method_cfg.get("batch_fraction") is None:
            report.add_error(f"{variant} requires 'batch_size' or 'batch_fraction'", context=f"{context}.method")
    if variant == "ef21_bc" and method_cfg.get("master_compressor") is None:
        report.add_error("ef21_bc requires 'master_compressor'", context=f"{context}.method")
    regularizer = method_cfg.get("regularizer") or {"kind": "none"}
    if regularizer["kind"] != "none" and variant != "ef21_prox":
        report.add_error("a regularizer requires the ef21_prox variant", context=f"{context}.method")
    if regularizer["kind"] == "l1" and regularizer.get("weight") is None:
        report.add_error("l1 regularizer requires 'weight'", context=f"{context}.method.regularizer")
    if regularizer["kind"] == "box":
        lo, hi = regularizer.get("lo"), regularizer.get("hi")
        if lo is None or hi is None or not lo < hi:
            report.add_error("box regularizer requires lo < hi", context=f"{context}.method.regularizer")

    from ef21sim.core.sim import plugin_registry

    for index, definition in enumerate((data.get("stopping") or {}).get("halt_conditions") or []):
        try:
            plugin_registry.validate_halt_condition_definition(definition)
        except ConfigurationError as exc:
            report.add_error(str(exc), context=f"{context}.stopping.halt_conditions[{index}]")

    return report


def validate_settings(path: str | Path, profile: str = "default") -> ValidationReport:
    """Check that a settings file parses and that the profile exists.

    Schema checks run on the merged configuration in :func:`ef21sim.config.load_settings`,
    after defaults and overrides are applied.
    """

    report = ValidationReport()
    where = str(path)
    try:
        profiles = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        report.add_error("Settings file not found", where)
        return report
    except yaml.YAMLError as exc:
        report.add_error(f"Invalid YAML: {exc}", where)
        return report

    if not isinstance(profiles, Mapping):
        report.add_error("Settings file must contain a mapping of profiles", where)
    elif profile not in profiles or profiles[profile] is None:
        report.add_error(f"Profile '{profile}' not found", where)
    elif not isinstance(profiles[profile], Mapping):
        report.add_error(f"Profile '{profile}' must be a mapping", where)
    return report


__all__ = [
    "COMPRESSOR_SCHEMA",
    "SETTINGS_SCHEMA",
    "ConfigurationError",
    "PluginFactory",
    "ValidationMessage",
    "ValidationReport",
    "validate_schema",
    "validate_settings",
    "validate_settings_data",
]
