"""Settings loader: defaults, YAML profile and command-line overrides merged into run objects."""

from __future__ import annotations

import copy
import logging
import math
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ef21sim.core.compression import CompressorSpec
from ef21sim.core.config_merger import ConfigSource, ConfigurationMerger
from ef21sim.core.methods import MethodConfig, Variant
from ef21sim.core.problems import Objective, ObjectiveKind, Regularizer
from ef21sim.core.registry import PluginRegistry, registry
from ef21sim.core.sim import RunConfig, StepsizeRule
from ef21sim.core.theory import default_page_probabilities
from ef21sim.core.validation import ConfigurationError, validate_settings, validate_settings_data
from ef21sim.orchestrators.tuning import DEFAULT_MULTIPLIERS

logger = logging.getLogger(__name__)

DEFAULT_LOGISTIC_LAMBDA = 0.1


DEFAULT_SETTINGS: dict[str, Any] = {
    "data": {
        "source": "synthetic",
        "samples": 2000,
        "dimension": 100,
        "noise": 1.0,
        "seed": 0,
        "scale_features": False,
    },
    "objective": {"kind": "logistic_nonconvex", "lambda": None},
    "clients": 20,
    "seed": 0,
    "method": {
        "variant": "ef21",
        "compressor": {"kind": "top_k", "k": 1},
        "init": "exact_grad",
        "page_shared_coin": False,
        "participation": 1.0,
        "momentum": 0.0,
    },
    "stepsize": {"mode": "theory", "multiplier": 1.0, "regime": "nonconvex"},
    "stopping": {"max_rounds": 10000, "tolerance": 1e-7, "record_every": 1},
    "output": {"directory": "outputs", "formats": ["csv", "json"]},
    "tuning": {
        "multipliers": list(DEFAULT_MULTIPLIERS),
        "concurrency": {"enabled": False, "max_workers": 4},
    },
}


@dataclass
class Settings:
    """Resolved settings plus the run objects built from them."""

    data: dict[str, Any]
    run_config: RunConfig
    output_dir: Path
    formats: list[str]
    multipliers: list[float]
    concurrency: dict[str, Any] = field(default_factory=dict)
    merger: ConfigurationMerger | None = None

    def explain(self, key: str) -> str:
        if self.merger is None:
            return f"{key} = <no merge trace>"
        return self.merger.explain(key, self.data)


_SCIENTIFIC = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)[eE][-+]?\d+$")


def coerce_numbers(value: Any) -> Any:
    """YAML 1.1 reads ``1e-7`` as a string; turn such scientific literals into floats."""
    if isinstance(value, str) and _SCIENTIFIC.match(value.strip()):
        return float(value)
    if isinstance(value, Mapping):
        return {key: coerce_numbers(inner) for key, inner in value.items()}
    if isinstance(value, list):
        return [coerce_numbers(inner) for inner in value]
    return value


def parse_override(text: str) -> dict[str, Any]:
    """Turn ``a.b.c=value`` into ``{"a": {"b": {"c": value}}}``; the value is read as YAML."""
    key, sep, raw_value = text.partition("=")
    key = key.strip()
    if not sep or not key or any(not part for part in key.split(".")):
        raise ConfigurationError(f"Override must look like 'section.key=value', got {text!r}")
    try:
        value = yaml.safe_load(raw_value) if raw_value.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Override value for '{key}' is not valid YAML: {exc}") from exc
    nested: dict[str, Any] = {}
    cursor = nested
    parts = key.split(".")
    for part in parts[:-1]:
        cursor = cursor.setdefault(part, {})
    cursor[parts[-1]] = coerce_numbers(value)
    return nested


def _merge_overrides(overrides: Sequence[str]) -> dict[str, Any]:
    merger = ConfigurationMerger()
    sources = [ConfigSource(name="overrides", data=parse_override(text), precedence=3) for text in overrides]
    return merger.merge(*sources) if sources else {}


def read_profile(path: str | Path, profile: str = "default") -> dict[str, Any]:
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Settings file not found: {config_path}")
    report = validate_settings(config_path, profile)
    for warning in report.warnings:
        logger.warning("%s", warning.format())
    report.raise_if_errors()
    data = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    return coerce_numbers(dict(data[profile]))


def resolve_settings(
    path: str | Path | None = None,
    profile: str = "default",
    overrides: Sequence[str] = (),
    *,
    seed: int | None = None,
) -> tuple[dict[str, Any], ConfigurationMerger]:
    """Merge defaults (1) < settings-file profile (2) < overrides (3) and validate the result."""
    sources = [ConfigSource(name="defaults", data=copy.deepcopy(DEFAULT_SETTINGS), precedence=1)]
    if path is not None:
        sources.append(ConfigSource(name="profile", data=read_profile(path, profile), precedence=2))
    override_data = _merge_overrides(overrides)
    if seed is not None:
        override_data["seed"] = seed
    if override_data:
        sources.append(ConfigSource(name="overrides", data=override_data, precedence=3))

    merger = ConfigurationMerger()
    merged = merger.merge(*sources)
    report = validate_settings_data(merged)
    for warning in report.warnings:
        logger.warning("%s", warning.format())
    report.raise_if_errors()
    return merged, merger


def objective_lambda(data: Mapping[str, Any]) -> float:
    objective = data["objective"]
    lam = objective.get("lambda")
    if lam is None:
        return DEFAULT_LOGISTIC_LAMBDA if objective["kind"] == ObjectiveKind.LOGISTIC_NONCONVEX else 0.0
    return float(lam)


def build_objective(data: Mapping[str, Any], plugins: PluginRegistry = registry) -> Objective:
    source = data["data"]
    kind = data["objective"]["kind"]
    lam = objective_lambda(data)
    if source["source"] == "libsvm":
        options: dict[str, Any] = {
            "path": source["path"],
            "clients": data["clients"],
            "objective": kind,
            "lam": lam,
            "scale_features": bool(source.get("scale_features", False)),
            "dimension": source.get("dimension_override"),
        }
    else:
        options = {
            "objective": kind,
            "samples": source["samples"],
            "dimension": source["dimension"],
            "clients": data["clients"],
            "seed": source.get("seed", 0),
            "noise": source.get("noise", 0.0),
            "lam": lam,
        }
    return plugins.create_datasource(source["source"], options).load()


def batch_sizes(method: Mapping[str, Any], obj: Objective) -> tuple[int, ...] | None:
    """Per-client batch sizes from ``batch_size`` (capped at ``N_i``) or ``batch_fraction`` of ``N_i``."""
    if method.get("batch_size") is not None:
        return tuple(min(int(method["batch_size"]), size) for size in obj.sizes)
    if method.get("batch_fraction") is not None:
        fraction = float(method["batch_fraction"])
        return tuple(min(size, max(1, math.ceil(fraction * size))) for size in obj.sizes)
    return None


def page_probabilities(method: Mapping[str, Any], obj: Objective, tau: tuple[int, ...]) -> tuple[float, ...]:
    if method.get("page_probability") is not None:
        return (float(method["page_probability"]),) * obj.n_clients
    probabilities = default_page_probabilities(tau, obj.sizes)
    if method.get("page_shared_coin"):
        shared = sum(probabilities) / len(probabilities)
        return (shared,) * obj.n_clients
    return probabilities


def build_method_config(data: Mapping[str, Any], obj: Objective) -> MethodConfig:
    method = data["method"]
    variant = Variant(method["variant"])
    d = obj.dimension
    tau = batch_sizes(method, obj) if variant in (Variant.EF21_SGD, Variant.EF21_PAGE) else None
    master = method.get("master_compressor")
    return MethodConfig(
        variant=variant,
        compressor=CompressorSpec.from_mapping(method["compressor"], d),
        init=method.get("init", "exact_grad"),
        seed=int(data.get("seed", 0)),
        batch_sizes=tau,
        page_probabilities=page_probabilities(method, obj, tau) if variant == Variant.EF21_PAGE and tau else None,
        page_shared_coin=bool(method.get("page_shared_coin", False)),
        participation=float(method.get("participation", 1.0)),
        master_compressor=CompressorSpec.from_mapping(master, d) if master else None,
        momentum=float(method.get("momentum", 0.0)),
        regularizer=Regularizer.from_mapping(method.get("regularizer")),
    )


def build_stepsize_rule(data: Mapping[str, Any]) -> StepsizeRule:
    stepsize = data["stepsize"]
    method = data["method"]
    return StepsizeRule(
        mode=stepsize["mode"],
        multiplier=float(stepsize.get("multiplier", 1.0)),
        value=stepsize.get("value"),
        regime=stepsize.get("regime", "nonconvex"),
        mu=stepsize.get("mu"),
        rho=method.get("rho"),
        nu=method.get("nu"),
        s=method.get("s"),
        s_master=method.get("s_master"),
    )


def build_run_config(data: Mapping[str, Any], plugins: PluginRegistry = registry) -> RunConfig:
    obj = build_objective(data, plugins)
    stopping = data.get("stopping") or {}
    x0 = data.get("x0")
    return RunConfig(
        objective=obj,
        method=build_method_config(data, obj),
        stepsize=build_stepsize_rule(data),
        max_rounds=int(stopping.get("max_rounds", 10000)),
        tolerance=float(stopping.get("tolerance", 1e-7)),
        max_epochs=stopping.get("max_epochs"),
        record_every=int(stopping.get("record_every", 1)),
        x0=None if x0 is None else np.asarray(x0, dtype=float),
        halt_conditions=tuple(stopping.get("halt_conditions") or ()),
        settings=copy.deepcopy(dict(data)),
    )


def load_settings(
    path: str | Path | None = None,
    profile: str = "default",
    overrides: Sequence[str] = (),
    *,
    seed: int | None = None,
    output_dir: str | Path | None = None,
    plugins: PluginRegistry = registry,
) -> Settings:
    """Resolve settings and build the run configuration (loads or generates the dataset)."""
    merged, merger = resolve_settings(path, profile, overrides, seed=seed)
    output = merged.get("output") or {}
    tuning = merged.get("tuning") or {}
    return Settings(
        data=merged,
        run_config=build_run_config(merged, plugins),
        output_dir=Path(output_dir or output.get("directory", "outputs")),
        formats=list(output.get("formats", ["csv", "json"])),
        multipliers=[float(m) for m in tuning.get("multipliers", DEFAULT_MULTIPLIERS)],
        concurrency=dict(tuning.get("concurrency") or {}),
        merger=merger,
    )


__all__ = [
    "DEFAULT_MULTIPLIERS",
    "DEFAULT_SETTINGS",
    "Settings",
    "build_method_config",
    "build_objective",
    "build_run_config",
    "build_stepsize_rule",
    "load_settings",
    "parse_override",
    "read_profile",
    "resolve_settings",
]
