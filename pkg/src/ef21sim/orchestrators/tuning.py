"""Stepsize-multiplier tuning grid."""

from __future__ import annotations

import copy
import logging
import math
import threading
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from ef21sim.core.exceptions import TuningError
from ef21sim.core.sim import RunConfig, RunRecord, RunStatus, resolve_theory, run, run_directory, write_run
from ef21sim.core.sim.emission import config_digest
from ef21sim.core.theory import TheoryStepsize

logger = logging.getLogger(__name__)

DEFAULT_MULTIPLIERS: tuple[float, ...] = tuple(2.0**k for k in range(-2, 12))
SUMMARY_COLUMNS = ("multiplier", "status", "rounds", "bits_up_cum", "grad_norm_sq", "best")


@dataclass
class TuningResult:
    multipliers: list[float]
    records: list[RunRecord]
    best_index: int
    configs: list[RunConfig] = field(default_factory=list)

    @property
    def best_multiplier(self) -> float:
        return self.multipliers[self.best_index]

    @property
    def best_record(self) -> RunRecord:
        return self.records[self.best_index]

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for index, (multiplier, record) in enumerate(zip(self.multipliers, self.records)):
            last = record.last_row
            rows.append(
                {
                    "multiplier": multiplier,
                    "status": str(record.status),
                    "rounds": record.rounds,
                    "bits_up_cum": None if last is None else last.bits_up_total / record.n_clients,
                    "grad_norm_sq": None if last is None else last.grad_norm_sq,
                    "best": index == self.best_index,
                }
            )
        return pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))


def _settings_for(base: RunConfig, rule_mode: str, multiplier: float) -> Mapping[str, Any] | None:
    if base.settings is None:
        return None
    settings = copy.deepcopy(dict(base.settings))
    stepsize = dict(settings.get("stepsize") or {})
    stepsize.update(mode=rule_mode, multiplier=multiplier)
    settings["stepsize"] = stepsize
    return settings


def grid_configs(base: RunConfig, multipliers: Sequence[float]) -> list[RunConfig]:
    configs = []
    for multiplier in multipliers:
        rule = base.stepsize.scaled(multiplier)
        configs.append(base.with_stepsize(rule, _settings_for(base, str(rule.mode), multiplier)))
    return configs


def select_best(multipliers: Sequence[float], records: Sequence[RunRecord]) -> int:
    """Index of the winning run.

    Converged runs compete on cumulative uplink bits, ties going to the smaller multiplier.
    Without a converged run the smallest final squared gradient norm among the
    non-diverged runs wins. Diverged runs never win.
    """
    candidates = [i for i, record in enumerate(records) if record.status != RunStatus.DIVERGED]
    if not candidates:
        raise TuningError("every run of the tuning grid diverged")
    for i, record in enumerate(records):
        if record.status == RunStatus.DIVERGED:
            logger.warning("Excluding multiplier %g: diverged", multipliers[i])

    converged = [i for i in candidates if records[i].converged]
    if converged:
        return min(converged, key=lambda i: (records[i].rows[-1].bits_up_total, multipliers[i]))

    logger.warning("No multiplier reached the tolerance; picking the smallest final gradient norm")

    def final_norm(i: int) -> float:
        last = records[i].last_row
        value = math.inf if last is None else last.grad_norm_sq
        return value if math.isfinite(value) else math.inf

    return min(candidates, key=lambda i: (final_norm(i), multipliers[i]))


def _should_run_parallel(config: Mapping[str, Any] | None, backlog_size: int) -> bool:
    if not config or not config.get("enabled"):
        return False
    max_workers = max(int(config.get("max_workers", 1)), 1)
    return max_workers > 1 and backlog_size > 1


def _run_parallel(
    configs: Sequence[RunConfig],
    theory: TheoryStepsize | None,
    config: Mapping[str, Any],
) -> list[RunRecord]:
    max_workers = max(int(config.get("max_workers", 4)), 1)
    results: list[RunRecord | None] = [None] * len(configs)
    lock = threading.Lock()

    def worker(index: int, cfg: RunConfig) -> None:
        record = run(cfg, theory=theory)
        with lock:
            results[index] = record

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(worker, index, cfg) for index, cfg in enumerate(configs)]
        for future in futures:
            future.result()
    return [record for record in results if record is not None]


def tune(
    base: RunConfig,
    multipliers: Sequence[float] = DEFAULT_MULTIPLIERS,
    *,
    concurrency: Mapping[str, Any] | None = None,
) -> TuningResult:
    """Run ``base`` once per multiplier and pick the best; records keep the multiplier order."""
    if not multipliers:
        raise TuningError("the multiplier grid is empty")
    multipliers = [float(m) for m in multipliers]
    theory = resolve_theory(base)
    configs = grid_configs(base, multipliers)

    if _should_run_parallel(concurrency, len(configs)):
        assert concurrency is not None
        records = _run_parallel(configs, theory, concurrency)
    else:
        records = [run(cfg, theory=theory) for cfg in configs]

    for multiplier, record in zip(multipliers, records):
        logger.info("Multiplier %g: status=%s rounds=%d", multiplier, record.status, record.rounds)

    best = select_best(multipliers, records)
    logger.info("Best multiplier: %g", multipliers[best])
    return TuningResult(multipliers=multipliers, records=records, best_index=best, configs=configs)


def write_tuning(
    result: TuningResult,
    base_dir: str | Path,
    formats: Sequence[str],
    base_settings: Mapping[str, Any] | None = None,
) -> Path:
    """Write every run into its own hashed directory and ``tune-<hash>/summary.csv``; returns the summary path."""
    base = Path(base_dir)
    for cfg, record in zip(result.configs, result.records):
        directory = run_directory(base, cfg.settings or record.header)
        write_run(record, directory, formats)
    summary_dir = base / f"tune-{config_digest(base_settings or {'multipliers': result.multipliers})}"
    summary_dir.mkdir(parents=True, exist_ok=True)
    summary_path = summary_dir / "summary.csv"
    result.summary_frame().to_csv(summary_path, index=False, lineterminator="\n")
    logger.info("Wrote tuning summary to %s", summary_path)
    return summary_path


__all__ = [
    "DEFAULT_MULTIPLIERS",
    "SUMMARY_COLUMNS",
    "TuningResult",
    "grid_configs",
    "select_best",
    "tune",
    "write_tuning",
]
