"""Single-run harness: stepsize resolution, the round loop, halting and recording."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Any

import numpy as np

from ef21sim.core.compression import alpha_of
from ef21sim.core.exceptions import DivergenceError, ParameterError
from ef21sim.core.methods import (
    MethodConfig,
    RoundReport,
    Variant,
    init_state,
    lyapunov_value,
    observe,
    step,
)
from ef21sim.core.problems import NoiseConstants, Objective, ObjectiveKind, pl_constant, smoothness
from ef21sim.core.randomness import RandomStreams
from ef21sim.core.sim.early_stop import EarlyStopCoordinator
from ef21sim.core.sim.plugin_registry import create_halt_condition_plugins
from ef21sim.core.sim.records import RecordRow, RunRecord, RunStatus
from ef21sim.core.theory import Regime, StepsizeInputs, TheoryStepsize, theory_stepsize

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-7
CONVERGENCE_HALT = "grad_norm_tolerance"


class StepsizeMode(StrEnum):
    THEORY = "theory"
    THEORY_TIMES = "theory_times"
    FIXED = "fixed"


@dataclass(frozen=True)
class StepsizeRule:
    """How the run's stepsize is chosen; ``multiplier`` scales the theory value (or a fixed value)."""

    mode: StepsizeMode = StepsizeMode.THEORY
    multiplier: float = 1.0
    value: float | None = None
    regime: Regime = Regime.NONCONVEX
    mu: float | None = None
    rho: float | None = None
    nu: float | None = None
    s: float | None = None
    s_master: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", StepsizeMode(self.mode))
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.multiplier <= 0:
            raise ParameterError(f"multiplier must be positive, got {self.multiplier}", name="multiplier")
        if self.mode == StepsizeMode.FIXED and (self.value is None or self.value < 0):
            raise ParameterError("fixed stepsize mode needs a non-negative value", name="value")

    def scaled(self, multiplier: float) -> StepsizeRule:
        """The same rule at ``multiplier``; theory mode becomes theory_times."""
        mode = StepsizeMode.THEORY_TIMES if self.mode == StepsizeMode.THEORY else self.mode
        return replace(self, mode=mode, multiplier=multiplier)


@dataclass(frozen=True)
class RunConfig:
    objective: Objective
    method: MethodConfig
    stepsize: StepsizeRule = field(default_factory=StepsizeRule)
    max_rounds: int = 10_000
    tolerance: float = DEFAULT_TOLERANCE
    max_epochs: float | None = None
    record_every: int = 1
    x0: np.ndarray | None = None
    halt_conditions: tuple[Mapping[str, Any], ...] = ()
    noise: NoiseConstants | None = None
    settings: Mapping[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ParameterError(f"max_rounds must be at least 1, got {self.max_rounds}", name="max_rounds")
        if self.record_every < 1:
            raise ParameterError(f"record_every must be at least 1, got {self.record_every}", name="record_every")
        if self.tolerance < 0:
            raise ParameterError("tolerance must be non-negative", name="tolerance")

    def with_stepsize(self, rule: StepsizeRule, settings: Mapping[str, Any] | None = None) -> RunConfig:
        return replace(self, stepsize=rule, settings=self.settings if settings is None else settings)


def stepsize_inputs(cfg: RunConfig) -> StepsizeInputs:
    """Collect the theory inputs for ``cfg``; ``mu`` is computed for quadratic objectives when absent."""
    obj = cfg.objective
    method = cfg.method
    rule = cfg.stepsize
    mu = rule.mu
    if mu is None and rule.regime == Regime.PL and obj.kind != ObjectiveKind.LOGISTIC_NONCONVEX:
        mu = pl_constant(obj)
    return StepsizeInputs(
        smoothness=smoothness(obj),
        alpha=alpha_of(method.compressor),
        alpha_w=alpha_of(method.compressor) if method.variant == Variant.EF21_BC else None,
        alpha_m=alpha_of(method.master_compressor) if method.master_compressor is not None else None,
        eta=method.momentum if method.variant == Variant.EF21_HB else 0.0,
        p=method.participation if method.variant == Variant.EF21_PP else 1.0,
        page_p=method.page_probabilities if method.variant == Variant.EF21_PAGE else None,
        tau=method.batch_sizes,
        m=obj.sizes,
        mu=mu,
        noise=cfg.noise,
        rho=rule.rho,
        nu=rule.nu,
        s=rule.s,
        s_master=rule.s_master,
    )


def resolve_theory(cfg: RunConfig) -> TheoryStepsize | None:
    """Theory constants for the run; fixed-mode runs tolerate inputs the theory rejects."""
    try:
        return theory_stepsize(cfg.method.variant, stepsize_inputs(cfg), cfg.stepsize.regime)
    except ParameterError:
        if cfg.stepsize.mode == StepsizeMode.FIXED:
            logger.info("No theory constants for %s; using the fixed stepsize only", cfg.method.variant)
            return None
        raise


def resolve_gamma(rule: StepsizeRule, theory: TheoryStepsize | None) -> float:
    if rule.mode == StepsizeMode.FIXED:
        assert rule.value is not None
        return rule.value * rule.multiplier
    if theory is None:
        raise ParameterError("theory stepsize requested but no theory constants are available", name="gamma")
    if rule.mode == StepsizeMode.THEORY:
        return theory.gamma
    return theory.gamma * rule.multiplier


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def build_header(cfg: RunConfig, method: MethodConfig, theory: TheoryStepsize | None) -> dict[str, Any]:
    obj = cfg.objective
    header: dict[str, Any] = {
        "method": method.describe(),
        "variant": str(method.variant),
        "objective": obj.describe(),
        "n": obj.n_clients,
        "d": obj.dimension,
        "N": obj.total_samples,
        "seed": method.seed,
        "gamma": method.gamma,
        "alpha": alpha_of(method.compressor),
        "stepsize_mode": str(cfg.stepsize.mode),
        "multiplier": cfg.stepsize.multiplier,
        "regime": str(cfg.stepsize.regime),
        "tolerance": cfg.tolerance,
        "max_rounds": cfg.max_rounds,
        "compressor": method.compressor.to_mapping(),
    }
    if theory is not None:
        header["theory"] = _jsonable(theory.constants)
        header["theta"] = theory.theta
        header["beta"] = theory.beta
        header["L"] = theory.constants.get("L")
        header["L_tilde"] = theory.constants.get("L_tilde")
    if cfg.settings is not None:
        header["settings"] = _jsonable(cfg.settings)
    return header


def _build_coordinator(cfg: RunConfig) -> EarlyStopCoordinator:
    definitions: list[Mapping[str, Any]] = [{"name": CONVERGENCE_HALT, "options": {"tolerance": cfg.tolerance}}]
    if cfg.max_epochs is not None:
        definitions.append({"name": "epoch_budget", "options": {"max_epochs": cfg.max_epochs}})
    definitions.extend(cfg.halt_conditions)
    return EarlyStopCoordinator(create_halt_condition_plugins(definitions))


class _Ledger:
    """Running cost totals; rows carry the totals of the rounds before them."""

    def __init__(self, obj: Objective):
        self._sizes = obj.sizes
        self.bits_up = 0
        self.bits_down = 0
        self.evals = [0] * obj.n_clients

    @property
    def epochs(self) -> float:
        return sum(total / size for total, size in zip(self.evals, self._sizes)) / len(self._sizes)

    def row(self, report: RoundReport, lyapunov: float | None) -> RecordRow:
        return RecordRow(
            t=report.t,
            f=report.f,
            grad_norm_sq=report.grad_norm_sq,
            G_t=report.G_t,
            bits_up_total=self.bits_up,
            bits_down_total=self.bits_down,
            epochs_cum=self.epochs,
            lyapunov=lyapunov,
            bits_up=report.bits_up,
            bits_down=report.bits_down,
        )

    def charge(self, report: RoundReport) -> None:
        self.bits_up += report.bits_up
        self.bits_down += report.bits_down
        for client, evals in enumerate(report.grad_evals):
            self.evals[client] += evals


def _halt_record(row: RecordRow, n_clients: int) -> dict[str, Any]:
    """Halt conditions see the emitted metrics, cumulative bits per client included."""
    return {
        "t": row.t,
        "metrics": {
            "f": row.f,
            "grad_norm_sq": row.grad_norm_sq,
            "G_t": row.G_t,
            "bits_up_cum": row.bits_up_total / n_clients,
            "bits_down_cum": row.bits_down_total / n_clients,
            "epochs_cum": row.epochs_cum,
        },
    }


def run(cfg: RunConfig, *, theory: TheoryStepsize | None = None) -> RunRecord:
    """Execute one run until a halt condition fires, the budget is spent or the iterate diverges.

    ``theory`` may be passed to reuse constants already resolved for the same problem.
    """
    obj = cfg.objective
    if theory is None:
        theory = resolve_theory(cfg)
    gamma = resolve_gamma(cfg.stepsize, theory)
    method = cfg.method.with_gamma(gamma)
    header = build_header(cfg, method, theory)
    record = RunRecord(header=header)

    pl = cfg.stepsize.regime == Regime.PL
    theta = theory.theta if theory is not None and method.variant in (Variant.EF21, Variant.EF21_PP) else None

    def lyapunov_of(report: RoundReport) -> float | None:
        if theta is None:
            return None
        return lyapunov_value(report.f, report.G_t, theta, gamma, pl=pl)

    logger.info("Starting run: %s gamma=%.6g seed=%d", header["method"], gamma, method.seed)
    coordinator = _build_coordinator(cfg)
    streams = RandomStreams.from_seed(method.seed, obj.n_clients)
    x0 = np.zeros(obj.dimension) if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    ledger = _Ledger(obj)

    def accept(row: RecordRow, force: bool) -> bool:
        coordinator.check_record(_halt_record(row, obj.n_clients), round_index=row.t)
        halted = coordinator.is_stopped()
        if force or halted or row.t % cfg.record_every == 0:
            record.rows.append(row)
            logger.debug("t=%d f=%.10g |grad|^2=%.4g G=%.4g", row.t, row.f, row.grad_norm_sq, row.G_t)
        return halted

    try:
        state = init_state(method, obj, x0, streams)
        halted = False
        for _ in range(cfg.max_rounds):
            report = step(method, obj, state, streams)
            if accept(ledger.row(report, lyapunov_of(report)), force=False):
                halted = True
                break
            ledger.charge(report)
        if not halted:
            terminal = observe(method, obj, state)
            halted = accept(ledger.row(terminal, lyapunov_of(terminal)), force=True)
    except DivergenceError as exc:
        logger.warning("Run diverged at round %d: %s", exc.round_index, exc)
        record.status = RunStatus.DIVERGED
        record.halt_reason = {"plugin": "divergence", "round_index": exc.round_index}
        return record

    reason = coordinator.get_reason()
    record.halt_reason = reason
    if reason and reason.get("plugin") == CONVERGENCE_HALT:
        record.status = RunStatus.CONVERGED
    else:
        record.status = RunStatus.BUDGET_EXHAUSTED
    logger.info("Run finished: status=%s rounds=%d", record.status, record.rounds)
    return record


__all__ = [
    "DEFAULT_TOLERANCE",
    "RunConfig",
    "StepsizeMode",
    "StepsizeRule",
    "build_header",
    "resolve_gamma",
    "resolve_theory",
    "run",
    "stepsize_inputs",
]
