"""Built-in invariant suites behind ``ef21sim verify``.

Each suite returns a list of :class:`CheckResult`; a suite passes when every
check passes. Suites build their own small problems from fixed seeds so the
outcome does not depend on any settings file.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ef21sim.core.compression import CompressorSpec, contraction_params, contraction_samples
from ef21sim.core.exceptions import SimulationError
from ef21sim.core.methods import MethodConfig, RoundReport, Variant, init_state, observe, step
from ef21sim.core.problems import (
    ClientShard,
    Objective,
    ObjectiveKind,
    Regularizer,
    SmoothnessReport,
    batch_grad_diff_on,
    full_grad,
    full_objective_grad,
    loss,
    smoothness,
)
from ef21sim.core.randomness import RandomStreams, StreamRole, derive_stream
from ef21sim.core.theory import Regime, StepsizeInputs, ef21_gamma, theory_stepsize
from ef21sim.plugins.datasources import RawDataset, RawRow, parse_libsvm, partition, serialize_libsvm, shard_sizes, synth
from ef21sim.plugins.datasources.partition import dense_matrix

logger = logging.getLogger(__name__)

VERIFY_SEED = 20210
REDUCTION_ROUNDS = 100
LYAPUNOV_ROUNDS = 2000
ROUNDING_SLACK = 1e-12


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def format(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        suffix = f" {self.detail}" if self.detail else ""
        return f"{verdict} suite={self.suite} check={self.name}{suffix}"


@dataclass
class VerificationReport:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [result for result in self.results if not result.passed]

    def suites(self) -> list[str]:
        return list(dict.fromkeys(result.suite for result in self.results))


def _check(suite: str, name: str, passed: bool, detail: str = "") -> CheckResult:
    return CheckResult(suite=suite, name=name, passed=bool(passed), detail=detail)


# contraction -----------------------------------------------------------------


def contraction_suite(trials: int = 10_000, d: int = 100) -> list[CheckResult]:
    results = []
    for k in (1, 5, 50):
        spec = CompressorSpec.top_k(d, k)
        ratios = contraction_samples(spec, trials, d, derive_stream(VERIFY_SEED, StreamRole.DIAGNOSTIC, k))
        bound = 1.0 - k / d
        violations = int(np.sum(ratios > bound + ROUNDING_SLACK))
        results.append(
            _check("contraction", f"top_k_{k}", violations == 0, f"violations={violations} worst={ratios.max():.6g}")
        )

    k = 5
    spec = CompressorSpec.rand_k(d, k)
    ratios = contraction_samples(spec, trials, d, derive_stream(VERIFY_SEED, StreamRole.DIAGNOSTIC, d + k))
    kept = 1.0 - ratios
    sigma = float(kept.std(ddof=1)) / math.sqrt(trials)
    gap = abs(float(kept.mean()) - k / d)
    results.append(
        _check("contraction", f"rand_k_{k}", gap <= 3.0 * sigma, f"empirical={kept.mean():.6g} expected={k / d}")
    )
    return results


# gradients -------------------------------------------------------------------


def _central_difference(obj: Objective, x: np.ndarray, h: float) -> np.ndarray:
    grad = np.empty_like(x)
    for j in range(x.shape[0]):
        bump = np.zeros_like(x)
        bump[j] = h
        grad[j] = (loss(obj, x + bump) - loss(obj, x - bump)) / (2.0 * h)
    return grad


def gradient_suite(points: int = 100, d: int = 20, h: float = 1e-6, rel_tol: float = 1e-5) -> list[CheckResult]:
    results = []
    problems = {
        "logistic_nonconvex": synth("logistic", 60, d, 3, VERIFY_SEED, noise=0.1, lam=0.1),
        "least_squares": synth("least_squares", 60, d, 3, VERIFY_SEED, noise=0.1),
    }
    for name, obj in problems.items():
        rng = derive_stream(VERIFY_SEED, StreamRole.DIAGNOSTIC, len(name))
        worst = 0.0
        for _ in range(points):
            x = rng.standard_normal(d)
            analytic = full_objective_grad(obj, x)
            numeric = _central_difference(obj, x, h)
            scale = max(float(np.linalg.norm(analytic)), 1e-8)
            worst = max(worst, float(np.linalg.norm(analytic - numeric)) / scale)
        results.append(_check("gradients", name, worst <= rel_tol, f"worst_relative_error={worst:.3g}"))
    return results


# reductions ------------------------------------------------------------------


Trajectory = list[tuple[np.ndarray, np.ndarray]]


def _trajectory(cfg: MethodConfig, obj: Objective, x0: np.ndarray, rounds: int) -> Trajectory:
    streams = RandomStreams.from_seed(cfg.seed, obj.n_clients)
    state = init_state(cfg, obj, x0, streams)
    path = [(state.x.copy(), state.g.copy())]
    for _ in range(rounds):
        step(cfg, obj, state, streams)
        path.append((state.x.copy(), state.g.copy()))
    return path


def _gradient_descent(obj: Objective, x0: np.ndarray, gamma: float, rounds: int) -> list[np.ndarray]:
    x = np.array(x0, dtype=float, copy=True)
    path = [x.copy()]
    for _ in range(rounds):
        x = x - gamma * full_objective_grad(obj, x)
        path.append(x.copy())
    return path


def _max_deviation(left: Iterable[np.ndarray], right: Iterable[np.ndarray]) -> float:
    return max(float(np.max(np.abs(a - b))) for a, b in zip(left, right))


def reduction_suite(rounds: int = REDUCTION_ROUNDS) -> list[CheckResult]:
    obj = synth("logistic", 200, 20, 4, VERIFY_SEED, noise=0.5, lam=0.1)
    d = obj.dimension
    x0 = np.zeros(d)
    top_k = CompressorSpec.top_k(d, 2)
    identity = CompressorSpec.identity(d)
    gamma = ef21_gamma(StepsizeInputs(smoothness=smoothness(obj), alpha=2 / d))
    base = MethodConfig(Variant.EF21, top_k, gamma=gamma, seed=VERIFY_SEED)
    reference = _trajectory(base, obj, x0, rounds)

    results = []
    plain = _trajectory(MethodConfig(Variant.EF21, identity, gamma=gamma, seed=VERIFY_SEED), obj, x0, rounds)
    deviation = _max_deviation((x for x, _ in plain), _gradient_descent(obj, x0, gamma, rounds))
    results.append(_check("reductions", "identity_is_gradient_descent", deviation == 0.0, f"max_deviation={deviation}"))

    tau = (2,) * obj.n_clients
    variants: dict[str, MethodConfig] = {
        "hb_eta_0": MethodConfig(Variant.EF21_HB, top_k, gamma=gamma, seed=VERIFY_SEED, momentum=0.0),
        "prox_none": MethodConfig(Variant.EF21_PROX, top_k, gamma=gamma, seed=VERIFY_SEED, regularizer=Regularizer.none()),
        "pp_p_1": MethodConfig(Variant.EF21_PP, top_k, gamma=gamma, seed=VERIFY_SEED, participation=1.0),
        "page_p_1": MethodConfig(
            Variant.EF21_PAGE,
            top_k,
            gamma=gamma,
            seed=VERIFY_SEED,
            batch_sizes=tau,
            page_probabilities=(1.0,) * obj.n_clients,
        ),
        "bc_identity_master": MethodConfig(
            Variant.EF21_BC, top_k, gamma=gamma, seed=VERIFY_SEED, master_compressor=identity
        ),
        "compressed_init_k_d": MethodConfig(
            Variant.EF21, CompressorSpec.top_k(d, d), gamma=gamma, seed=VERIFY_SEED, init="compressed_grad"
        ),
    }
    for name, cfg in variants.items():
        expected = reference
        if name == "compressed_init_k_d":
            expected = _trajectory(MethodConfig(Variant.EF21, CompressorSpec.top_k(d, d), gamma=gamma), obj, x0, rounds)
        path = _trajectory(cfg, obj, x0, rounds)
        deviation = max(
            _max_deviation((x for x, _ in path), (x for x, _ in expected)),
            _max_deviation((g for _, g in path), (g for _, g in expected)),
        )
        results.append(_check("reductions", name, deviation == 0.0, f"max_deviation={deviation}"))
    return results


# hand trace ------------------------------------------------------------------


def hand_trace_suite() -> list[CheckResult]:
    """EF21 with a scaling compressor on ``f(x) = x^2 / 2``."""
    obj = Objective(ObjectiveKind.QUADRATIC, (ClientShard(features=np.ones((1, 1)), labels=np.zeros(1)),))
    cfg = MethodConfig(Variant.EF21, CompressorSpec.scale(1, 0.5), gamma=0.5, init="compressed_grad")
    path = _trajectory(cfg, obj, np.ones(1), 2)
    observed = [float(x[0]) for x, _ in path]
    shifts = [float(g[0]) for _, g in path[:2]]
    return [
        _check("hand_trace", "iterates", observed == [1.0, 0.75, 0.4375], f"x={observed}"),
        _check("hand_trace", "shifts", shifts == [0.5, 0.625], f"g={shifts}"),
    ]


# lyapunov --------------------------------------------------------------------


def lyapunov_suite(rounds: int = LYAPUNOV_ROUNDS) -> list[CheckResult]:
    obj = synth("logistic", 2000, 100, 20, VERIFY_SEED, noise=1.0, lam=0.1)
    d = obj.dimension
    spec = CompressorSpec.top_k(d, max(1, math.ceil(0.01 * d)))
    report = smoothness(obj)
    theory = theory_stepsize(Variant.EF21, StepsizeInputs(smoothness=report, alpha=spec.k / d))
    cfg = MethodConfig(Variant.EF21, spec, gamma=theory.gamma, seed=VERIFY_SEED)
    streams = RandomStreams.from_seed(cfg.seed, obj.n_clients)
    state = init_state(cfg, obj, np.zeros(d), streams)

    reports: list[RoundReport] = [step(cfg, obj, state, streams) for _ in range(rounds)]
    reports.append(observe(cfg, obj, state))
    weight = theory.gamma / (2.0 * theory.theta)
    potential = [r.f + weight * r.G_t for r in reports]

    increases = sum(1 for a, b in zip(potential, potential[1:]) if b > a + ROUNDING_SLACK)
    recursion = 0
    for current, following in zip(reports, reports[1:]):
        assert current.step_norm_sq is not None
        bound = (1.0 - theory.theta) * current.G_t + theory.beta * report.L_tilde**2 * current.step_norm_sq
        if following.G_t > bound + ROUNDING_SLACK:
            recursion += 1
    return [
        _check("lyapunov", "monotone", increases == 0, f"rounds={rounds} increases={increases}"),
        _check("lyapunov", "shift_recursion", recursion == 0, f"violations={recursion}"),
    ]


# stepsizes -------------------------------------------------------------------


def _unit_report(n: int = 2) -> SmoothnessReport:
    return SmoothnessReport(L_i=(1.0,) * n, L=1.0, L_tilde=1.0, script_L_i=(1.0,) * n)


def _grid_inputs(variant: Variant, alpha: float, mu: float | None) -> StepsizeInputs:
    report = _unit_report()
    extra: dict[str, object] = {}
    if variant == Variant.EF21_PAGE:
        extra = {"tau": (2, 2), "m": (8, 8)}
    elif variant == Variant.EF21_PP:
        extra = {"p": 0.5}
    elif variant == Variant.EF21_BC:
        extra = {"alpha_w": alpha, "alpha_m": alpha}
    elif variant == Variant.EF21_HB:
        extra = {"eta": 0.5}
    return StepsizeInputs(smoothness=report, alpha=alpha, mu=mu, **extra)  # type: ignore[arg-type]


def stepsize_suite(points: int = 20) -> list[CheckResult]:
    results = []
    alphas = np.linspace(1.0 / points, 1.0, points)
    for variant in Variant:
        for regime in (Regime.NONCONVEX, Regime.PL):
            if variant == Variant.EF21_HB and regime == Regime.PL:
                continue
            mu = 0.1 if regime == Regime.PL else None
            failures = []
            for alpha in alphas:
                try:
                    gamma = theory_stepsize(variant, _grid_inputs(variant, float(alpha), mu), regime).gamma
                except SimulationError as exc:
                    failures.append(f"alpha={alpha:.3g}:{type(exc).__name__}")
                    continue
                if not gamma > 0.0:
                    failures.append(f"alpha={alpha:.3g}:gamma={gamma}")
            results.append(
                _check("stepsizes", f"{variant}_{regime}_grid", not failures, " ".join(failures[:3]))
            )

    for variant in Variant:
        inputs = StepsizeInputs(smoothness=_unit_report(), alpha=1.0, eta=0.0)
        if variant == Variant.EF21_PAGE:
            inputs = StepsizeInputs(smoothness=_unit_report(), page_p=(1.0, 1.0))
        elif variant == Variant.EF21_PP:
            inputs = StepsizeInputs(smoothness=_unit_report(), p=1.0)
        elif variant == Variant.EF21_BC:
            inputs = StepsizeInputs(smoothness=_unit_report(), alpha_w=1.0, alpha_m=1.0)
        gamma = theory_stepsize(variant, inputs).gamma
        results.append(_check("stepsizes", f"{variant}_lossless_is_1_over_L", math.isclose(gamma, 1.0), f"gamma={gamma}"))

    pinned = theory_stepsize(Variant.EF21, StepsizeInputs(smoothness=_unit_report(), alpha=0.5)).gamma
    results.append(_check("stepsizes", "ef21_alpha_half", round(pinned, 6) == 0.292893, f"gamma={pinned:.6f}"))
    theta_p = theory_stepsize(Variant.EF21_PP, StepsizeInputs(smoothness=_unit_report(), alpha=0.5, p=0.5)).theta
    results.append(_check("stepsizes", "pp_theta_p", round(theta_p, 6) == 0.125, f"theta_p={theta_p:.6f}"))
    params = contraction_params(0.5)
    results.append(
        _check("stepsizes", "optimal_s", math.isclose(params.s, math.sqrt(2.0) - 1.0), f"s={params.s:.6f}")
    )
    return results


# page enumeration ------------------------------------------------------------


def page_suite(m: int = 4, tau: int = 2, d: int = 6) -> list[CheckResult]:
    obj = synth("logistic", m, d, 1, VERIFY_SEED, noise=0.3, lam=0.1)
    rng = derive_stream(VERIFY_SEED, StreamRole.DIAGNOSTIC, m)
    x_old = rng.standard_normal(d)
    x_new = x_old + 0.1 * rng.standard_normal(d)
    subsets = list(itertools.combinations(range(m), tau))
    expected = full_grad(obj, x_new, 0) - full_grad(obj, x_old, 0)
    average = sum(batch_grad_diff_on(obj, x_new, x_old, 0, list(subset)) for subset in subsets) / len(subsets)
    error = float(np.max(np.abs(average - expected)))
    return [_check("page", "enumerated_expectation", error <= 1e-12, f"subsets={len(subsets)} error={error:.3g}")]


# data ------------------------------------------------------------------------


def _random_raw(rows: int, d: int) -> RawDataset:
    rng = derive_stream(VERIFY_SEED, StreamRole.DIAGNOSTIC, rows, d)
    raw_rows = []
    for _ in range(rows):
        present = np.sort(rng.choice(d, size=int(rng.integers(1, d + 1)), replace=False)) + 1
        features = tuple((int(j), float(rng.standard_normal())) for j in present)
        raw_rows.append(RawRow(label=float(rng.choice([-1.0, 1.0])), features=features))
    inferred = max(row.features[-1][0] for row in raw_rows)
    return RawDataset(rows=tuple(raw_rows), inferred_dim=inferred)


def data_suite() -> list[CheckResult]:
    raw = _random_raw(57, 12)
    round_trip = parse_libsvm(serialize_libsvm(raw))
    shards = partition(raw, 5)
    stacked = np.vstack([shard.features for shard in shards])
    labels = np.concatenate([shard.labels for shard in shards])
    cover = np.array_equal(stacked, dense_matrix(raw, raw.inferred_dim)) and np.array_equal(
        labels, [row.label for row in raw.rows]
    )
    sizes = shard_sizes(8120, 20)
    return [
        _check("data", "libsvm_round_trip", round_trip == raw),
        _check("data", "partition_cover", cover, f"sizes={[shard.n_samples for shard in shards]}"),
        _check("data", "mushrooms_shape", set(sizes) == {406} and len(sizes) == 20),
    ]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "contraction": contraction_suite,
    "gradients": gradient_suite,
    "reductions": reduction_suite,
    "hand_trace": hand_trace_suite,
    "lyapunov": lyapunov_suite,
    "stepsizes": stepsize_suite,
    "page": page_suite,
    "data": data_suite,
}


def run_suites(names: Sequence[str] | None = None) -> VerificationReport:
    """Run the named suites (all of them by default) in registration order."""
    selected = list(SUITES) if not names else list(names)
    unknown = [name for name in selected if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown verification suite(s): {', '.join(unknown)}")
    report = VerificationReport()
    for name in selected:
        logger.info("Running verification suite '%s'", name)
        suite_results = SUITES[name]()
        for result in suite_results:
            log = logger.info if result.passed else logger.warning
            log(result.format())
        report.results.extend(suite_results)
    return report


__all__ = [
    "SUITES",
    "CheckResult",
    "VerificationReport",
    "run_suites",
]
