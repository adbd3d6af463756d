"""Single-process simulation of one master/worker communication round per method variant.

A round measures diagnostics at the current iterate ``x^t``, moves the master to
``x^{t+1}``, lets each (participating) worker compress the difference between its
new target and its shift, and aggregates the compressed messages into the
master estimate ``g^{t+1}``. Worker loops run in client order so every sum is
formed in a fixed order and runs are bit-reproducible.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np

from ef21sim.core.compression import CompressedDelta, compress, decompress, is_lossless, shift_update
from ef21sim.core.compression.contraction import ContractionParams
from ef21sim.core.exceptions import ContractViolation, DivergenceError, UnsupportedVariantError
from ef21sim.core.methods.config import InitKind, MethodConfig, Variant
from ef21sim.core.methods.state import MethodState, RoundReport
from ef21sim.core.problems import (
    Objective,
    batch_grad_diff,
    full_grad,
    loss,
    mapping_from_grad,
    ordered_mean,
    project_domain,
    prox,
    regularizer_value,
    stoch_grad,
)
from ef21sim.core.randomness import RandomStreams, bernoulli

logger = logging.getLogger(__name__)

_LYAPUNOV_VARIANTS = (Variant.EF21, Variant.EF21_PP)


def _check_dimensions(cfg: MethodConfig, obj: Objective, x0: np.ndarray) -> np.ndarray:
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim != 1 or x.shape[0] != obj.dimension:
        raise ContractViolation(f"x0 must have dimension {obj.dimension}, got shape {x.shape}")
    if cfg.dimension != obj.dimension:
        raise ContractViolation(
            f"compressor dimension {cfg.dimension} does not match the objective dimension {obj.dimension}"
        )
    if cfg.batch_sizes is not None and len(cfg.batch_sizes) != obj.n_clients:
        raise ContractViolation(f"expected {obj.n_clients} batch sizes, got {len(cfg.batch_sizes)}")
    if cfg.page_probabilities is not None and len(cfg.page_probabilities) != obj.n_clients:
        raise ContractViolation(f"expected {obj.n_clients} PAGE probabilities, got {len(cfg.page_probabilities)}")
    return x


def _require_finite(round_index: int, *values: float | np.ndarray) -> None:
    for value in values:
        if not np.all(np.isfinite(value)):
            raise DivergenceError(f"non-finite value at round {round_index}", round_index=round_index)


def init_state(
    cfg: MethodConfig,
    obj: Objective,
    x0: np.ndarray,
    streams: RandomStreams | None = None,
) -> MethodState:
    """Initial shifts ``g_i^0`` and the variant's auxiliary state at ``x0``."""
    x = _check_dimensions(cfg, obj, x0)
    if cfg.variant == Variant.EF21_PROX:
        x = project_domain(cfg.regularizer, x)
    if streams is None:
        streams = RandomStreams.from_seed(cfg.seed, obj.n_clients)

    with np.errstate(all="ignore"):
        grads = [full_grad(obj, x, client) for client in range(obj.n_clients)]
        if cfg.init == InitKind.EXACT_GRAD:
            shifts = [grad.copy() for grad in grads]
        elif cfg.init == InitKind.COMPRESSED_GRAD:
            shifts = [
                decompress(compress(cfg.compressor, grad, streams.compress[client]))
                for client, grad in enumerate(grads)
            ]
        else:
            shifts = [np.zeros(obj.dimension) for _ in grads]
        g = ordered_mean(shifts)
    _require_finite(0, x, g, *grads)

    state = MethodState(x=x, g_i=shifts, g=g)
    if cfg.variant == Variant.EF21_PAGE:
        if cfg.init == InitKind.ZERO:
            state.v_i = [np.zeros(obj.dimension) for _ in grads]
        else:
            state.v_i = [grad.copy() for grad in grads]
    elif cfg.variant == Variant.EF21_BC:
        state.g_tilde = g
        state.g = g.copy()
        state.g_worker = g.copy()
    elif cfg.variant == Variant.EF21_HB:
        state.momentum = g.copy()
    return state


def _measure(cfg: MethodConfig, obj: Objective, state: MethodState) -> tuple[float, float, float]:
    """``(f, squared stationarity measure, G^t)`` at the current iterate."""
    x = state.x
    grads = [full_grad(obj, x, client) for client in range(obj.n_clients)]
    grad = ordered_mean(grads)
    value = loss(obj, x)
    if cfg.variant == Variant.EF21_PROX:
        value += regularizer_value(cfg.regularizer, x)
        measure = mapping_from_grad(cfg.regularizer, x, grad, cfg.gamma)
    else:
        measure = grad
    shift_error = 0.0
    for grad_i, shift in zip(grads, state.g_i):
        residual = grad_i - shift
        shift_error += float(residual @ residual)
    return value, float(measure @ measure), shift_error / obj.n_clients


def _participants(cfg: MethodConfig, obj: Objective, streams: RandomStreams) -> list[int]:
    if cfg.variant != Variant.EF21_PP:
        return list(range(obj.n_clients))
    return [client for client in range(obj.n_clients) if bernoulli(streams.participation, cfg.participation)]


def _page_coins(cfg: MethodConfig, participants: Sequence[int], streams: RandomStreams) -> dict[int, bool]:
    assert cfg.page_probabilities is not None
    if cfg.page_shared_coin:
        coin = bernoulli(streams.shared_coin, cfg.page_probabilities[0])
        return {client: coin for client in participants}
    return {client: bernoulli(streams.coin[client], cfg.page_probabilities[client]) for client in participants}


def _targets(
    cfg: MethodConfig,
    obj: Objective,
    state: MethodState,
    x_new: np.ndarray,
    x_old: np.ndarray,
    participants: Sequence[int],
    streams: RandomStreams,
) -> tuple[dict[int, np.ndarray], list[int]]:
    """Each participant's new local gradient estimate and its sample-gradient cost."""
    evals = [0] * obj.n_clients
    targets: dict[int, np.ndarray] = {}
    if cfg.variant == Variant.EF21_SGD:
        assert cfg.batch_sizes is not None
        for client in participants:
            tau = cfg.batch_sizes[client]
            targets[client] = stoch_grad(obj, x_new, client, tau, streams.sample[client])
            evals[client] = tau
    elif cfg.variant == Variant.EF21_PAGE:
        assert cfg.batch_sizes is not None and state.v_i is not None
        coins = _page_coins(cfg, participants, streams)
        for client in participants:
            if coins[client]:
                estimate = full_grad(obj, x_new, client)
                evals[client] = obj.shards[client].n_samples
            else:
                tau = cfg.batch_sizes[client]
                diff = batch_grad_diff(obj, x_new, x_old, client, tau, streams.sample[client])
                estimate = state.v_i[client] + diff
                evals[client] = 2 * tau
            state.v_i[client] = estimate
            targets[client] = estimate
    else:
        for client in participants:
            targets[client] = full_grad(obj, x_new, client)
            evals[client] = obj.shards[client].n_samples
    return targets, evals


def _aggregate(
    current: np.ndarray,
    shifts: Sequence[np.ndarray],
    deltas: Iterable[CompressedDelta],
    n: int,
    lossless: bool,
) -> np.ndarray:
    """Master update ``g + (1/n) sum_i c_i``; a lossless compressor yields the exact shift mean."""
    if lossless:
        return ordered_mean(shifts)
    total = np.zeros_like(current)
    for delta in deltas:
        total[delta.indices] += delta.values
    return current + total / n


def step(cfg: MethodConfig, obj: Objective, state: MethodState, streams: RandomStreams) -> RoundReport:
    """Run one communication round in place; the report is measured at the pre-step iterate."""
    t = state.round_index
    n = obj.n_clients
    with np.errstate(all="ignore"):
        value, measure_sq, shift_error = _measure(cfg, obj, state)
        _require_finite(t, value, measure_sq)

        x_old = state.x
        if cfg.variant == Variant.EF21_HB:
            assert state.momentum is not None
            direction = state.momentum
        else:
            direction = state.g
        x_new = x_old - cfg.gamma * direction
        if cfg.variant == Variant.EF21_PROX and cfg.gamma > 0:
            x_new = prox(cfg.regularizer, x_new, cfg.gamma)
        _require_finite(t, x_new)

        participants = _participants(cfg, obj, streams)
        targets, evals = _targets(cfg, obj, state, x_new, x_old, participants, streams)

        lossless = is_lossless(cfg.compressor)
        deltas: list[CompressedDelta] = []
        bits_up = 0
        for client in participants:
            target = targets[client]
            delta = compress(cfg.compressor, target - state.g_i[client], streams.compress[client])
            state.g_i[client] = shift_update(state.g_i[client], target, delta, lossless)
            deltas.append(delta)
            bits_up += delta.bit_cost

        if cfg.variant == Variant.EF21_BC:
            assert cfg.master_compressor is not None and state.g_tilde is not None and state.g_worker is not None
            state.g_tilde = _aggregate(state.g_tilde, state.g_i, deltas, n, lossless)
            broadcast = compress(cfg.master_compressor, state.g_tilde - state.g, streams.master_compress)
            master_lossless = is_lossless(cfg.master_compressor)
            state.g = shift_update(state.g, state.g_tilde, broadcast, master_lossless)
            state.g_worker = shift_update(state.g_worker, state.g_tilde, broadcast, master_lossless)
            bits_down = broadcast.bit_cost
        else:
            state.g = _aggregate(state.g, state.g_i, deltas, n, lossless)
            bits_down = obj.dimension * cfg.compressor.value_bits

        if cfg.variant == Variant.EF21_HB:
            assert state.momentum is not None
            state.momentum = cfg.momentum * state.momentum + state.g

        movement = x_new - x_old
        step_norm_sq = float(movement @ movement)
        state.x = x_new
    _require_finite(t, state.g, *state.g_i)

    state.round_index = t + 1
    return RoundReport(
        t=t,
        f=value,
        grad_norm_sq=measure_sq,
        G_t=shift_error,
        bits_up=bits_up,
        bits_down=bits_down,
        grad_evals=tuple(evals),
        step_norm_sq=step_norm_sq,
    )


def observe(cfg: MethodConfig, obj: Objective, state: MethodState) -> RoundReport:
    """Diagnostics at the current iterate without running a round."""
    with np.errstate(all="ignore"):
        value, measure_sq, shift_error = _measure(cfg, obj, state)
    _require_finite(state.round_index, value, measure_sq)
    return RoundReport(
        t=state.round_index,
        f=value,
        grad_norm_sq=measure_sq,
        G_t=shift_error,
        grad_evals=(0,) * obj.n_clients,
    )


def lyapunov_value(f: float, shift_error: float, theta: float, gamma: float, *, pl: bool = False) -> float:
    """``f + gamma/(2 theta) G`` (nonconvex) or ``f + gamma/theta G`` (PL)."""
    weight = gamma / theta if pl else gamma / (2.0 * theta)
    return f + weight * shift_error


def lyapunov(
    cfg: MethodConfig,
    obj: Objective,
    state: MethodState,
    params: ContractionParams | float,
    gamma: float,
    *,
    pl: bool = False,
) -> float:
    """Monitored potential at the current iterate, without the constant ``f^inf`` offset.

    ``params`` supplies ``theta`` (for partial participation pass ``theta_p``).
    """
    if cfg.variant not in _LYAPUNOV_VARIANTS:
        raise UnsupportedVariantError(f"no Lyapunov diagnostic for {cfg.variant}", variant=str(cfg.variant))
    theta = params.theta if isinstance(params, ContractionParams) else float(params)
    report = observe(cfg, obj, state)
    return lyapunov_value(report.f, report.G_t, theta, gamma, pl=pl)


def epoch_count(reports: Iterable[RoundReport], obj: Objective) -> float:
    """Sample-gradient evaluations per local dataset size, averaged over clients."""
    totals = [0] * obj.n_clients
    for report in reports:
        for client, evals in enumerate(report.grad_evals):
            totals[client] += evals
    return sum(total / size for total, size in zip(totals, obj.sizes)) / obj.n_clients


def shift_consistency_error(state: MethodState) -> float:
    """Relative gap between the master estimate and the recomputed mean of the worker shifts."""
    master = state.g_tilde if state.g_tilde is not None else state.g
    mean = ordered_mean(state.g_i)
    scale = max(float(np.linalg.norm(mean)), math.ulp(1.0))
    return float(np.linalg.norm(master - mean)) / scale


__all__ = [
    "epoch_count",
    "init_state",
    "lyapunov",
    "lyapunov_value",
    "observe",
    "shift_consistency_error",
    "step",
]
