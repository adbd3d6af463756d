"""Tests for the method engines: hand traces, reductions and accounting."""

from dataclasses import replace

import numpy as np
import pytest

from ef21sim.core.compression import CompressorSpec, alpha_of, contraction_params
from ef21sim.core.exceptions import DivergenceError, UnsupportedVariantError
from ef21sim.core.methods import (
    InitKind,
    MethodConfig,
    Variant,
    epoch_count,
    init_state,
    lyapunov,
    observe,
    shift_consistency_error,
    step,
)
from ef21sim.core.problems import Regularizer, full_objective_grad, smoothness
from ef21sim.core.randomness import RandomStreams
from ef21sim.core.theory import StepsizeInputs, ef21_gamma


def _trajectory(cfg, obj, rounds, x0=None):
    x0 = np.zeros(obj.dimension) if x0 is None else x0
    streams = RandomStreams.from_seed(cfg.seed, obj.n_clients)
    state = init_state(cfg, obj, x0, streams)
    xs = [state.x.copy()]
    reports = []
    for _ in range(rounds):
        reports.append(step(cfg, obj, state, streams))
        xs.append(state.x.copy())
    return xs, reports, state


def _assert_same_iterates(first, second):
    assert len(first) == len(second)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


@pytest.fixture
def gamma(small_logistic):
    """Theory stepsize for top-2 on the small logistic problem."""
    spec = CompressorSpec.top_k(small_logistic.dimension, 2)
    return ef21_gamma(StepsizeInputs(smoothness(small_logistic), alpha=alpha_of(spec)))


def _ef21(obj, gamma, **overrides):
    options = {
        "variant": Variant.EF21,
        "compressor": CompressorSpec.top_k(obj.dimension, 2),
        "gamma": gamma,
    }
    options.update(overrides)
    return MethodConfig(**options)


def test_hand_trace_scale_half(half_square):
    """scale(0.5) on x^2/2 from x = 1 with gamma = 0.5 and a compressed start."""
    cfg = MethodConfig(
        variant=Variant.EF21,
        compressor=CompressorSpec.scale(1, 0.5),
        gamma=0.5,
        init=InitKind.COMPRESSED_GRAD,
    )
    streams = RandomStreams.from_seed(0, 1)
    state = init_state(cfg, half_square, np.array([1.0]), streams)
    assert state.g[0] == pytest.approx(0.5)

    step(cfg, half_square, state, streams)
    assert state.x[0] == pytest.approx(0.75)
    assert state.g[0] == pytest.approx(0.625)

    step(cfg, half_square, state, streams)
    assert state.x[0] == pytest.approx(0.4375)


def test_identity_compressor_is_gradient_descent(small_logistic, gamma):
    """Lossless EF21 reproduces gradient descent bit for bit."""
    cfg = _ef21(small_logistic, gamma, compressor=CompressorSpec.identity(small_logistic.dimension))
    xs, _, _ = _trajectory(cfg, small_logistic, 30)

    x = np.zeros(small_logistic.dimension)
    expected = [x.copy()]
    for _ in range(30):
        x = x - gamma * full_objective_grad(small_logistic, x)
        expected.append(x.copy())
    _assert_same_iterates(xs, expected)


@pytest.mark.parametrize(
    "overrides",
    [
        {"variant": Variant.EF21_HB, "momentum": 0.0},
        {"variant": Variant.EF21_PROX, "regularizer": Regularizer.none()},
        {"variant": Variant.EF21_PP, "participation": 1.0},
        {"variant": Variant.EF21_PAGE, "batch_sizes": (3, 3, 3, 3), "page_probabilities": (1.0,) * 4},
        {"variant": Variant.EF21_BC, "master_compressor": CompressorSpec.identity(10)},
        {"init": InitKind.COMPRESSED_GRAD, "compressor": CompressorSpec.top_k(10, 10)},
    ],
    ids=["hb_eta_0", "prox_none", "pp_p_1", "page_p_1", "bc_identity_master", "compressed_init_k_d"],
)
def test_degenerate_variants_reduce_to_ef21(small_logistic, gamma, overrides):
    """Each variant at its degenerate setting follows the plain EF21 iterates exactly."""
    base = _ef21(small_logistic, gamma, compressor=overrides.get("compressor", CompressorSpec.top_k(10, 2)))
    variant = _ef21(small_logistic, gamma, **overrides)
    reference, _, _ = _trajectory(base, small_logistic, 40)
    candidate, _, _ = _trajectory(variant, small_logistic, 40)
    _assert_same_iterates(candidate, reference)


def test_same_seed_reproduces_randomized_run(small_logistic, gamma):
    """rand_k with stochastic gradients is reproducible from the seed."""
    cfg = MethodConfig(
        variant=Variant.EF21_SGD,
        compressor=CompressorSpec.rand_k(10, 3),
        gamma=gamma / 4,
        seed=17,
        batch_sizes=(5, 5, 5, 5),
    )
    first, _, _ = _trajectory(cfg, small_logistic, 25)
    second, _, _ = _trajectory(cfg, small_logistic, 25)
    _assert_same_iterates(first, second)


def test_different_seeds_differ(small_logistic, gamma):
    """Changing the seed changes a randomized trajectory."""
    cfg = MethodConfig(variant=Variant.EF21, compressor=CompressorSpec.rand_k(10, 3), gamma=gamma / 4, seed=1)
    first, _, _ = _trajectory(cfg, small_logistic, 5)
    second, _, _ = _trajectory(replace(cfg, seed=2), small_logistic, 5)
    assert not np.array_equal(first[-1], second[-1])


def test_round_costs(small_logistic, gamma):
    """Uplink bits are n k (64 + ceil log2 d); downlink is a dense vector."""
    _, reports, _ = _trajectory(_ef21(small_logistic, gamma), small_logistic, 1)
    report = reports[0]
    assert report.bits_up == 4 * 2 * (64 + 4)
    assert report.bits_down == 10 * 64
    assert report.grad_evals == small_logistic.sizes
    assert report.t == 0


def test_partial_participation_charges_participants(small_logistic, gamma):
    """Uplink bits count only the workers that took part."""
    cfg = _ef21(small_logistic, gamma / 2, variant=Variant.EF21_PP, participation=0.5, seed=3)
    _, reports, _ = _trajectory(cfg, small_logistic, 50)
    per_message = 2 * (64 + 4)
    counts = [report.bits_up // per_message for report in reports]
    assert all(0 <= count <= 4 for count in counts)
    assert 0 < np.mean(counts) < 4
    for report, count in zip(reports, counts):
        assert sum(1 for evals in report.grad_evals if evals) == count


def test_page_epochs(small_logistic, gamma):
    """PAGE charges 2 tau per minibatch round and N_i per full pass."""
    cfg = _ef21(
        small_logistic,
        gamma / 4,
        variant=Variant.EF21_PAGE,
        batch_sizes=(3, 3, 3, 3),
        page_probabilities=(0.25,) * 4,
        seed=9,
    )
    _, reports, _ = _trajectory(cfg, small_logistic, 20)
    for report in reports:
        assert all(evals in (6, 30) for evals in report.grad_evals)


def test_page_shared_coin_is_common(small_logistic, gamma):
    """With a shared coin every worker takes the same branch."""
    cfg = _ef21(
        small_logistic,
        gamma / 4,
        variant=Variant.EF21_PAGE,
        batch_sizes=(3, 3, 3, 3),
        page_probabilities=(0.3,) * 4,
        page_shared_coin=True,
        seed=4,
    )
    _, reports, _ = _trajectory(cfg, small_logistic, 30)
    for report in reports:
        assert len(set(report.grad_evals)) == 1


def test_epoch_count(small_logistic, gamma):
    """Full-gradient rounds cost one epoch each."""
    _, reports, _ = _trajectory(_ef21(small_logistic, gamma), small_logistic, 3)
    assert epoch_count(reports, small_logistic) == pytest.approx(3.0)


def test_shift_consistency(small_logistic, gamma):
    """The master estimate stays equal to the mean of the worker shifts."""
    _, _, state = _trajectory(_ef21(small_logistic, gamma), small_logistic, 200)
    assert shift_consistency_error(state) < 1e-10


def test_bc_worker_and_master_copies_agree(small_logistic, gamma):
    """Master and worker copies of the broadcast estimate stay identical."""
    cfg = _ef21(small_logistic, gamma / 8, variant=Variant.EF21_BC, master_compressor=CompressorSpec.top_k(10, 3))
    _, reports, state = _trajectory(cfg, small_logistic, 30)
    np.testing.assert_array_equal(state.g, state.g_worker)
    assert all(report.bits_down == 3 * (64 + 4) for report in reports)


def test_lyapunov_nonincreasing(small_logistic, gamma):
    """With the theory stepsize the monitored potential never increases."""
    cfg = _ef21(small_logistic, gamma)
    params = contraction_params(alpha_of(cfg.compressor))
    streams = RandomStreams.from_seed(0, small_logistic.n_clients)
    state = init_state(cfg, small_logistic, np.zeros(10), streams)
    values = [lyapunov(cfg, small_logistic, state, params, gamma)]
    for _ in range(100):
        step(cfg, small_logistic, state, streams)
        values.append(lyapunov(cfg, small_logistic, state, params, gamma))
    for before, after in zip(values, values[1:]):
        assert after <= before + 1e-12 * abs(before)


def test_lyapunov_unsupported_variant(small_logistic, gamma):
    """The momentum method has no monitored potential."""
    cfg = _ef21(small_logistic, gamma, variant=Variant.EF21_HB, momentum=0.5)
    state = init_state(cfg, small_logistic, np.zeros(10))
    with pytest.raises(UnsupportedVariantError):
        lyapunov(cfg, small_logistic, state, 0.5, gamma)


def test_observe_reports_current_point(half_square):
    """Observation measures f and the gradient without moving."""
    cfg = MethodConfig(variant=Variant.EF21, compressor=CompressorSpec.identity(1), gamma=0.5)
    state = init_state(cfg, half_square, np.array([2.0]))
    report = observe(cfg, half_square, state)
    assert report.f == pytest.approx(2.0)
    assert report.grad_norm_sq == pytest.approx(4.0)
    assert report.G_t == 0.0
    np.testing.assert_array_equal(state.x, [2.0])


def test_divergence_detected(half_square):
    """A huge stepsize ends in DivergenceError with the failing round."""
    cfg = MethodConfig(variant=Variant.EF21, compressor=CompressorSpec.identity(1), gamma=1e6)
    streams = RandomStreams.from_seed(0, 1)
    state = init_state(cfg, half_square, np.array([1.0]), streams)
    with pytest.raises(DivergenceError) as excinfo:
        for _ in range(200):
            step(cfg, half_square, state, streams)
    assert excinfo.value.round_index > 0


def test_zero_init(small_logistic, gamma):
    """Zero initialization starts with G equal to the mean squared client gradient."""
    cfg = _ef21(small_logistic, gamma, init=InitKind.ZERO)
    state = init_state(cfg, small_logistic, np.zeros(10))
    np.testing.assert_array_equal(state.g, np.zeros(10))
    assert observe(cfg, small_logistic, state).G_t > 0.0


def test_prox_start_is_projected_into_the_box(small_logistic, gamma):
    """A start outside the box is moved onto it and the first round stays finite."""
    cfg = _ef21(small_logistic, gamma, variant=Variant.EF21_PROX, regularizer=Regularizer.box(0.5, 1.0))
    xs, reports, _ = _trajectory(cfg, small_logistic, 3)
    np.testing.assert_array_equal(xs[0], np.full(small_logistic.dimension, 0.5))
    assert np.isfinite(reports[0].f)
    assert all(np.all((x >= 0.5) & (x <= 1.0)) for x in xs)


def test_prox_with_zero_stepsize_stays_put(small_logistic):
    """gamma = 0 leaves the iterate fixed and reports the limiting mapping."""
    cfg = _ef21(small_logistic, 0.0, variant=Variant.EF21_PROX, regularizer=Regularizer.l1(0.01))
    x0 = np.linspace(-1.0, 1.0, small_logistic.dimension)
    xs, reports, _ = _trajectory(cfg, small_logistic, 4, x0=x0)
    for x in xs:
        np.testing.assert_array_equal(x, x0)
    assert len({report.grad_norm_sq for report in reports}) == 1
    assert np.isfinite(reports[0].grad_norm_sq)


def test_heavy_ball_without_momentum_follows_the_estimate(small_logistic, gamma):
    """With eta = 0 the momentum buffer equals g after every round."""
    cfg = _ef21(small_logistic, gamma, variant=Variant.EF21_HB, momentum=0.0)
    streams = RandomStreams.from_seed(cfg.seed, small_logistic.n_clients)
    state = init_state(cfg, small_logistic, np.zeros(small_logistic.dimension), streams)
    for _ in range(5):
        step(cfg, small_logistic, state, streams)
        np.testing.assert_array_equal(state.momentum, state.g)
