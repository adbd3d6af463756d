"""Tuned comparisons between variants: variance reduction, partial participation and broadcast compression."""

import pytest

from ef21sim.core.compression import CompressorSpec
from ef21sim.core.methods import MethodConfig, Variant
from ef21sim.core.sim import RunConfig, RunStatus, StepsizeRule, resolve_theory
from ef21sim.core.theory import default_page_probabilities
from ef21sim.orchestrators.tuning import tune
from ef21sim.plugins.datasources import synth

MULTIPLIERS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def _reference_rule(obj, compressor):
    """Fixed stepsize equal to the EF21 theory value, so every method is tuned on the same grid."""
    base = RunConfig(objective=obj, method=MethodConfig(variant=Variant.EF21, compressor=compressor))
    return StepsizeRule(mode="fixed", value=resolve_theory(base).gamma)


def _tuned(obj, method, rule, multipliers=MULTIPLIERS, **options):
    return tune(RunConfig(objective=obj, method=method, stepsize=rule, **options), multipliers).best_record


@pytest.fixture(scope="module")
def stochastic_problem():
    """Non-separable logistic problem with 400 rows per client."""
    return synth("logistic", 1600, 20, 4, seed=21, noise=4.5, lam=0.1)


@pytest.fixture(scope="module")
def federated_problem():
    """Twenty clients and a 40-dimensional model."""
    return synth("logistic", 2000, 40, 20, seed=23, noise=6.0, lam=0.1)


@pytest.mark.slow
@pytest.mark.integration
def test_page_reaches_tolerance_where_sgd_stalls(stochastic_problem):
    """Within 50 epochs PAGE reaches 1e-7 while SGD with the same batch stays above 1e-5."""
    obj = stochastic_problem
    compressor = CompressorSpec.top_k(obj.dimension, 2)
    rule = _reference_rule(obj, compressor)
    tau = tuple(max(1, int(0.015 * size)) for size in obj.sizes)

    full = _tuned(obj, MethodConfig(variant=Variant.EF21, compressor=compressor), rule, max_rounds=3000, tolerance=1e-7)
    assert full.status == RunStatus.CONVERGED

    budget = {"max_rounds": 20_000, "max_epochs": 50.0, "tolerance": 1e-7}
    page = MethodConfig(
        variant=Variant.EF21_PAGE,
        compressor=compressor,
        batch_sizes=tau,
        page_probabilities=default_page_probabilities(tau, obj.sizes),
    )
    page_record = _tuned(obj, page, rule, **budget)
    assert page_record.status == RunStatus.CONVERGED
    assert page_record.rows[-1].epochs_cum <= 50.0

    sgd = MethodConfig(variant=Variant.EF21_SGD, compressor=compressor, batch_sizes=tau)
    sgd_record = _tuned(obj, sgd, rule, **budget)
    assert sgd_record.status == RunStatus.BUDGET_EXHAUSTED
    assert min(row.grad_norm_sq for row in sgd_record.rows) > 1e-5


@pytest.mark.slow
@pytest.mark.integration
def test_partial_participation_trades_rounds_for_bits(federated_problem):
    """PP with p = 1/4 needs more rounds than EF21 but fewer uplink bits per client to reach 1e-5."""
    obj = federated_problem
    compressor = CompressorSpec.top_k(obj.dimension, 1)
    rule = _reference_rule(obj, compressor)
    budget = {"max_rounds": 12_000, "tolerance": 1e-5}

    full = _tuned(obj, MethodConfig(variant=Variant.EF21, compressor=compressor), rule, **budget)
    partial = _tuned(
        obj,
        MethodConfig(variant=Variant.EF21_PP, compressor=compressor, participation=0.25),
        rule,
        (0.5, *MULTIPLIERS),
        **budget,
    )

    assert full.status == RunStatus.CONVERGED
    assert partial.status == RunStatus.CONVERGED
    assert partial.rounds > full.rounds
    assert partial.rows[-1].bits_up_total / obj.n_clients < full.rows[-1].bits_up_total / obj.n_clients


@pytest.mark.slow
@pytest.mark.integration
def test_compressed_broadcast_sends_fewer_total_bits(federated_problem):
    """Top-k on the broadcast reaches 1e-5 with fewer uplink plus downlink bits than a dense broadcast."""
    obj = federated_problem
    compressor = CompressorSpec.top_k(obj.dimension, 1)
    rule = _reference_rule(obj, compressor)
    budget = {"max_rounds": 12_000, "tolerance": 1e-5}

    dense = _tuned(obj, MethodConfig(variant=Variant.EF21, compressor=compressor), rule, **budget)
    bidirectional = _tuned(
        obj,
        MethodConfig(
            variant=Variant.EF21_BC,
            compressor=compressor,
            master_compressor=CompressorSpec.top_k(obj.dimension, 4),
        ),
        rule,
        (0.5, *MULTIPLIERS),
        **budget,
    )

    assert dense.status == RunStatus.CONVERGED
    assert bidirectional.status == RunStatus.CONVERGED

    def total_bits(record):
        last = record.rows[-1]
        return last.bits_up_total + last.bits_down_total

    assert total_bits(bidirectional) < total_bits(dense)
