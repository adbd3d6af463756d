"""Tests for the theory stepsizes of every variant."""

import math

import pytest

from ef21sim.core.exceptions import ParameterError
from ef21sim.core.methods import Variant
from ef21sim.core.problems import SmoothnessReport, bounded_variance_noise
from ef21sim.core.theory import (
    Regime,
    StepsizeInputs,
    bc_gamma,
    default_page_probabilities,
    ef21_gamma,
    ef21_gamma_pl,
    ef21_sgd_params,
    hb_gamma,
    page_gamma,
    pp_params,
    prox_gamma,
    quadratic_slack,
    sgd_batch_condition,
    theory_stepsize,
)

RATIO_HALF = 0.5 / (1.0 - math.sqrt(0.5)) ** 2


def _unit(n: int = 1, script: float = 1.0) -> SmoothnessReport:
    return SmoothnessReport(L_i=(1.0,) * n, L=1.0, L_tilde=1.0, script_L_i=(script,) * n)


@pytest.fixture
def unit():
    """Every smoothness constant equal to one, single client."""
    return _unit()


def test_ef21_pinned(unit):
    """alpha = 1/2 with unit constants gives 1/(1 + 1 + sqrt 2)."""
    assert ef21_gamma(StepsizeInputs(unit, alpha=0.5)) == pytest.approx(0.292893, abs=1e-6)


def test_ef21_pl_pinned(unit):
    """With mu = 10 the theta/(2 mu) branch is active."""
    assert ef21_gamma_pl(StepsizeInputs(unit, alpha=0.5, mu=10.0)) == pytest.approx(0.0146447, abs=1e-7)


def test_ef21_pl_small_mu_keeps_quadratic_branch(unit):
    """For tiny mu the PL stepsize is the quadratic bound."""
    gamma = ef21_gamma_pl(StepsizeInputs(unit, alpha=0.5, mu=1e-6))
    assert gamma == pytest.approx(1.0 / (1.0 + math.sqrt(2.0 * RATIO_HALF)))


def test_sgd_hat_theta(unit):
    """hat theta = 1 - (1 - alpha)(1 + rho)(1 + nu)."""
    params = ef21_sgd_params(StepsizeInputs(unit, alpha=0.5, rho=0.25, nu=0.125))
    assert params.hat_theta == pytest.approx(0.296875)
    assert params.hat_beta1 == pytest.approx(2.0 * 0.5 * 1.25 * 9.0)
    assert params.hat_beta2 == pytest.approx(params.hat_beta1 + 5.0)


def test_sgd_rejects_growth_at_least_one(unit):
    """Too-large rho and nu are rejected."""
    with pytest.raises(ParameterError, match="choose smaller"):
        ef21_sgd_params(StepsizeInputs(unit, alpha=0.1, rho=1.0, nu=1.0))


def test_sgd_batch_condition(unit):
    """The noise level is max 2 (A + L (B - 1)) / tau."""
    noise = bounded_variance_noise([1.0])
    inputs = StepsizeInputs(unit, alpha=1.0, noise=noise, tau=(4,))
    condition = sgd_batch_condition(inputs, gamma=0.5)
    assert condition.noise_level == 0.0
    assert condition.satisfied


def test_pp_pinned_half(unit):
    """p = alpha = 1/2 gives theta_p = p alpha / 2."""
    params = pp_params(StepsizeInputs(unit, alpha=0.5, p=0.5))
    assert params.theta_p == pytest.approx(0.125, abs=1e-12)
    assert params.B / params.theta_p <= (4.0 / 0.25) ** 2


def test_pp_lossless_half_participation(unit):
    """alpha = 1, p = 1/2 gives theta_p = p/2."""
    params = pp_params(StepsizeInputs(unit, alpha=1.0, p=0.5))
    assert params.theta_p == pytest.approx(0.25)
    assert params.B / params.theta_p <= 16.0


def test_pp_full_participation_reduces(unit):
    """p = 1, alpha = 1 gives theta_p = 1, B = 0 and gamma = 1/L."""
    params = pp_params(StepsizeInputs(unit, alpha=1.0, p=1.0))
    assert params.theta_p == 1.0
    assert params.B == 0.0
    assert params.gamma == pytest.approx(1.0)


def test_pp_unequal_probabilities_need_scalars():
    """Unequal participation needs user-supplied rho and s."""
    inputs = StepsizeInputs(_unit(2), alpha=0.5, p=(0.5, 0.9))
    with pytest.raises(ParameterError, match="user-supplied"):
        pp_params(inputs)


def test_pp_nonpositive_theta_p_rejected(unit):
    """User scalars that make theta_p non-positive are rejected."""
    with pytest.raises(ParameterError, match="theta_p"):
        pp_params(StepsizeInputs(unit, alpha=0.5, p=0.5, rho=1.0, s=0.5))


def test_bc_value(unit):
    """Bidirectional compression at alpha_w = alpha_M = 1/2."""
    params = bc_gamma(StepsizeInputs(unit, alpha=0.5, alpha_w=0.5, alpha_m=0.5))
    a = 16.0 * RATIO_HALF + 2.0 * RATIO_HALF * (1.0 + 8.0 * RATIO_HALF)
    assert params.gamma == pytest.approx(1.0 / (1.0 + math.sqrt(a)))
    assert params.gamma == pytest.approx(0.037786, abs=1e-6)


def test_bc_identity_master_keeps_worker_term(unit):
    """An identity master leaves only the worker term."""
    params = bc_gamma(StepsizeInputs(unit, alpha=0.5))
    assert params.master.theta == 1.0
    assert params.gamma == pytest.approx(1.0 / (1.0 + math.sqrt(2.0 * RATIO_HALF)))


def test_hb_pinned(unit):
    """Heavy ball at eta = 0.9."""
    assert hb_gamma(StepsizeInputs(unit, alpha=0.5, eta=0.9)) == pytest.approx(0.0030248, abs=1e-7)


def test_prox_pinned(unit):
    """Proximal nonconvex stepsize is half the critical value."""
    assert prox_gamma(StepsizeInputs(unit, alpha=0.5)) == pytest.approx(0.171573, abs=1e-6)


def test_page_full_probability_is_ef21_like(unit):
    """With p_i = 1 the PAGE variance term disappears."""
    inputs = StepsizeInputs(unit, alpha=0.5, page_p=(1.0,), tau=(1,), m=(4,))
    assert page_gamma(inputs) == pytest.approx(1.0 / (1.0 + math.sqrt(4.0 * RATIO_HALF)))


def test_default_page_probabilities():
    """p_i = tau_i / (tau_i + m_i)."""
    assert default_page_probabilities((2, 4), (6, 4)) == pytest.approx((0.25, 0.5))


@pytest.mark.parametrize("variant", list(Variant))
def test_lossless_gives_one_over_l(variant):
    """With lossless compression every variant allows gamma = 1/L."""
    inputs = StepsizeInputs(
        _unit(),
        alpha=1.0,
        alpha_m=1.0,
        page_p=(1.0,),
        tau=(1,),
        m=(1,),
        rho=0.5,
        nu=0.5,
    )
    assert theory_stepsize(variant, inputs).gamma == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [k / 20 for k in range(1, 21)])
@pytest.mark.parametrize("variant", [Variant.EF21, Variant.EF21_PP, Variant.EF21_BC, Variant.EF21_HB, Variant.EF21_PROX])
def test_feasibility_on_alpha_grid(alpha, variant):
    """Every stepsize on the alpha grid is a positive finite real."""
    inputs = StepsizeInputs(_unit(), alpha=alpha, alpha_m=alpha, eta=0.5 if variant == Variant.EF21_HB else 0.0)
    gamma = theory_stepsize(variant, inputs).gamma
    assert 0.0 < gamma <= 1.0 + 1e-12
    assert math.isfinite(gamma)


def test_quadratic_slack_at_bound():
    """1/(sqrt a + b) satisfies a g^2 + b g <= 1."""
    a, b = 9.0, 2.0
    assert quadratic_slack(a, b, 1.0 / (3.0 + b)) <= 1.0


def test_hb_has_no_pl_regime(unit):
    """The momentum method rejects the PL regime."""
    with pytest.raises(ParameterError):
        theory_stepsize(Variant.EF21_HB, StepsizeInputs(unit, alpha=0.5, mu=1.0), Regime.PL)


def test_pl_requires_mu(unit):
    """PL without mu is a parameter error."""
    with pytest.raises(ParameterError, match="mu"):
        theory_stepsize(Variant.EF21, StepsizeInputs(unit, alpha=0.5), Regime.PL)


def test_constants_recorded(unit):
    """The resolved constants carry gamma, theta and beta."""
    result = theory_stepsize(Variant.EF21_PP, StepsizeInputs(unit, alpha=0.5, p=0.5))
    assert result.constants["theta_p"] == pytest.approx(0.125)
    assert result.constants["gamma"] == result.gamma
    assert result.theta == pytest.approx(0.125)


def test_invalid_probability_rejected(unit):
    """Participation must lie in (0, 1]."""
    with pytest.raises(ParameterError):
        StepsizeInputs(unit, alpha=0.5, p=0.0)


_MONOTONE_OPTIONS = {
    Variant.EF21: {},
    Variant.EF21_PP: {"p": 0.5},
    Variant.EF21_BC: {"alpha_m": 0.5},
    Variant.EF21_HB: {"eta": 0.5},
    Variant.EF21_PROX: {},
}


def _gamma(variant, *, alpha=0.5, L=1.0, L_tilde=1.0):
    report = SmoothnessReport(L_i=(L_tilde,), L=L, L_tilde=L_tilde, script_L_i=(1.0,))
    return theory_stepsize(variant, StepsizeInputs(report, alpha=alpha, **_MONOTONE_OPTIONS[variant])).gamma


@pytest.mark.parametrize("variant", list(_MONOTONE_OPTIONS))
def test_stepsize_grows_with_alpha(variant):
    """Better (lossy) compression never shrinks the stepsize."""
    gammas = [_gamma(variant, alpha=k / 20) for k in range(1, 20)]
    assert all(later >= earlier * (1.0 - 1e-12) for earlier, later in zip(gammas, gammas[1:]))
    assert gammas[-1] > gammas[0]


@pytest.mark.parametrize("variant", list(_MONOTONE_OPTIONS))
def test_stepsize_shrinks_with_smoothness(variant):
    """Larger L or L_tilde gives a strictly smaller stepsize."""
    scales = [0.5, 1.0, 2.0, 4.0]
    by_L = [_gamma(variant, L=value) for value in scales]
    by_L_tilde = [_gamma(variant, L_tilde=value) for value in scales]
    assert all(later < earlier for earlier, later in zip(by_L, by_L[1:]))
    assert all(later < earlier for earlier, later in zip(by_L_tilde, by_L_tilde[1:]))
