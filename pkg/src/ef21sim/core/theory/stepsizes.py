"""Stepsizes and auxiliary constants prescribed by the convergence theory of each method.

Every stepsize ``gamma`` returned here is certified against its quadratic feasibility
pair ``(a, b)``: ``a * gamma**2 + b * gamma <= 1``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

from ef21sim.core.compression import ContractionParams, contraction_params, optimal_s
from ef21sim.core.exceptions import ParameterError
from ef21sim.core.methods.config import Variant
from ef21sim.core.problems import NoiseConstants, SmoothnessReport

logger = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-12


class Regime(StrEnum):
    NONCONVEX = "nonconvex"
    PL = "pl"


@dataclass(frozen=True)
class StepsizeInputs:
    """Everything a stepsize formula may depend on.

    ``p`` is the participation probability (a scalar, or one value per client),
    ``page_p`` the PAGE full-pass probabilities, ``tau`` the batch sizes and ``m``
    the local dataset sizes. ``rho``, ``nu``, ``s`` and ``s_master`` are free
    scalars; ``None`` selects the optimized defaults.
    """

    smoothness: SmoothnessReport
    alpha: float = 1.0
    alpha_w: float | None = None
    alpha_m: float | None = None
    eta: float = 0.0
    p: float | tuple[float, ...] = 1.0
    page_p: tuple[float, ...] | None = None
    tau: tuple[int, ...] | None = None
    m: tuple[int, ...] | None = None
    mu: float | None = None
    noise: NoiseConstants | None = None
    rho: float | None = None
    nu: float | None = None
    s: float | None = None
    s_master: float | None = None

    def __post_init__(self) -> None:
        report = self.smoothness
        if report.L <= 0 or any(value <= 0 for value in report.L_i):
            raise ParameterError("smoothness constants must be positive", name="smoothness")
        probabilities = self.participation
        if self.page_p is not None:
            probabilities = probabilities + tuple(self.page_p)
        for prob in probabilities:
            if not 0.0 < prob <= 1.0:
                raise ParameterError(f"probabilities must lie in (0, 1], got {prob}", name="p")
        if not 0.0 <= self.eta < 1.0:
            raise ParameterError(f"momentum must lie in [0, 1), got {self.eta}", name="eta")
        if self.mu is not None and self.mu <= 0:
            raise ParameterError(f"mu must be positive, got {self.mu}", name="mu")

    @property
    def L(self) -> float:
        return self.smoothness.L

    @property
    def L_tilde(self) -> float:
        return self.smoothness.L_tilde

    @property
    def n(self) -> int:
        return self.smoothness.n_clients

    @property
    def participation(self) -> tuple[float, ...]:
        if isinstance(self.p, tuple):
            return self.p
        return (float(self.p),) * self.n

    def require_mu(self) -> float:
        if self.mu is None:
            raise ParameterError("the PL regime needs a PL constant mu", name="mu")
        return self.mu


def quadratic_slack(a: float, b: float, gamma: float) -> float:
    """``a * gamma**2 + b * gamma``; a feasible stepsize keeps this at or below 1."""
    return a * gamma * gamma + b * gamma


def _certify(a: float, b: float, gamma: float, label: str) -> float:
    if not gamma > 0.0 or not math.isfinite(gamma):
        raise ParameterError(f"{label}: stepsize {gamma} is not a positive real", name="gamma")
    slack = quadratic_slack(a, b, gamma)
    if slack > 1.0 + FEASIBILITY_SLACK:
        raise ParameterError(f"{label}: stepsize {gamma} violates a*g^2 + b*g <= 1 ({slack})", name="gamma")
    return gamma


def _quadratic_bound(a: float, b: float, label: str) -> float:
    """The largest stepsize satisfying the feasibility bound: ``1 / (sqrt(a) + b)``."""
    return _certify(a, b, 1.0 / (math.sqrt(a) + b), label)


def ef21_gamma(inputs: StepsizeInputs) -> float:
    params = contraction_params(inputs.alpha, inputs.s)
    a = params.beta_over_theta * inputs.L_tilde**2
    return _quadratic_bound(a, inputs.L, "ef21")


def ef21_gamma_pl(inputs: StepsizeInputs) -> float:
    mu = inputs.require_mu()
    params = contraction_params(inputs.alpha, inputs.s)
    a = 2.0 * params.beta_over_theta * inputs.L_tilde**2
    first = _quadratic_bound(a, inputs.L, "ef21-pl")
    return min(first, params.theta / (2.0 * mu))


@dataclass(frozen=True)
class SgdParams:
    hat_theta: float
    hat_beta1: float
    hat_beta2: float
    gamma: float
    rho: float
    nu: float


def _sgd_constants(inputs: StepsizeInputs) -> tuple[float, float, float, float, float]:
    alpha = inputs.alpha
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}", name="alpha")
    rho = alpha / 2.0 if inputs.rho is None else inputs.rho
    nu = alpha / 4.0 if inputs.nu is None else inputs.nu
    if rho <= 0 or nu <= 0:
        raise ParameterError("rho and nu must be positive", name="rho")
    growth = (1.0 - alpha) * (1.0 + rho) * (1.0 + nu)
    if growth >= 1.0:
        raise ParameterError(
            f"(1-alpha)(1+rho)(1+nu) = {growth} >= 1; choose smaller rho or nu", name="rho"
        )
    hat_theta = 1.0 - growth
    hat_beta1 = 2.0 * (1.0 - alpha) * (1.0 + rho) * (1.0 + 1.0 / nu)
    hat_beta2 = hat_beta1 + (1.0 + 1.0 / rho)
    return hat_theta, hat_beta1, hat_beta2, rho, nu


def ef21_sgd_params(inputs: StepsizeInputs) -> SgdParams:
    hat_theta, hat_beta1, hat_beta2, rho, nu = _sgd_constants(inputs)
    a = hat_beta1 / hat_theta * inputs.L_tilde**2
    gamma = _quadratic_bound(a, inputs.L, "ef21-sgd")
    return SgdParams(hat_theta, hat_beta1, hat_beta2, gamma, rho, nu)


def ef21_sgd_gamma_pl(inputs: StepsizeInputs) -> SgdParams:
    mu = inputs.require_mu()
    hat_theta, hat_beta1, hat_beta2, rho, nu = _sgd_constants(inputs)
    a = 2.0 * hat_beta1 / hat_theta * inputs.L_tilde**2
    gamma = min(_quadratic_bound(a, inputs.L, "ef21-sgd-pl"), hat_theta / (2.0 * mu))
    return SgdParams(hat_theta, hat_beta1, hat_beta2, gamma, rho, nu)


@dataclass(frozen=True)
class BatchCondition:
    noise_level: float
    value: float
    bound: float

    @property
    def satisfied(self) -> bool:
        return self.value < self.bound


def sgd_noise_level(noise: NoiseConstants, report: SmoothnessReport, tau: Sequence[int]) -> float:
    """``max_i 2 (A_i + L_i (B_i - 1)) / tau_i``."""
    if len(tau) != noise.n_clients or len(report.L_i) != noise.n_clients:
        raise ParameterError("noise constants, batch sizes and smoothness disagree on n", name="tau")
    return max(
        2.0 * (A + L_i * (B - 1.0)) / t for A, B, L_i, t in zip(noise.A, noise.B, report.L_i, tau)
    )


def sgd_batch_condition(inputs: StepsizeInputs, gamma: float, regime: Regime = Regime.NONCONVEX) -> BatchCondition:
    """Batch-size requirement tying the oracle noise to the stepsize.

    Nonconvex: ``gamma * A~ * beta2 / (2 theta) < 1``. PL: ``2 A~ beta2 / theta <= mu / 2``.
    """
    if inputs.noise is None or inputs.tau is None:
        raise ParameterError("the batch condition needs oracle noise constants and batch sizes", name="noise")
    hat_theta, _, hat_beta2, _, _ = _sgd_constants(inputs)
    level = sgd_noise_level(inputs.noise, inputs.smoothness, inputs.tau)
    if Regime(regime) == Regime.PL:
        mu = inputs.require_mu()
        # non-strict form; nudge the bound so `satisfied` admits equality
        return BatchCondition(level, 2.0 * level * hat_beta2 / hat_theta, mu / 2.0 + FEASIBILITY_SLACK)
    return BatchCondition(level, gamma * level * hat_beta2 / (2.0 * hat_theta), 1.0)


def default_page_probabilities(tau: Sequence[int], m: Sequence[int]) -> tuple[float, ...]:
    """``p_i = tau_i / (tau_i + m_i)``."""
    if len(tau) != len(m):
        raise ParameterError("batch sizes and dataset sizes disagree on n", name="tau")
    return tuple(t / (t + size) for t, size in zip(tau, m))


def _page_probabilities(inputs: StepsizeInputs) -> tuple[float, ...]:
    if inputs.page_p is not None:
        return tuple(inputs.page_p)
    if inputs.tau is None or inputs.m is None:
        raise ParameterError("PAGE needs probabilities or batch and dataset sizes", name="page_p")
    return default_page_probabilities(inputs.tau, inputs.m)


def average_smoothness_sq(inputs: StepsizeInputs, probabilities: Sequence[float]) -> float:
    """``(1/n) sum_i (1 - p_i) script_L_i^2 / tau_i``."""
    if all(prob == 1.0 for prob in probabilities):
        return 0.0
    if inputs.tau is None:
        raise ParameterError("PAGE with p_i < 1 needs batch sizes", name="tau")
    script = inputs.smoothness.script_L_i
    total = sum((1.0 - prob) * value * value / t for prob, value, t in zip(probabilities, script, inputs.tau))
    return total / len(probabilities)


def _page_terms(inputs: StepsizeInputs) -> tuple[ContractionParams, float, float, float, float]:
    probabilities = _page_probabilities(inputs)
    p_min, p_max = min(probabilities), max(probabilities)
    if p_min <= 0.0:
        raise ParameterError("PAGE probabilities must be positive", name="page_p")
    params = contraction_params(inputs.alpha, inputs.s)
    return params, p_min, p_max, average_smoothness_sq(inputs, probabilities), params.beta_over_theta


def page_gamma(inputs: StepsizeInputs) -> float:
    _, p_min, p_max, script_sq, ratio = _page_terms(inputs)
    a = 4.0 * ratio * inputs.L_tilde**2 + 2.0 * (3.0 * ratio * p_max / p_min + 1.0 / p_min) * script_sq
    return _quadratic_bound(a, inputs.L, "ef21-page")


def page_gamma_pl(inputs: StepsizeInputs) -> float:
    mu = inputs.require_mu()
    params, p_min, p_max, script_sq, ratio = _page_terms(inputs)
    a = 8.0 * ratio * inputs.L_tilde**2 + 4.0 * (5.0 * ratio * p_max / p_min + 1.0 / p_min) * script_sq
    gamma0 = _quadratic_bound(a, inputs.L, "ef21-page-pl")
    return min(gamma0, params.theta / (2.0 * mu), p_min / (2.0 * mu))


@dataclass(frozen=True)
class PPParams:
    theta_p: float
    B: float
    gamma: float
    rho: float
    s: float
    theta: float
    beta: float


def _pp_free_scalars(inputs: StepsizeInputs) -> tuple[float, float]:
    """Default ``(rho, s)`` for a common participation probability."""
    probabilities = inputs.participation
    alpha = inputs.alpha
    if inputs.rho is not None and inputs.s is not None:
        return inputs.rho, inputs.s
    if len(set(probabilities)) != 1:
        raise ParameterError(
            "unequal participation probabilities need user-supplied rho and s", name="rho"
        )
    p = probabilities[0]
    if p == 1.0 and alpha == 1.0:
        rho, s = 1.0, 1.0
    elif p == 1.0:
        rho, s = 1.0, optimal_s(alpha)
    elif alpha == 1.0:
        rho, s = p / (2.0 * (1.0 - p)), 1.0
    else:
        rho, s = p * alpha / (4.0 * (1.0 - p)), alpha / (4.0 * (1.0 - alpha))
    return (inputs.rho if inputs.rho is not None else rho), (inputs.s if inputs.s is not None else s)


def _pp_constants(inputs: StepsizeInputs) -> tuple[float, float, float, float, ContractionParams]:
    rho, s = _pp_free_scalars(inputs)
    if rho <= 0:
        raise ParameterError(f"rho must be positive, got {rho}", name="rho")
    params = contraction_params(inputs.alpha, s)
    probabilities = inputs.participation
    p_min, p_max = min(probabilities), max(probabilities)
    theta_p = rho * p_min + params.theta * p_max - rho - (p_max - p_min)
    if theta_p <= 0.0:
        raise ParameterError(f"theta_p = {theta_p} is not positive for rho={rho}, s={s}", name="rho")
    L_i = inputs.smoothness.L_i
    B = sum(
        (params.beta * prob + (1.0 + 1.0 / rho) * (1.0 - prob)) * value * value
        for prob, value in zip(probabilities, L_i)
    ) / len(L_i)
    return theta_p, B, rho, s, params


def pp_params(inputs: StepsizeInputs) -> PPParams:
    theta_p, B, rho, s, params = _pp_constants(inputs)
    gamma = _quadratic_bound(B / theta_p, inputs.L, "ef21-pp")
    return PPParams(theta_p, B, gamma, rho, s, params.theta, params.beta)


def pp_gamma_pl(inputs: StepsizeInputs) -> PPParams:
    mu = inputs.require_mu()
    theta_p, B, rho, s, params = _pp_constants(inputs)
    first = _quadratic_bound(2.0 * B / theta_p, inputs.L, "ef21-pp-pl")
    return PPParams(theta_p, B, min(first, theta_p / (2.0 * mu)), rho, s, params.theta, params.beta)


@dataclass(frozen=True)
class BCParams:
    worker: ContractionParams
    master: ContractionParams
    gamma: float


def bc_gamma(inputs: StepsizeInputs, regime: Regime = Regime.NONCONVEX) -> BCParams:
    """Bidirectional compression; ``alpha_w`` defaults to ``alpha`` and ``alpha_m`` to 1."""
    worker = contraction_params(inputs.alpha if inputs.alpha_w is None else inputs.alpha_w, inputs.s)
    master = contraction_params(1.0 if inputs.alpha_m is None else inputs.alpha_m, inputs.s_master)
    ratio_w, ratio_m = worker.beta_over_theta, master.beta_over_theta
    L_tilde_sq = inputs.L_tilde**2
    if Regime(regime) == Regime.PL:
        mu = inputs.require_mu()
        a = L_tilde_sq * (32.0 * ratio_m + 4.0 * ratio_w * (1.0 + 16.0 * ratio_m))
        gamma0 = _quadratic_bound(a, inputs.L, "ef21-bc-pl")
        gamma = min(gamma0, master.theta / (2.0 * mu), worker.theta / (2.0 * mu))
    else:
        a = L_tilde_sq * (16.0 * ratio_m + 2.0 * ratio_w * (1.0 + 8.0 * ratio_m))
        gamma = _quadratic_bound(a, inputs.L, "ef21-bc")
    return BCParams(worker=worker, master=master, gamma=gamma)


def hb_gamma0(inputs: StepsizeInputs) -> float:
    eta = inputs.eta
    if not 0.0 <= eta < 1.0:
        raise ParameterError(f"momentum must lie in [0, 1), got {eta}", name="eta")
    params = contraction_params(inputs.alpha, inputs.s)
    b = (1.0 + eta) * inputs.L / (2.0 * (1.0 - eta) ** 2)
    a = inputs.L_tilde**2 / (1.0 - eta) ** 2 * 2.0 * params.beta_over_theta * (1.0 + 4.0 * eta * eta)
    return _quadratic_bound(a, b, "ef21-hb")


def hb_gamma(inputs: StepsizeInputs) -> float:
    """Half of the momentum method's critical stepsize."""
    return hb_gamma0(inputs) / 2.0


def prox_gamma0(inputs: StepsizeInputs) -> float:
    params = contraction_params(inputs.alpha, inputs.s)
    return _quadratic_bound(params.beta_over_theta * inputs.L_tilde**2, inputs.L / 2.0, "ef21-prox")


def prox_gamma(inputs: StepsizeInputs, regime: Regime = Regime.NONCONVEX) -> float:
    params = contraction_params(inputs.alpha, inputs.s)
    if Regime(regime) == Regime.PL:
        mu = inputs.require_mu()
        root = inputs.L_tilde * math.sqrt(2.0 * params.beta_over_theta)
        first = _quadratic_bound(8.0 * params.beta_over_theta * inputs.L_tilde**2, inputs.L, "ef21-prox-pl")
        return min(first, params.theta / (mu + params.theta * root))
    return prox_gamma0(inputs) / 2.0


@dataclass(frozen=True)
class TheoryStepsize:
    """A resolved stepsize plus the constants behind it (written into run headers)."""

    gamma: float
    theta: float
    beta: float
    constants: dict[str, Any] = field(default_factory=dict)


def theory_stepsize(variant: Variant | str, inputs: StepsizeInputs, regime: Regime | str = Regime.NONCONVEX) -> TheoryStepsize:
    """Largest stepsize the theory allows for ``variant`` in ``regime``."""
    variant = Variant(variant)
    regime = Regime(regime)
    pl = regime == Regime.PL
    params = contraction_params(inputs.alpha, inputs.s)
    base: dict[str, Any] = {"alpha": inputs.alpha, "s": params.s, "L": inputs.L, "L_tilde": inputs.L_tilde}
    if pl:
        base["mu"] = inputs.require_mu()

    if variant == Variant.EF21:
        gamma = ef21_gamma_pl(inputs) if pl else ef21_gamma(inputs)
        result = TheoryStepsize(gamma, params.theta, params.beta, base)
    elif variant == Variant.EF21_SGD:
        sgd = ef21_sgd_gamma_pl(inputs) if pl else ef21_sgd_params(inputs)
        base.update(hat_theta=sgd.hat_theta, hat_beta1=sgd.hat_beta1, hat_beta2=sgd.hat_beta2, rho=sgd.rho, nu=sgd.nu)
        result = TheoryStepsize(sgd.gamma, sgd.hat_theta, sgd.hat_beta1, base)
    elif variant == Variant.EF21_PAGE:
        gamma = page_gamma_pl(inputs) if pl else page_gamma(inputs)
        base.update(page_p=list(_page_probabilities(inputs)))
        result = TheoryStepsize(gamma, params.theta, params.beta, base)
    elif variant == Variant.EF21_PP:
        pp = pp_gamma_pl(inputs) if pl else pp_params(inputs)
        base.update(theta_p=pp.theta_p, B=pp.B, rho=pp.rho, s=pp.s, p=list(inputs.participation))
        result = TheoryStepsize(pp.gamma, pp.theta_p, pp.beta, base)
    elif variant == Variant.EF21_BC:
        bc = bc_gamma(inputs, regime)
        base.update(
            theta_w=bc.worker.theta,
            beta_w=bc.worker.beta,
            theta_M=bc.master.theta,
            beta_M=bc.master.beta,
            alpha_M=bc.master.alpha,
        )
        result = TheoryStepsize(bc.gamma, bc.worker.theta, bc.worker.beta, base)
    elif variant == Variant.EF21_HB:
        if pl:
            raise ParameterError("the momentum method has no PL stepsize", name="regime")
        base.update(eta=inputs.eta, gamma0=hb_gamma0(inputs))
        result = TheoryStepsize(hb_gamma(inputs), params.theta, params.beta, base)
    else:
        gamma = prox_gamma(inputs, regime)
        if not pl:
            base["gamma0"] = prox_gamma0(inputs)
        result = TheoryStepsize(gamma, params.theta, params.beta, base)

    result.constants.update(gamma=result.gamma, theta=result.theta, beta=result.beta)
    logger.debug("Theory stepsize for %s (%s): %.6g", variant, regime, result.gamma)
    return result


__all__ = [
    "BCParams",
    "BatchCondition",
    "PPParams",
    "Regime",
    "SgdParams",
    "StepsizeInputs",
    "TheoryStepsize",
    "average_smoothness_sq",
    "bc_gamma",
    "default_page_probabilities",
    "ef21_gamma",
    "ef21_gamma_pl",
    "ef21_sgd_gamma_pl",
    "ef21_sgd_params",
    "hb_gamma",
    "hb_gamma0",
    "page_gamma",
    "page_gamma_pl",
    "pp_gamma_pl",
    "pp_params",
    "prox_gamma",
    "prox_gamma0",
    "quadratic_slack",
    "sgd_batch_condition",
    "sgd_noise_level",
    "theory_stepsize",
]
