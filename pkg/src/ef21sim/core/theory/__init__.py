"""Theory-prescribed stepsizes for every method variant."""

from .stepsizes import (
    BatchCondition,
    BCParams,
    PPParams,
    Regime,
    SgdParams,
    StepsizeInputs,
    TheoryStepsize,
    bc_gamma,
    default_page_probabilities,
    ef21_gamma,
    ef21_gamma_pl,
    ef21_sgd_gamma_pl,
    ef21_sgd_params,
    hb_gamma,
    page_gamma,
    page_gamma_pl,
    pp_gamma_pl,
    pp_params,
    prox_gamma,
    quadratic_slack,
    sgd_batch_condition,
    theory_stepsize,
)

__all__ = [
    "BCParams",
    "BatchCondition",
    "PPParams",
    "Regime",
    "SgdParams",
    "StepsizeInputs",
    "TheoryStepsize",
    "bc_gamma",
    "default_page_probabilities",
    "ef21_gamma",
    "ef21_gamma_pl",
    "ef21_sgd_gamma_pl",
    "ef21_sgd_params",
    "hb_gamma",
    "page_gamma",
    "page_gamma_pl",
    "pp_gamma_pl",
    "pp_params",
    "prox_gamma",
    "quadratic_slack",
    "sgd_batch_condition",
    "theory_stepsize",
]
