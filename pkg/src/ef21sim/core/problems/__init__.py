"""Objectives, oracles, regularizers and smoothness constants."""

from .noise import NoiseConstants, bounded_variance_noise, importance_sampling_noise
from .objectives import (
    ClientShard,
    Objective,
    ObjectiveKind,
    batch_grad,
    batch_grad_diff,
    batch_grad_diff_on,
    client_loss,
    full_grad,
    full_objective_grad,
    loss,
    ordered_mean,
    sample_batch,
    sample_smoothness,
    stoch_grad,
)
from .regularizers import (
    Regularizer,
    RegularizerKind,
    gradient_mapping,
    mapping_from_grad,
    project_domain,
    prox,
    regularizer_value,
)
from .smoothness import (
    SmoothnessReport,
    hessian,
    minimizer,
    minimum_value,
    pl_constant,
    power_iteration,
    smoothness,
)

__all__ = [
    "ClientShard",
    "NoiseConstants",
    "Objective",
    "ObjectiveKind",
    "Regularizer",
    "RegularizerKind",
    "SmoothnessReport",
    "batch_grad",
    "batch_grad_diff",
    "batch_grad_diff_on",
    "bounded_variance_noise",
    "client_loss",
    "full_grad",
    "full_objective_grad",
    "gradient_mapping",
    "hessian",
    "importance_sampling_noise",
    "loss",
    "mapping_from_grad",
    "minimizer",
    "minimum_value",
    "ordered_mean",
    "project_domain",
    "pl_constant",
    "power_iteration",
    "prox",
    "regularizer_value",
    "sample_batch",
    "sample_smoothness",
    "smoothness",
    "stoch_grad",
]
