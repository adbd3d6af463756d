"""Compression operators and contraction bookkeeping."""

from .contraction import ContractionParams, contraction_params, optimal_s
from .operators import (
    CompressedDelta,
    CompressorKind,
    CompressorSpec,
    alpha_of,
    compress,
    contraction_samples,
    decompress,
    estimate_contraction,
    is_lossless,
    omega_of,
    shift_update,
)

__all__ = [
    "CompressedDelta",
    "CompressorKind",
    "CompressorSpec",
    "ContractionParams",
    "alpha_of",
    "compress",
    "contraction_params",
    "contraction_samples",
    "decompress",
    "estimate_contraction",
    "is_lossless",
    "omega_of",
    "optimal_s",
    "shift_update",
]
