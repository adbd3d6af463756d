"""Tests for compression operators and bit accounting."""

import numpy as np
import pytest

from ef21sim.core.compression import (
    CompressorKind,
    CompressorSpec,
    alpha_of,
    compress,
    decompress,
    estimate_contraction,
    is_lossless,
    omega_of,
    shift_update,
)
from ef21sim.core.exceptions import ContractViolation, ParameterError
from ef21sim.core.randomness import StreamRole, derive_stream


@pytest.fixture
def rng():
    return derive_stream(42, StreamRole.DIAGNOSTIC)


def test_top_k_keeps_largest_magnitudes():
    """top_k keeps the k largest entries by absolute value in index order."""
    spec = CompressorSpec.top_k(5, 2)
    delta = compress(spec, np.array([0.1, -3.0, 0.5, 2.0, -0.2]))

    assert delta.entries == [(1, -3.0), (3, 2.0)]
    np.testing.assert_array_equal(decompress(delta), [0.0, -3.0, 0.0, 2.0, 0.0])


def test_top_k_ties_prefer_lower_index():
    """Equal magnitudes resolve to the lowest indices."""
    delta = compress(CompressorSpec.top_k(4, 2), np.array([1.0, -1.0, 1.0, 1.0]))
    assert list(delta.indices) == [0, 1]


def test_top_k_bit_cost():
    """Sparse cost is k * (value_bits + ceil(log2 d))."""
    spec = CompressorSpec.top_k(100, 3)
    delta = compress(spec, np.arange(100.0))
    assert spec.index_bits == 7
    assert delta.bit_cost == 3 * (64 + 7)


def test_top_k_zero_vector():
    """Compressing zero gives k zero entries."""
    delta = compress(CompressorSpec.top_k(6, 2), np.zeros(6))
    np.testing.assert_array_equal(decompress(delta), np.zeros(6))
    assert len(delta.indices) == 2


def test_dense_cost_and_identity():
    """Identity returns the input and costs d value words."""
    x = np.array([1.5, -2.0, 0.25])
    delta = compress(CompressorSpec.identity(3), x)
    np.testing.assert_array_equal(decompress(delta), x)
    assert delta.bit_cost == 3 * 64


def test_scale_compressor():
    """scale(lambda) multiplies every entry."""
    delta = compress(CompressorSpec.scale(3, 0.5), np.array([2.0, -4.0, 1.0]))
    np.testing.assert_array_equal(decompress(delta), [1.0, -2.0, 0.5])


def test_rand_k_requires_stream():
    """rand_k cannot run without a random stream."""
    with pytest.raises(ContractViolation):
        compress(CompressorSpec.rand_k(5, 2), np.ones(5))


def test_rand_k_keeps_sorted_unscaled_entries(rng):
    """rand_k values are the kept entries unscaled."""
    x = np.arange(1.0, 11.0)
    delta = compress(CompressorSpec.rand_k(10, 3), x, rng)
    assert len(delta.indices) == 3
    assert np.all(np.diff(delta.indices) > 0)
    np.testing.assert_array_equal(delta.values, x[delta.indices])


def test_alpha_and_omega():
    """Contraction and variance parameters for each kind."""
    assert alpha_of(CompressorSpec.top_k(10, 2)) == pytest.approx(0.2)
    assert alpha_of(CompressorSpec.rand_k(10, 5)) == pytest.approx(0.5)
    assert alpha_of(CompressorSpec.scale(4, 0.5)) == pytest.approx(0.75)
    assert alpha_of(CompressorSpec.identity(4)) == 1.0
    assert omega_of(CompressorSpec.rand_k(10, 5)) == pytest.approx(1.0)
    assert omega_of(CompressorSpec.top_k(10, 5)) == 0.0


def test_lossless_detection():
    """top_k with k = d is lossless; scale below one is not."""
    assert is_lossless(CompressorSpec.top_k(4, 4))
    assert is_lossless(CompressorSpec.scale(4, 1.0))
    assert not is_lossless(CompressorSpec.scale(4, 0.9))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "top_k", "dimension": 5, "k": 0},
        {"kind": "top_k", "dimension": 5, "k": 6},
        {"kind": "rand_k", "dimension": 5},
        {"kind": "scale", "dimension": 5, "factor": 0.0},
        {"kind": "scale", "dimension": 5, "factor": 1.5},
        {"kind": "identity", "dimension": 0},
    ],
)
def test_invalid_specs_rejected(kwargs):
    """Out-of-range parameters raise ParameterError."""
    with pytest.raises(ParameterError):
        CompressorSpec(**kwargs)


def test_from_mapping_ratio():
    """A ratio resolves to ceil(ratio * d) clamped to [1, d]."""
    spec = CompressorSpec.from_mapping({"kind": "top_k", "ratio": 0.05}, 112)
    assert spec.kind == CompressorKind.TOP_K
    assert spec.k == 6
    assert CompressorSpec.from_mapping({"kind": "top_k", "ratio": 0.001}, 10).k == 1


def test_from_mapping_custom_encoding():
    """Custom value and index widths are honoured."""
    spec = CompressorSpec.from_mapping({"kind": "top_k", "k": 2, "value_bits": 32, "index_bits": 16}, 8)
    assert compress(spec, np.arange(8.0)).bit_cost == 2 * (32 + 16)


def test_dimension_mismatch_rejected():
    """Input length must match the compressor dimension."""
    with pytest.raises(ContractViolation):
        compress(CompressorSpec.top_k(4, 1), np.ones(5))


def test_shift_update_adds_sparse_payload():
    """The shift moves only on the transmitted coordinates."""
    shift = np.array([1.0, 1.0, 1.0])
    target = np.array([1.0, 5.0, 2.0])
    delta = compress(CompressorSpec.top_k(3, 1), target - shift)
    np.testing.assert_array_equal(shift_update(shift, target, delta, lossless=False), [1.0, 5.0, 1.0])


def test_shift_update_lossless_is_exact():
    """A lossless update reproduces the target exactly."""
    shift = np.array([0.1, 0.2])
    target = np.array([0.3, 0.7])
    delta = compress(CompressorSpec.identity(2), target - shift)
    np.testing.assert_array_equal(shift_update(shift, target, delta, lossless=True), target)


def test_estimate_contraction_top_k_within_bound(rng):
    """The worst observed top_k ratio stays below 1 - k/d."""
    spec = CompressorSpec.top_k(20, 4)
    assert estimate_contraction(spec, 500, 20, rng) <= 1.0 - 0.2 + 1e-12


def test_estimate_contraction_rand_k_mean(rng):
    """The mean rand_k ratio is close to 1 - k/d."""
    spec = CompressorSpec.rand_k(20, 5)
    assert estimate_contraction(spec, 4000, 20, rng) == pytest.approx(0.75, abs=0.02)
