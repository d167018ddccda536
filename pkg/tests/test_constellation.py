"""Alphabet construction, soft statistics and per-layer LLR tests.

The external oracle for the labelings is 3GPP TS 36.211 section 7.1: spot
rows of the mapping tables are transcribed here and compared against the
generated alphabets.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mimodet import (
    build_constellation,
    hard_demap,
    map_bits,
    scalar_llrs,
    soft_stats,
)

# TS 36.211 Table 7.1.2-1 (QPSK), all rows: bits -> (I, Q) before 1/sqrt(2).
QPSK_TABLE = {
    (0, 0): (1, 1),
    (0, 1): (1, -1),
    (1, 0): (-1, 1),
    (1, 1): (-1, -1),
}

# TS 36.211 Table 7.1.3-1 (16QAM), all rows: bits -> (I, Q) before 1/sqrt(10).
QAM16_TABLE = {
    (0, 0, 0, 0): (1, 1),
    (0, 0, 0, 1): (1, 3),
    (0, 0, 1, 0): (3, 1),
    (0, 0, 1, 1): (3, 3),
    (0, 1, 0, 0): (1, -1),
    (0, 1, 0, 1): (1, -3),
    (0, 1, 1, 0): (3, -1),
    (0, 1, 1, 1): (3, -3),
    (1, 0, 0, 0): (-1, 1),
    (1, 0, 0, 1): (-1, 3),
    (1, 0, 1, 0): (-3, 1),
    (1, 0, 1, 1): (-3, 3),
    (1, 1, 0, 0): (-1, -1),
    (1, 1, 0, 1): (-1, -3),
    (1, 1, 1, 0): (-3, -1),
    (1, 1, 1, 1): (-3, -3),
}

# TS 36.211 Table 7.1.4-1 (64QAM), spot rows.
QAM64_SPOT_ROWS = {
    (0, 0, 0, 0, 0, 0): (3, 3),
    (0, 0, 0, 1, 0, 1): (3, 7),
    (0, 1, 1, 0, 1, 0): (7, -3),
    (1, 0, 1, 1, 0, 1): (-5, 7),
    (1, 1, 1, 1, 1, 1): (-7, -7),
}


def _label_index(bits):
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    return idx


@pytest.mark.parametrize(
    "q,table,norm",
    [(2, QPSK_TABLE, 2), (4, QAM16_TABLE, 10), (6, QAM64_SPOT_ROWS, 42)],
)
def test_labels_match_standard_tables(q, table, norm):
    const = build_constellation(q)
    for bits, (i, qq) in table.items():
        expected = (i + 1j * qq) / np.sqrt(norm)
        assert const.points[_label_index(bits)] == pytest.approx(expected, abs=1e-15)
        assert tuple(const.labels[_label_index(bits)]) == bits


@pytest.mark.parametrize("q", [2, 4, 6])
def test_unit_average_energy(q):
    const = build_constellation(q)
    assert np.mean(np.abs(const.points) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_qam64_grid_geometry(qam64):
    pts = qam64.points
    assert len(set(np.round(pts, 12))) == 64
    dist = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(dist, np.inf)
    assert dist.min() == pytest.approx(2 / np.sqrt(42), rel=1e-12)


def test_unsupported_order_rejected():
    with pytest.raises(ValueError):
        build_constellation(3)


def test_map_bits_qpsk_example(qpsk):
    out = map_bits(qpsk, [0, 0, 1, 1])
    assert_allclose(out, [(1 + 1j) / np.sqrt(2), (-1 - 1j) / np.sqrt(2)], atol=1e-15)


def test_map_bits_empty(qpsk):
    assert map_bits(qpsk, []).size == 0


def test_map_bits_length_mismatch(qam16):
    with pytest.raises(ValueError):
        map_bits(qam16, [0, 1, 0])


@pytest.mark.parametrize("q", [2, 4, 6])
def test_hard_demap_roundtrip(q):
    const = build_constellation(q)
    bits = const.labels.ravel()
    symbols = map_bits(const, bits)
    assert np.array_equal(hard_demap(const, symbols), bits)


def _soft_stats_bruteforce(const, llrs, clip=50.0):
    """Independent 2^Q-point enumeration of the prior mean/variance."""
    llrs = np.clip(np.asarray(llrs, float), -clip, clip)
    mean = 0.0
    second = 0.0
    for idx in range(const.size):
        p = 1.0
        for i, b in enumerate(const.labels[idx]):
            p1 = 1.0 / (1.0 + np.exp(-llrs[i]))
            p *= p1 if b == 1 else 1.0 - p1
        mean += p * const.points[idx]
        second += p * abs(const.points[idx]) ** 2
    return mean, second - abs(mean) ** 2


def test_soft_stats_zero_llrs(qam16):
    stats = soft_stats(qam16, np.zeros(4))
    assert stats.mean == pytest.approx(0.0, abs=1e-14)
    assert stats.var == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("q", [2, 4, 6])
def test_soft_stats_certainty_limit(q):
    const = build_constellation(q)
    stats = soft_stats(const, np.full(q, 50.0))
    target = const.points[const.size - 1]  # the all-ones label
    assert abs(stats.mean - target) < 1e-6
    assert stats.var < 1e-6


def test_soft_stats_qpsk_single_llr(qpsk):
    # Derived with the 4-point enumeration oracle: with bit 0 -> +1/sqrt(2)
    # per TS 36.211 and L = log P(1)/P(0), the in-phase mean is
    # -tanh(L/2)/sqrt(2); the quadrature bit LLR 0 leaves zero imaginary mean.
    for llr in (-3.0, -0.5, 0.7, 2.0):
        stats = soft_stats(qpsk, [llr, 0.0])
        mean_ref, var_ref = _soft_stats_bruteforce(qpsk, [llr, 0.0])
        assert stats.mean == pytest.approx(mean_ref, abs=1e-12)
        assert stats.var == pytest.approx(var_ref, abs=1e-12)
        assert stats.mean.real == pytest.approx(-np.tanh(llr / 2) / np.sqrt(2), abs=1e-12)
        assert stats.mean.imag == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    q=st.sampled_from([2, 4, 6]),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_soft_stats_matches_enumeration_and_var_nonnegative(q, seed):
    const = build_constellation(q)
    rng = np.random.default_rng(seed)
    llrs = rng.uniform(-80, 80, size=q)  # exercises clipping too
    stats = soft_stats(const, llrs)
    mean_ref, var_ref = _soft_stats_bruteforce(const, llrs)
    assert stats.mean == pytest.approx(mean_ref, abs=1e-10)
    assert stats.var == pytest.approx(min(var_ref, 1.0), abs=1e-10)
    assert stats.var >= 0.0
    assert stats.var <= 1.0 + 1e-9
    assert abs(stats.mean) <= const.max_magnitude + 1e-12


def test_scalar_llrs_noiseless_consistency(qam16):
    for idx in (0, 5, 11, 15):
        s0 = qam16.points[idx]
        llrs = scalar_llrs(qam16, 0.8 * s0, 0.8, 1e-9)
        hard = (llrs > 0).astype(int)
        assert tuple(hard) == tuple(qam16.labels[idx])


def test_scalar_llrs_symmetric_zero(qpsk):
    assert_allclose(scalar_llrs(qpsk, 0.0, 0.7, 0.3), [0.0, 0.0], atol=1e-12)


def test_scalar_llrs_matches_enumeration(qam16):
    rng = np.random.default_rng(42)
    for _ in range(50):
        x_hat = rng.standard_normal() + 1j * rng.standard_normal()
        beta = rng.uniform(0.2, 1.0)
        var = rng.uniform(0.05, 2.0)
        got = scalar_llrs(qam16, x_hat, beta, var)
        scores = -np.abs(x_hat - beta * qam16.points) ** 2 / var
        for i in range(4):
            ones = qam16.labels[:, i] == 1
            ref = scores[ones].max() - scores[~ones].max()
            assert got[i] == pytest.approx(ref, abs=1e-12)


def test_scalar_llrs_odd_under_sign_flip(qpsk):
    rng = np.random.default_rng(3)
    for _ in range(20):
        x_hat = rng.standard_normal() + 1j * rng.standard_normal()
        plus = scalar_llrs(qpsk, x_hat, 0.9, 0.4)
        minus = scalar_llrs(qpsk, -x_hat, 0.9, 0.4)
        assert_allclose(plus, -minus, atol=1e-12)


def test_scalar_llrs_rejects_bad_variance(qpsk):
    with pytest.raises(ValueError):
        scalar_llrs(qpsk, 0.1 + 0.1j, 0.9, 0.0)
