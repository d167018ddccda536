"""Correlated channel generation and impairment model tests.

The statistical checks replicate the construction's first/second moments by
Monte Carlo: 1e5 draws keep the sampling error well under the 2% tolerances.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mimodet import (
    ImpairmentConfig,
    correlation_matrix,
    generate_channel,
    transmit,
)


def test_correlation_zero_is_identity():
    for n in (1, 2, 4):
        assert_allclose(correlation_matrix(n, 0.0), np.eye(n), atol=1e-15)


def test_correlation_one_is_all_ones():
    assert_allclose(correlation_matrix(2, 1.0), np.ones((2, 2)), atol=1e-15)


def test_correlation_closed_form_entry():
    r = correlation_matrix(4, 0.9)
    assert r[0, 1] == pytest.approx(0.9 ** (1 / 9), abs=1e-12)
    assert r[0, 1].real == pytest.approx(0.98836, abs=5e-6)
    assert r[0, 2] == pytest.approx(0.9 ** (4 / 9), abs=1e-12)
    assert r[0, 3] == pytest.approx(0.9, abs=1e-12)
    assert_allclose(np.diag(r), np.ones(4), atol=1e-15)
    assert_allclose(r, r.conj().T, atol=1e-15)


def test_correlation_positive_semidefinite_grid():
    for n in (2, 4):
        for c in np.linspace(0.0, 1.0, 11):
            eigs = np.linalg.eigvalsh(correlation_matrix(n, float(c)))
            assert eigs.min() >= -1e-10


def test_correlation_rejects_bad_antenna_count():
    with pytest.raises(ValueError):
        correlation_matrix(3, 0.5)


def test_impairment_validation():
    with pytest.raises(ValueError):
        ImpairmentConfig(evm_fraction=-0.1)
    with pytest.raises(ValueError):
        ImpairmentConfig(alpha_tx=1.5)


def test_generate_channel_no_estimation_error():
    rng = np.random.default_rng(0)
    ch = generate_channel(rng, 4, 4, ImpairmentConfig(), n0=0.1)
    assert np.array_equal(ch.h_est, ch.h_true)


def test_generate_channel_estimation_error_statistics():
    rng = np.random.default_rng(1)
    imp = ImpairmentConfig(sigma_ce_sq=0.05)
    errs = []
    for _ in range(20_000):
        ch = generate_channel(rng, 2, 2, imp, n0=0.1)
        errs.append(ch.h_est - ch.h_true)
    errs = np.asarray(errs)
    assert np.mean(np.abs(errs) ** 2) == pytest.approx(0.05, rel=0.02)
    assert abs(np.mean(errs)) < 0.01


def test_generate_channel_seed_reproducible():
    imp = ImpairmentConfig(sigma_ce_sq=0.01, alpha_tx=0.3, beta_rx=0.3)
    a = generate_channel(np.random.default_rng(7), 4, 4, imp, n0=0.2)
    b = generate_channel(np.random.default_rng(7), 4, 4, imp, n0=0.2)
    assert np.array_equal(a.h_true, b.h_true)
    assert np.array_equal(a.h_est, b.h_est)


def test_generate_channel_uncorrelated_covariance():
    # alpha = beta = 0: vec(H) covariance is the identity within 2%.
    rng = np.random.default_rng(2)
    draws = np.empty((100_000, 4), dtype=complex)
    imp = ImpairmentConfig()
    for t in range(draws.shape[0]):
        draws[t] = generate_channel(rng, 2, 2, imp, n0=1.0).h_true.ravel()
    cov = draws.conj().T @ draws / draws.shape[0]
    assert np.max(np.abs(cov - np.eye(4))) < 0.02


def test_generate_channel_tx_correlation_moment():
    # alpha = 0.9: adjacent column correlation approaches 0.9^(1/9).
    rng = np.random.default_rng(3)
    imp = ImpairmentConfig(alpha_tx=0.9)
    acc = 0.0
    n_draws = 100_000
    for _ in range(n_draws):
        h = generate_channel(rng, 4, 4, imp, n0=1.0).h_true
        acc += np.vdot(h[:, 0], h[:, 1])
    corr = acc / (n_draws * 4)
    assert corr.real == pytest.approx(0.9 ** (1 / 9), rel=0.02)
    assert abs(corr.imag) < 0.02


def test_transmit_noiseless_exact():
    rng = np.random.default_rng(4)
    h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    x = np.array([1 + 1j, -1 + 0.5j])
    assert np.array_equal(transmit(rng, h, x, n0=0.0, evm_fraction=0.0), h @ x)


def test_transmit_noise_variance():
    rng = np.random.default_rng(5)
    h = np.eye(2, dtype=complex)
    acc = 0.0
    n_draws = 100_000
    for _ in range(n_draws):
        y = transmit(rng, h, np.zeros(2), n0=0.37, evm_fraction=0.0)
        acc += np.mean(np.abs(y) ** 2)
    assert acc / n_draws == pytest.approx(0.37, rel=0.02)


def test_transmit_evm_excess_power():
    # With x = 0 the EVM error alone passes through H: per-entry power is
    # N0 + evm^2 * (row energy of H).
    rng = np.random.default_rng(6)
    h = np.array([[1.0, 2.0], [0.5, 1.5]], dtype=complex)
    row_energy = np.sum(np.abs(h) ** 2, axis=1)
    n0, evm = 0.1, 0.06
    acc = np.zeros(2)
    n_draws = 100_000
    for _ in range(n_draws):
        y = transmit(rng, h, np.zeros(2), n0=n0, evm_fraction=evm)
        acc += np.abs(y) ** 2
    measured = acc / n_draws
    expected = n0 + evm**2 * row_energy
    assert_allclose(measured, expected, rtol=0.02)


def test_transmit_reproducible_and_validates():
    h = np.eye(2, dtype=complex)
    a = transmit(np.random.default_rng(8), h, [1, 1j], 0.3, 0.06)
    b = transmit(np.random.default_rng(8), h, [1, 1j], 0.3, 0.06)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        transmit(np.random.default_rng(8), h, [1, 1j, 0], 0.3)
