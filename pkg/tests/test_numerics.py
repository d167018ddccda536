"""Dense linear algebra kernels against loop-level and cofactor oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mimodet import gram, hpd_solve, matched_filter
from mimodet.numerics import NotPositiveDefiniteError, hermitian_sqrt

from conftest import random_complex


def _gram_triple_loop(h):
    rows, cols = h.shape
    g = np.zeros((cols, cols), dtype=complex)
    for i in range(cols):
        for j in range(cols):
            for r in range(rows):
                g[i, j] += np.conj(h[r, i]) * h[r, j]
    return g


def _laplace_det(a):
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * _laplace_det(minor)
    return total


def _cofactor_inverse(a):
    """Adjugate-based inverse; independent of any factorization routine."""
    n = a.shape[0]
    adj = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            adj[j, i] = (-1) ** (i + j) * _laplace_det(minor)
    return adj / _laplace_det(a)


def test_gram_identity():
    assert_allclose(gram(np.eye(2)), np.eye(2), atol=1e-15)


def test_gram_1x1():
    assert_allclose(gram(np.array([[2.0]])), [[4.0]], atol=1e-15)


def test_gram_matches_triple_loop():
    rng = np.random.default_rng(0)
    h = random_complex(rng, 4, 3)
    g = gram(h)
    ref = _gram_triple_loop(h)
    assert np.max(np.abs(g - ref)) < 1e-12 * np.max(np.abs(ref))


def test_gram_hermitian_property():
    rng = np.random.default_rng(1)
    for _ in range(200):
        g = gram(random_complex(rng, 4, 4))
        assert np.max(np.abs(g - g.conj().T)) < 1e-14


def test_matched_filter_identity_and_zero():
    y = np.array([1 + 2j, -0.5j, 3.0])
    assert_allclose(matched_filter(np.eye(3), y), y, atol=1e-15)
    assert_allclose(matched_filter(np.eye(3), np.zeros(3)), np.zeros(3), atol=1e-15)


def test_matched_filter_naive_loop():
    rng = np.random.default_rng(2)
    h = random_complex(rng, 4, 3)
    y = random_complex(rng, 4)
    z = matched_filter(h, y)
    ref = np.array(
        [sum(np.conj(h[r, c]) * y[r] for r in range(4)) for c in range(3)]
    )
    assert np.max(np.abs(z - ref)) < 1e-12


def test_matched_filter_dimension_mismatch():
    with pytest.raises(ValueError):
        matched_filter(np.eye(3), np.zeros(2))


def test_hpd_solve_identity_and_scalar():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert_allclose(hpd_solve(np.eye(2), b), b, atol=1e-14)
    assert_allclose(hpd_solve(2 * np.eye(3), np.eye(3)), 0.5 * np.eye(3), atol=1e-14)


def test_hpd_solve_matches_cofactor_inverse():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        m = random_complex(rng, n, n)
        a = m.conj().T @ m + np.eye(n)
        b = random_complex(rng, n, 2)
        x = hpd_solve(a, b)
        ref = _cofactor_inverse(a) @ b
        assert np.max(np.abs(x - ref)) < 1e-9 * max(np.max(np.abs(ref)), 1.0)


def test_hpd_solve_rejects_indefinite():
    a = np.diag([1.0, -1.0])
    with pytest.raises(NotPositiveDefiniteError):
        hpd_solve(a, np.eye(2))


def test_hpd_solve_rejects_tiny_pivot():
    a = np.diag([1.0, 1e-14])
    with pytest.raises(NotPositiveDefiniteError):
        hpd_solve(a, np.eye(2))


def test_hpd_solve_residual_bound_bulk():
    # 10,000 well-conditioned random instances, residual <= 1e-9 * ||B||.
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 5))
        m = random_complex(rng, n, n)
        a = m.conj().T @ m + np.eye(n)
        b = random_complex(rng, n)
        x = hpd_solve(a, b)
        worst = max(worst, np.linalg.norm(a @ x - b) / np.linalg.norm(b))
    assert worst <= 1e-9


def test_hermitian_sqrt_contract():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m = random_complex(rng, 4, 4)
        r = m @ m.conj().T
        s = hermitian_sqrt(r)
        assert np.max(np.abs(s @ s.conj().T - r)) < 1e-10 * max(np.max(np.abs(r)), 1.0)
