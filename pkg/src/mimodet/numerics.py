"""Small dense complex linear algebra used by the detectors.

Everything here operates on matrices no larger than 8x8 (4 spatial layers,
doubled in the real-valued formulation), so plain LAPACK-backed numpy calls
are both fast enough and numerically safe.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

#: Smallest admissible Cholesky pivot; below this the input is treated as
#: numerically non-positive-definite.
PIVOT_TOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Hermitian solve meets a non-positive-definite matrix."""


def gram(h) -> np.ndarray:
    """Gram matrix H^H H of a channel matrix."""
    h = np.asarray(h, dtype=complex)
    return h.conj().T @ h


def matched_filter(h, y) -> np.ndarray:
    """Matched-filter output H^H y."""
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex).ravel()
    if y.size != h.shape[0]:
        raise ValueError(f"y has length {y.size}, expected {h.shape[0]}")
    return h.conj().T @ y


def hpd_solve(a, b) -> np.ndarray:
    """Solve A X = B for Hermitian positive definite A via Cholesky.

    Raises NotPositiveDefiniteError when factorization fails or any pivot
    (squared diagonal of the factor) falls below PIVOT_TOL.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    pivots = np.real(np.diag(chol)) ** 2
    if np.min(pivots) < PIVOT_TOL:
        raise NotPositiveDefiniteError(
            f"pivot {np.min(pivots):.3e} below tolerance {PIVOT_TOL:.0e}"
        )
    return scipy.linalg.cho_solve((chol, True), b, check_finite=False)


def hermitian_sqrt(r) -> np.ndarray:
    """Hermitian PSD square root: S with S S^H = R (eigenvalue based)."""
    r = np.asarray(r, dtype=complex)
    w, v = np.linalg.eigh(r)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T
