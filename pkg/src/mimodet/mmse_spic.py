"""Iterative MMSE detection with soft parallel interference cancellation.

Each iteration forms prior symbol means/variances from the current bit LLRs,
cancels the mean interference per layer, filters with a prior-aware MMSE
matrix, and demodulates with the per-layer Gaussian approximation.  The first
iteration starts from zero LLRs (zero means, unit variances), which makes it
algebraically identical to a one-shot MMSE demodulator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import (
    DEFAULT_LLR_CLIP,
    Constellation,
    scalar_llrs,
    soft_stats,
)
from .numerics import hpd_solve

#: Floor applied to effective gains and post-filter variances.
VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class SpicState:
    """Per-layer outputs of the final interference-cancellation iteration.

    beta/noise_var/sinr are the clamped post-filter statistics (beta in
    (0, 1], noise_var > 0).  gain is the raw filter gain Re{g^H h} actually
    realized by the shared filter; with small prior variances it exceeds 1,
    and the Gaussian demodulation model x_hat = gain * x + w must use it to
    stay self-consistent (the clamped beta would misplace every
    non-constant-modulus symbol in the noiseless limit).
    """

    x_hat: np.ndarray
    beta: np.ndarray
    noise_var: np.ndarray
    sinr: np.ndarray
    llrs: np.ndarray
    iterations: int
    gain: np.ndarray = None


def mmse_oneshot(y, h, n0: float) -> np.ndarray:
    """One-shot MMSE estimate H^H (H H^H + N0 I)^{-1} y."""
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex).ravel()
    m = h @ h.conj().T + n0 * np.eye(h.shape[0])
    return h.conj().T @ hpd_solve(m, y)


def pic(y, h, means, n: int) -> np.ndarray:
    """Cancel the soft means of all layers except n from the observation."""
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex).ravel()
    means = np.asarray(means, dtype=complex).ravel()
    if not 0 <= n < h.shape[1]:
        raise ValueError(f"layer index {n} out of range")
    return y - h @ means + h[:, n] * means[n]

def spic_filter(h, variances, n0: float) -> np.ndarray:
    """Prior-aware MMSE filter matrix W^H, one row per layer.

    W^H = (H^H H R + N0 I)^{-1} H^H with R = diag(variances).  Evaluated as
    H^H (H R H^H + N0 I)^{-1}, which is the same matrix by the push-through
    identity but keeps the factorized system Hermitian positive definite for
    any diagonal R >= 0.  With R = I this is the one-shot MMSE filter.
    """
    h = np.asarray(h, dtype=complex)
    variances = np.asarray(variances, dtype=float).ravel()
    m = (h * variances[None, :]) @ h.conj().T + n0 * np.eye(h.shape[0])
    return hpd_solve(m, h).conj().T


def post_stats(g_row, h_col, var: float):
    """Effective gain, residual variance and SINR for one filtered layer.

    g_row is the layer's row of W^H (so x_hat = g_row @ y_pic).  The gain
    beta = Re{g_row @ h} is clamped to [VAR_FLOOR, 1] and the residual
    variance beta * (1 - var * beta) floored at VAR_FLOOR, so downstream
    divisions are always safe.
    """
    g_row = np.asarray(g_row, dtype=complex).ravel()
    h_col = np.asarray(h_col, dtype=complex).ravel()
    beta = float(np.clip(np.real(np.dot(g_row, h_col)), VAR_FLOOR, 1.0))
    noise_var = float(max(beta * (1.0 - var * beta), VAR_FLOOR))
    return beta, noise_var, beta * beta / noise_var


def run(
    y,
    h,
    n0: float,
    constellation: Constellation,
    n_iter: int = 2,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> SpicState:
    """Run n_iter interference-cancellation iterations and return the state."""
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex).ravel()
    n_layers = h.shape[1]
    q = constellation.q

    means = np.zeros(n_layers, dtype=complex)
    variances = np.ones(n_layers)
    x_hat = np.zeros(n_layers, dtype=complex)
    beta = np.zeros(n_layers)
    noise_var = np.zeros(n_layers)
    sinr = np.zeros(n_layers)
    gain = np.zeros(n_layers)
    llrs = np.zeros(n_layers * q)

    for it in range(n_iter):
        if it > 0:
            for n in range(n_layers):
                stats = soft_stats(constellation, llrs[n * q : (n + 1) * q], llr_clip)
                means[n] = stats.mean
                variances[n] = stats.var
        w_h = spic_filter(h, variances, n0)
        resid = y - h @ means
        bias = w_h @ h  # W^H H; diagonal carries the per-layer gains
        x_hat = w_h @ resid + np.diag(bias) * means
        for n in range(n_layers):
            beta[n], noise_var[n], sinr[n] = post_stats(w_h[n], h[:, n], variances[n])
            # Demodulate against the realized gain, not the clamped one: the
            # shared filter's gain passes 1 once priors sharpen, and
            # x_hat = gain * x + w only holds with the raw value.
            gain[n] = max(float(np.real(np.dot(w_h[n], h[:, n]))), VAR_FLOOR)
            llr_var = max(gain[n] * (1.0 - variances[n] * gain[n]), VAR_FLOOR)
            llrs[n * q : (n + 1) * q] = scalar_llrs(constellation, x_hat[n], gain[n], llr_var)

    return SpicState(
        x_hat=x_hat,
        beta=beta,
        noise_var=noise_var,
        sinr=sinr,
        llrs=llrs,
        iterations=n_iter,
        gain=gain,
    )
