"""Exhaustive reference detectors over the full symbol-vector space.

These enumerate every hypothesis in S^{N_L} and are used as ground truth in
tests and as baselines in simulations: the exact bitwise posterior detector
(log-sum-exp over hypotheses) and its max-log approximation.  A hypothesis-
count guard keeps accidental 64-QAM rank-4 invocations from running away.

Candidate i is the vector whose concatenated Q-bit labels (layer 0 most
significant) spell i in binary, so bit p of the candidate index is coded bit
p and per-bit hypothesis partitions are plain reshapes of the candidate
axis.  Distances are computed directly from the channel (no Gram/table
decomposition, which these oracles exist to check) by splitting the layers
into two halves: with d_a = y - H_A x_a and e_b = H_B x_b,
||y - H x||^2 = ||d_a||^2 - 2 Re<d_a, e_b> + ||e_b||^2, evaluated as one
cross-product matrix instead of |S|^K full columns.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .constellation import Constellation

#: Largest admissible hypothesis count |S|^{N_L}.
MAX_HYPOTHESES = 10**6

_energy_cache: dict = {}


def _check_guard(size: int, n_layers: int) -> int:
    n = size**n_layers
    if n > MAX_HYPOTHESES:
        raise ValueError(f"search space {size}^{n_layers} exceeds {MAX_HYPOTHESES}")
    return n


def _energies(constellation: Constellation, n_layers: int) -> np.ndarray:
    """||x||^2 of every vector in S^K, ordered by concatenated bit label."""
    key = (constellation.q, n_layers)
    cached = _energy_cache.get(key)
    if cached is not None:
        return cached
    _check_guard(constellation.size, n_layers)
    point_energy = np.abs(constellation.points) ** 2
    acc = np.zeros(())
    for layer in range(n_layers):
        shape = [1] * n_layers
        shape[layer] = constellation.size
        acc = acc + point_energy.reshape(shape)
    energy = acc.reshape(-1)
    _energy_cache[key] = energy
    return energy


def _half_column_sums(h_half: np.ndarray, constellation: Constellation) -> np.ndarray:
    """H_half x for every x in S^k, accumulated layer by layer: (n_rx, S^k)."""
    n_rx, k = h_half.shape
    if k == 0:
        return np.zeros((n_rx, 1), dtype=complex)
    acc = np.zeros(())
    for layer in range(k):
        shape = [n_rx] + [1] * k
        shape[1 + layer] = constellation.size
        acc = acc + (h_half[:, layer : layer + 1] * constellation.points).reshape(shape)
    return acc.reshape(n_rx, -1)


def _mu_matrix(y, h, constellation: Constellation):
    """Squared distances of all hypotheses as a (front-half, back-half) grid."""
    y = np.asarray(y, dtype=complex).ravel()
    h = np.asarray(h, dtype=complex)
    n_layers = h.shape[1]
    _check_guard(constellation.size, n_layers)
    k_front = (n_layers + 1) // 2
    d = y[:, None] - _half_column_sums(h[:, :k_front], constellation)
    e = _half_column_sums(h[:, k_front:], constellation)
    norm_d = np.einsum("rn,rn->n", d.conj(), d).real
    norm_e = np.einsum("rn,rn->n", e.conj(), e).real
    cross = d.real.T @ e.real + d.imag.T @ e.imag
    mu = norm_d[:, None] - 2.0 * cross + norm_e[None, :]
    return mu, k_front


def _per_bit(stat: np.ndarray, n_bits: int, reducer) -> np.ndarray:
    """Per-bit (value-1 minus value-0) reduction of a label-ordered statistic."""
    out = np.empty(n_bits)
    n = stat.size
    for p in range(n_bits):
        grouped = stat.reshape(1 << p, 2, n >> (p + 1))
        red = reducer(grouped)
        out[p] = red[1] - red[0]
    return out


def mlm_llrs(y, h, n0: float, constellation: Constellation) -> np.ndarray:
    """Exact max-log LLRs over the full search space."""
    mu, k_front = _mu_matrix(y, h, constellation)
    scores = mu * (-1.0 / n0)
    return _llrs_from_scores(scores, k_front, constellation.q, "max")


def map_llrs(y, h, n0: float, constellation: Constellation) -> np.ndarray:
    """Exact bitwise posterior LLRs (log-sum-exp over hypotheses)."""
    mu, k_front = _mu_matrix(y, h, constellation)
    scores = mu * (-1.0 / n0)
    return _llrs_from_scores(scores, k_front, constellation.q, "lse")


def _llrs_from_scores(scores: np.ndarray, k_front: int, q: int, kind: str) -> np.ndarray:
    """Per-bit two-hypothesis reduction of a (front, back) score grid.

    Reducing first over the other half and then over the bit partition is
    exact for both max and log-sum-exp (both are associative over unions).
    """
    if kind == "max":
        row, col = scores.max(axis=1), scores.max(axis=0)
        red = lambda a: a.max(axis=(0, 2))  # noqa: E731
    elif kind == "lse":
        row, col = logsumexp(scores, axis=1), logsumexp(scores, axis=0)
        red = lambda a: logsumexp(a, axis=(0, 2))  # noqa: E731
    else:
        raise ValueError(f"unknown reduction kind: {kind!r}")
    front = _per_bit(row, k_front * q, red)
    if scores.shape[1] == 1:
        return front
    n_back_bits = int(round(np.log2(scores.shape[1])))
    back = _per_bit(col, n_back_bits, red)
    return np.concatenate([front, back])


def ce_aware_oracle(
    y,
    h,
    n0: float,
    sigma_ce_sq: float,
    constellation: Constellation,
    mode: str = "mlm",
) -> np.ndarray:
    """Exhaustive detection with the estimation-error-aware candidate score.

    Each hypothesis x is scored by N_R log(N0 + ||x||^2 s) + mu(x) / (N0 +
    ||x||^2 s); at s = 0 this reduces to the plain oracle of the same mode.
    """
    h = np.asarray(h, dtype=complex)
    n_layers = h.shape[1]
    mu, k_front = _mu_matrix(y, h, constellation)
    denom = n0 + _energies(constellation, n_layers) * sigma_ce_sq
    denom = denom.reshape(mu.shape)
    scores = -(h.shape[0] * np.log(denom) + mu / denom)
    if mode not in ("mlm", "map"):
        raise ValueError(f"unknown oracle mode: {mode!r}")
    return _llrs_from_scores(scores, k_front, constellation.q, "max" if mode == "mlm" else "lse")
