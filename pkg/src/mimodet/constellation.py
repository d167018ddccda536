"""Gray-labeled QAM alphabets and soft-bit helpers.

Implements the LTE downlink modulation mappings (3GPP TS 36.211 section 7.1)
for QPSK, 16-QAM and 64-QAM, together with the soft-symbol statistics and
per-layer max-log LLR computations used by the iterative detectors.

LLR sign convention everywhere in this package: L = log P(b=1) / P(b=0),
i.e. a positive LLR favors bit value 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Average-energy normalizers from TS 36.211 (sqrt(2), sqrt(10), sqrt(42)).
_NORM = {2: 2.0, 4: 10.0, 6: 42.0}

#: Default symmetric clip applied to LLRs before exponentiation.  At |L|=50
#: the bit probabilities are within 2e-22 of 0/1, so clipping is lossless in
#: double precision while preventing overflow.
DEFAULT_LLR_CLIP = 50.0


def _pam_levels(half_q: int) -> np.ndarray:
    """Unnormalized PAM amplitudes per TS 36.211, indexed by the bit label.

    The in-phase branch of a 2^Q-QAM symbol uses bits (b0, b2, b4) and the
    quadrature branch (b1, b3, b5); both branches share this level function.
    """
    n = 1 << half_q
    levels = np.empty(n)
    for idx in range(n):
        bits = [(idx >> (half_q - 1 - t)) & 1 for t in range(half_q)]
        if half_q == 1:
            v = 1.0 - 2.0 * bits[0]
        elif half_q == 2:
            v = (1 - 2 * bits[0]) * (2 - (1 - 2 * bits[1]))
        elif half_q == 3:
            v = (1 - 2 * bits[0]) * (4 - (1 - 2 * bits[1]) * (2 - (1 - 2 * bits[2])))
        else:
            raise ValueError(f"unsupported bits-per-branch {half_q}")
        levels[idx] = v
    return levels


@dataclass(frozen=True)
class Constellation:
    """Immutable 2^Q-QAM alphabet with bit labels.

    ``points[i]`` is the symbol whose Q-bit label, read MSB first, is the
    binary expansion of ``i``; ``labels[i]`` holds those bits explicitly.
    ``pam_points``/``pam_labels`` describe the shared per-branch PAM alphabet
    (Q/2 bits per branch) used by the real-valued detector formulation.
    """

    q: int
    points: np.ndarray
    labels: np.ndarray
    pam_points: np.ndarray
    pam_labels: np.ndarray
    bit_is_one: np.ndarray = field(repr=False)  # (q, 2^q) bool masks

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def max_magnitude(self) -> float:
        return float(np.max(np.abs(self.points)))


def build_constellation(q: int) -> Constellation:
    """Build the unit-average-energy Gray QAM alphabet for Q bits/symbol.

    Raises ValueError for Q outside {2, 4, 6}.
    """
    if q not in _NORM:
        raise ValueError(f"unsupported bits per symbol: {q} (expected 2, 4 or 6)")
    half = q // 2
    scale = 1.0 / np.sqrt(_NORM[q])
    pam = _pam_levels(half) * scale

    n = 1 << q
    labels = np.zeros((n, q), dtype=np.uint8)
    for i in range(q):
        labels[:, i] = (np.arange(n) >> (q - 1 - i)) & 1

    # Branch sub-label: even-position bits drive the I branch, odd the Q branch.
    i_idx = np.zeros(n, dtype=np.intp)
    q_idx = np.zeros(n, dtype=np.intp)
    for t in range(half):
        i_idx = (i_idx << 1) | labels[:, 2 * t]
        q_idx = (q_idx << 1) | labels[:, 2 * t + 1]
    points = pam[i_idx] + 1j * pam[q_idx]

    pam_labels = np.zeros((1 << half, half), dtype=np.uint8)
    for t in range(half):
        pam_labels[:, t] = (np.arange(1 << half) >> (half - 1 - t)) & 1

    return Constellation(
        q=q,
        points=points,
        labels=labels,
        pam_points=pam,
        pam_labels=pam_labels,
        bit_is_one=(labels.T == 1),
    )


@dataclass(frozen=True)
class SoftSymbolStats:
    """Per-layer prior mean and variance derived from bit LLRs."""

    mean: complex
    var: float


def map_bits(constellation: Constellation, bits) -> np.ndarray:
    """Map a coded-bit vector onto symbols, Q consecutive bits per layer."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    q = constellation.q
    if bits.size % q != 0:
        raise ValueError(f"bit count {bits.size} not divisible by Q={q}")
    blocks = bits.reshape(-1, q)
    idx = np.zeros(blocks.shape[0], dtype=np.intp)
    for i in range(q):
        idx = (idx << 1) | blocks[:, i]
    return constellation.points[idx]


def hard_demap(constellation: Constellation, symbols) -> np.ndarray:
    """Nearest-point demapping back to bits (inverse of map_bits off-noise)."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    idx = np.argmin(np.abs(symbols[:, None] - constellation.points[None, :]), axis=1)
    return constellation.labels[idx].ravel().astype(np.int64)


def soft_stats(
    constellation: Constellation,
    llrs,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> SoftSymbolStats:
    """Prior symbol mean and variance from the layer's Q bit LLRs.

    P(b=1) = 1 / (1 + exp(-L)) after clipping L to +-llr_clip; the symbol
    prior factorizes over bits.  Zero LLRs give mean 0 and unit variance.
    The variance is clamped to [0, 1]: priors concentrated on outer 64-QAM
    points can push it above the unit symbol energy, which the downstream
    prior-aware filters do not admit.
    """
    llrs = np.clip(np.asarray(llrs, dtype=float).ravel(), -llr_clip, llr_clip)
    if llrs.size != constellation.q:
        raise ValueError(f"expected {constellation.q} LLRs, got {llrs.size}")
    p1 = 1.0 / (1.0 + np.exp(-llrs))
    probs = np.prod(np.where(constellation.labels == 1, p1, 1.0 - p1), axis=1)
    mean = complex(np.dot(probs, constellation.points))
    second = float(np.dot(probs, np.abs(constellation.points) ** 2))
    var = min(max(second - abs(mean) ** 2, 0.0), 1.0)
    return SoftSymbolStats(mean=mean, var=var)


def scalar_llrs(
    constellation: Constellation,
    x_hat: complex,
    beta: float,
    noise_var: float,
) -> np.ndarray:
    """Max-log bit LLRs for the scalar Gaussian model x_hat = beta*s + noise.

    For each bit position the score of hypothesis s is
    -|x_hat - beta*s|^2 / noise_var and the LLR is the difference of the two
    per-hypothesis maxima.
    """
    if noise_var <= 0.0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    scores = -np.abs(x_hat - beta * constellation.points) ** 2 / noise_var
    out = np.empty(constellation.q)
    for i in range(constellation.q):
        ones = constellation.bit_is_one[i]
        out[i] = np.max(scores[ones]) - np.max(scores[~ones])
    return out
