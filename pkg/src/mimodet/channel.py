"""Block-fading MIMO channel generation with receiver impairments.

Channels are drawn per detection instance (block fading) from the Kronecker
spatial correlation model, with the one-sided correlation matrices in the
4-antenna form of 3GPP TS 36.101 Annex B.  Impairments covered:

* additive white Gaussian receiver noise of density N0,
* transmit EVM, modeled as white Gaussian error added to the transmitted
  symbols before the channel,
* channel estimation error: the detector sees H_est = H_true + E with E
  entrywise CN(0, sigma_ce_sq).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import hermitian_sqrt


@dataclass(frozen=True)
class ImpairmentConfig:
    """Transmit/receive impairment knobs for channel generation."""

    evm_fraction: float = 0.0
    sigma_ce_sq: float = 0.0
    alpha_tx: float = 0.0
    beta_rx: float = 0.0

    def __post_init__(self):
        if self.evm_fraction < 0.0:
            raise ValueError("evm_fraction must be >= 0")
        if self.sigma_ce_sq < 0.0:
            raise ValueError("sigma_ce_sq must be >= 0")
        for name in ("alpha_tx", "beta_rx"):
            c = getattr(self, name)
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {c}")


@dataclass(frozen=True)
class ChannelRealization:
    """One block-fading draw: true and estimated channel plus noise levels."""

    h_true: np.ndarray
    h_est: np.ndarray
    n0: float
    sigma_ce_sq: float


def correlation_matrix(n: int, c: float) -> np.ndarray:
    """One-sided spatial correlation matrix for 1, 2 or 4 antennas.

    Follows the TS 36.101 Annex B parameterization: entry (i, j) equals
    c ** ((|i-j| / (n-1)) ** 2), giving the exponents {0, 1/9, 4/9, 1} for
    n = 4.  c = 0 yields the identity, c = 1 the all-ones matrix.
    """
    if n not in (1, 2, 4):
        raise ValueError(f"unsupported antenna count {n} (expected 1, 2 or 4)")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"correlation coefficient must lie in [0, 1], got {c}")
    if n == 1:
        return np.eye(1, dtype=complex)
    i = np.arange(n)
    expo = (np.abs(i[:, None] - i[None, :]) / (n - 1)) ** 2
    r = np.where(expo == 0.0, 1.0, float(c) ** expo)
    return r.astype(complex)


def _complex_gaussian(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    """IID circular complex Gaussian entries of total variance var."""
    s = np.sqrt(var / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@lru_cache(maxsize=32)
def _correlation_sqrt(n: int, c: float) -> np.ndarray:
    return hermitian_sqrt(correlation_matrix(n, c))


def generate_channel(
    rng: np.random.Generator,
    n_rx: int,
    n_layers: int,
    impairments: ImpairmentConfig,
    n0: float,
) -> ChannelRealization:
    """Draw one correlated Rayleigh block-fading realization.

    H_true = R_rx^{1/2} H_w R_tx^{1/2} with H_w entrywise CN(0, 1); the
    estimated channel adds IID CN(0, sigma_ce_sq) estimation error.
    """
    if n0 <= 0.0:
        raise ValueError("n0 must be positive")
    h_w = _complex_gaussian(rng, (n_rx, n_layers), 1.0)
    h_true = h_w
    if impairments.beta_rx > 0.0:
        h_true = _correlation_sqrt(n_rx, impairments.beta_rx) @ h_true
    if impairments.alpha_tx > 0.0:
        h_true = h_true @ _correlation_sqrt(n_layers, impairments.alpha_tx)
    if impairments.sigma_ce_sq > 0.0:
        h_est = h_true + _complex_gaussian(rng, (n_rx, n_layers), impairments.sigma_ce_sq)
    else:
        h_est = h_true.copy()
    return ChannelRealization(
        h_true=h_true, h_est=h_est, n0=n0, sigma_ce_sq=impairments.sigma_ce_sq
    )


def transmit(
    rng: np.random.Generator,
    h_true: np.ndarray,
    x,
    n0: float,
    evm_fraction: float = 0.0,
) -> np.ndarray:
    """Received vector y = H (x + e_evm) + w.

    e_evm is IID CN(0, evm_fraction^2) per layer (unit average symbol energy
    assumed) and w is IID CN(0, n0).  Both vanish at zero settings, giving
    the plain linear model exactly.
    """
    x = np.asarray(x, dtype=complex).ravel()
    h_true = np.asarray(h_true, dtype=complex)
    if x.size != h_true.shape[1]:
        raise ValueError(f"x has length {x.size}, expected {h_true.shape[1]}")
    tx = x
    if evm_fraction > 0.0:
        tx = x + _complex_gaussian(rng, x.shape, evm_fraction**2)
    y = h_true @ tx
    if n0 > 0.0:
        y = y + _complex_gaussian(rng, y.shape, n0)
    return y
