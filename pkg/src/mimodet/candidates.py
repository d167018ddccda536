"""Per-layer candidate construction and pruning for reduced-search detection.

A detector run picks, for each spatial layer, the most plausible alphabet
members given the interference-cancelled filter outputs, assigns the largest
candidate budget to the weakest layer, enumerates the Cartesian product of
those sets, and optionally prunes "corner" vectors that stack several
least-likely picks.  The real-valued pairing used by the real formulation of
the detector also lives here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constellation import Constellation
from .mmse_spic import SpicState


@dataclass(frozen=True)
class CandidateSet:
    """Ranked per-layer candidate subsets in detector-layer order.

    ``indices[k]`` lists alphabet indices for detector layer k, best first,
    with ``len(indices[k]) == m_vector[k]``.  ``values[k]`` holds the matching
    candidate values: complex symbols in the complex formulation, 2-vectors of
    PAM amplitudes in the real-paired one.  ``layer_order[k]`` is the physical
    layer (or pair) detector layer k refers to.
    """

    indices: tuple
    values: tuple
    m_vector: tuple
    layer_order: np.ndarray
    alphabet_size: int

    @property
    def n_layers(self) -> int:
        return len(self.indices)


@dataclass
class CandidateList:
    """Enumerated candidate vectors, optionally pruned.

    ``ranks`` indexes into the CandidateSet lists (None until the list has
    been re-anchored to a set, e.g. after Gibbs refinement); ``indices`` are
    plain alphabet indices.  ``from_product`` marks untouched lexicographic
    Cartesian enumerations, which the metric engine can evaluate with shared
    prefix sums.
    """

    indices: np.ndarray
    survivors: np.ndarray
    ranks: Optional[np.ndarray] = None
    from_product: bool = False
    reduced: bool = False
    m_vector: tuple = ()

    @property
    def n_survivors(self) -> int:
        return int(np.count_nonzero(self.survivors))

    def surviving_indices(self) -> np.ndarray:
        return self.indices[self.survivors]


def order_layers(sinrs, m_vector) -> np.ndarray:
    """Map detector layers to physical layers by ascending post-SINR.

    Detector layer 0 receives the largest candidate budget and is therefore
    assigned the weakest physical layer; ties go to the lower physical index.
    """
    sinrs = np.asarray(sinrs, dtype=float)
    m_vector = tuple(int(m) for m in m_vector)
    if len(m_vector) != sinrs.size:
        raise ValueError("m_vector length must equal the number of layers")
    if any(a < b for a, b in zip(m_vector, m_vector[1:])):
        raise ValueError(f"m_vector must be non-increasing, got {m_vector}")
    return np.argsort(sinrs, kind="stable")


def build_sets(
    spic: SpicState,
    constellation: Constellation,
    m_vector: Sequence[int],
) -> CandidateSet:
    """Rank alphabet members per layer by the filtered-output posterior.

    Layer k's set holds the m_vector[k] symbols minimizing
    |x_hat_k - beta_k * s|^2, best first, after assigning budgets to layers
    via order_layers.  Ranking ties break on the alphabet index.
    """
    m_vector = tuple(int(m) for m in m_vector)
    size = constellation.size
    if any(m < 1 or m > size for m in m_vector):
        raise ValueError(f"m_vector entries must lie in [1, {size}], got {m_vector}")
    order = order_layers(spic.sinr, m_vector)
    gain = spic.gain if spic.gain is not None else spic.beta
    indices = []
    values = []
    for k, m in enumerate(m_vector):
        phys = int(order[k])
        dist = np.abs(spic.x_hat[phys] - gain[phys] * constellation.points) ** 2
        ranked = np.argsort(dist, kind="stable")[:m]
        indices.append(ranked)
        values.append(constellation.points[ranked])
    return CandidateSet(
        indices=tuple(indices),
        values=tuple(values),
        m_vector=m_vector,
        layer_order=order,
        alphabet_size=size,
    )


def enumerate_and_reduce(cs: CandidateSet, reduction_enabled: bool = True) -> CandidateList:
    """Enumerate the Cartesian product of the candidate sets and prune corners.

    Enumeration is lexicographic in the per-layer ranks.  With reduction on,
    any vector containing the worst-ranked member of its set in two or more
    layers is dropped; single-member layers contribute no worst flag, and the
    all-best vector always survives.
    """
    m = cs.m_vector
    grids = np.meshgrid(*[np.arange(mk, dtype=np.intp) for mk in m], indexing="ij")
    ranks = np.stack([g.ravel() for g in grids], axis=1)
    if reduction_enabled:
        worst = np.zeros(ranks.shape[0], dtype=np.int64)
        for k, mk in enumerate(m):
            if mk > 1:
                worst += ranks[:, k] == mk - 1
        survivors = worst < 2
    else:
        survivors = np.ones(ranks.shape[0], dtype=bool)
    indices = np.empty_like(ranks)
    for k in range(len(m)):
        indices[:, k] = np.asarray(cs.indices[k], dtype=np.intp)[ranks[:, k]]
    return CandidateList(
        indices=indices,
        survivors=survivors,
        ranks=ranks,
        from_product=True,
        reduced=reduction_enabled,
        m_vector=m,
    )


@dataclass(frozen=True)
class RealPairedModel:
    """Real-valued stacking of the complex system plus a component pairing.

    ``h_real`` is the 2N_R x 2N_L stacked channel, ``y_real`` the stacked
    observation.  Component j < N_L is the real part of complex layer j and
    component N_L + j its imaginary part.  ``pairs[k]`` names the two real
    components processed jointly as detector unit k; flattened, the pairs
    form a permutation of all 2N_L components.
    """

    h_real: np.ndarray
    y_real: np.ndarray
    pairs: np.ndarray
    n_layers: int
    mode: str


def real_decompose(h, y, pairing_mode: str = "same-layer") -> RealPairedModel:
    """Stack the complex model into reals and group components into pairs.

    "same-layer" pairs each layer's real and imaginary parts (algebraically
    equivalent to the complex pipeline); "cross-layer" pairs the real part of
    layer k with the imaginary part of layer k+1 (cyclically).
    """
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex).ravel()
    n_layers = h.shape[1]
    h_real = np.block([[h.real, -h.imag], [h.imag, h.real]])
    y_real = np.concatenate([y.real, y.imag])
    k = np.arange(n_layers)
    if pairing_mode == "same-layer":
        pairs = np.stack([k, n_layers + k], axis=1)
    elif pairing_mode == "cross-layer":
        pairs = np.stack([k, n_layers + (k + 1) % n_layers], axis=1)
    else:
        raise ValueError(f"unknown pairing mode: {pairing_mode!r}")
    return RealPairedModel(
        h_real=h_real, y_real=y_real, pairs=pairs, n_layers=n_layers, mode=pairing_mode
    )
