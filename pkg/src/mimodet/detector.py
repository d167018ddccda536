"""Reduced-candidate-search soft ML detection pipeline.

detect() chains the stages: iterative MMSE interference cancellation for
per-layer posteriors, SINR-based layer ordering, per-layer candidate sets,
Cartesian enumeration with optional corner pruning, optional Gibbs-sampler
refinement of the candidate pool, table-driven metric evaluation (optionally
estimation-error aware), reduced-set max-log LLRs, and a linear combination
of those LLRs with the interference-cancellation ones.  Bits on which every
surviving candidate agrees have no reduced-set LLR and fall back to the
interference-cancellation LLR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import mcmc as mcmc_mod
from . import mmse_spic
from .candidates import (
    CandidateList,
    CandidateSet,
    build_sets,
    enumerate_and_reduce,
)
from .constellation import Constellation
from .metric_engine import (
    MetricTables,
    OpCounters,
    ce_aware_transform,
    evaluate_all,
    precompute_tables,
)
from .numerics import gram, matched_filter


@dataclass(frozen=True)
class DetectorConfig:
    """Knobs of the reduced-search detector."""

    m_vector: tuple
    n_iter: int = 2
    alpha: float = 0.5
    reduction: bool = True
    real_paired: bool = False
    pairing: str = "same-layer"
    ce_aware: bool = False
    mcmc: bool = False
    mcmc_samplers: int = 4
    mcmc_sweeps: int = 3
    mcmc_pool_cap: Optional[int] = None
    llr_clip: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "m_vector", tuple(int(m) for m in self.m_vector))
        if any(a < b for a, b in zip(self.m_vector, self.m_vector[1:])):
            raise ValueError(f"m_vector must be non-increasing, got {self.m_vector}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.llr_clip <= 0.0:
            raise ValueError("llr_clip must be positive")
        if self.pairing not in ("same-layer", "cross-layer"):
            raise ValueError(f"unknown pairing mode: {self.pairing!r}")


@dataclass
class DetectionResult:
    """Final LLRs plus per-stage diagnostics of one detect() call."""

    llrs: np.ndarray
    missing_bits: np.ndarray
    candidates_evaluated: int
    counters: OpCounters
    spic_llrs: np.ndarray
    rcs_llrs: np.ndarray
    layer_order: np.ndarray = field(default=None)


def candidate_llrs(
    metrics,
    bits,
    n0: float,
    llr_clip: float,
    scores=None,
):
    """Reduced-set max-log LLRs and the missing-bit mask.

    bits[i, p] is coded bit p of candidate i.  Each candidate's score
    defaults to -2 * mu_rec / N0, where mu_rec is the marginal metric (the
    observation-energy offset cancels in the per-bit difference); pass
    scores to substitute another per-candidate log-likelihood, e.g. the
    estimation-error-aware one.  A bit all candidates agree on has an empty
    hypothesis side: it is flagged missing and pinned to +-llr_clip with the
    unanimous sign.
    """
    bits = np.asarray(bits)
    if scores is None:
        scores = -2.0 * np.asarray(metrics, dtype=float) / n0
    else:
        scores = np.asarray(scores, dtype=float)
    if bits.shape[0] != scores.size:
        raise ValueError("bits/metrics candidate counts differ")
    if scores.size == 0:
        raise ValueError("at least one candidate is required")
    ones = bits == 1
    col = scores[:, None]
    best1 = np.where(ones, col, -np.inf).max(axis=0)
    best0 = np.where(~ones, col, -np.inf).max(axis=0)
    missing = np.isinf(best1) | np.isinf(best0)
    llrs = np.where(missing, 0.0, best1 - best0)
    llrs[missing & np.isinf(best0)] = llr_clip  # all candidates say 1
    llrs[missing & np.isinf(best1)] = -llr_clip  # all candidates say 0
    return llrs, missing


def combine(l_rcs, l_spic, alpha: float, missing_bits, llr_clip: float) -> np.ndarray:
    """Linear LLR combination with missing-bit fallback and clipping.

    Output is alpha * l_rcs + (1 - alpha) * l_spic per bit, except that
    missing bits use alpha = 0 so they carry the interference-cancellation
    LLR; the result is clipped to +-llr_clip.
    """
    l_rcs = np.asarray(l_rcs, dtype=float)
    l_spic = np.asarray(l_spic, dtype=float)
    missing_bits = np.asarray(missing_bits, dtype=bool)
    if not (l_rcs.shape == l_spic.shape == missing_bits.shape):
        raise ValueError("LLR vectors and missing-bit mask must have equal shapes")
    a = np.where(missing_bits, 0.0, alpha)
    return np.clip(a * l_rcs + (1.0 - a) * l_spic, -llr_clip, llr_clip)


def _expand_sets(cs: CandidateSet, pool_indices: np.ndarray, constellation) -> CandidateSet:
    """Grow each candidate set to cover a refined pool's symbols.

    Original members keep their ranks; new symbols are appended in ascending
    alphabet order so the expansion is deterministic.
    """
    indices = []
    values = []
    for k in range(cs.n_layers):
        base = list(np.asarray(cs.indices[k], dtype=np.intp))
        present = set(base)
        extra = sorted(set(int(i) for i in pool_indices[:, k]) - present)
        merged = np.asarray(base + extra, dtype=np.intp)
        indices.append(merged)
        values.append(constellation.points[merged])
    return CandidateSet(
        indices=tuple(indices),
        values=tuple(values),
        m_vector=tuple(len(ix) for ix in indices),
        layer_order=cs.layer_order,
        alphabet_size=cs.alphabet_size,
    )


def _anchor_pool(cs: CandidateSet, pool_indices: np.ndarray) -> CandidateList:
    """Express alphabet-index vectors as ranks within (expanded) sets."""
    ranks = np.empty_like(pool_indices)
    for k in range(cs.n_layers):
        lookup = np.full(cs.alphabet_size, -1, dtype=np.intp)
        lookup[np.asarray(cs.indices[k], dtype=np.intp)] = np.arange(cs.m_vector[k])
        ranks[:, k] = lookup[pool_indices[:, k]]
    if np.any(ranks < 0):
        raise ValueError("pool candidate outside the expanded candidate sets")
    return CandidateList(
        indices=pool_indices,
        survivors=np.ones(pool_indices.shape[0], dtype=bool),
        ranks=ranks,
        from_product=False,
        reduced=False,
        m_vector=cs.m_vector,
    )


def detect(
    y,
    h_est,
    n0: float,
    constellation: Constellation,
    config: DetectorConfig,
    rng: Optional[np.random.Generator] = None,
    sigma_ce_sq: float = 0.0,
) -> DetectionResult:
    """Run the full reduced-search pipeline on one received vector."""
    y = np.asarray(y, dtype=complex).ravel()
    h_est = np.asarray(h_est, dtype=complex)
    n_layers = h_est.shape[1]
    q = constellation.q
    if len(config.m_vector) != n_layers:
        raise ValueError(
            f"m_vector length {len(config.m_vector)} != layer count {n_layers}"
        )
    if config.real_paired:
        from . import realpair

        return realpair.detect_real_paired(
            y, h_est, n0, constellation, config, rng=rng, sigma_ce_sq=sigma_ce_sq
        )

    # Estimation error inflates the effective noise during candidate
    # generation by the mean candidate energy (the exact per-candidate energy
    # is unknown until the candidates exist).
    n0_gen = n0 + n_layers * sigma_ce_sq if config.ce_aware else n0

    spic = mmse_spic.run(
        y, h_est, n0_gen, constellation, config.n_iter, llr_clip=config.llr_clip
    )
    cs = build_sets(spic, constellation, config.m_vector)
    order = cs.layer_order
    h_ord = h_est[:, order]
    g = gram(h_ord)
    z = matched_filter(h_ord, y)
    cl = enumerate_and_reduce(cs, config.reduction)

    counters = OpCounters()
    if config.mcmc:
        if rng is None:
            raise ValueError("mcmc refinement requires an rng")
        pool_cap = config.mcmc_pool_cap
        if pool_cap is None:
            pool_cap = cl.n_survivors
        gibbs_cfg = mcmc_mod.GibbsConfig(
            n_samplers=config.mcmc_samplers,
            n_sweeps=config.mcmc_sweeps,
            pool_cap=pool_cap,
        )
        refined = mcmc_mod.gibbs_refine(cl, g, z, n0_gen, constellation, gibbs_cfg, rng)
        cs = _expand_sets(cs, refined.indices, constellation)
        cl = _anchor_pool(cs, refined.indices)

    tables = precompute_tables(g, z, cs, counters)
    mu_rec = evaluate_all(tables, cl, counters)
    surv_idx = cl.surviving_indices()

    if config.ce_aware:
        x_surv = constellation.points[surv_idx]
        mu_true = 2.0 * mu_rec + float(np.real(np.vdot(y, y)))
        scores = -ce_aware_transform(mu_true, x_surv, n0, sigma_ce_sq, h_est.shape[0])
    else:
        scores = None

    bits_det = constellation.labels[surv_idx].reshape(surv_idx.shape[0], -1)
    l_det, missing_det = candidate_llrs(
        mu_rec, bits_det, n0, config.llr_clip, scores=scores
    )

    # Undo the layer ordering: detector layer k's Q bits belong to physical
    # layer order[k].
    l_rcs = np.empty(n_layers * q)
    missing = np.empty(n_layers * q, dtype=bool)
    for k in range(n_layers):
        phys = int(order[k])
        l_rcs[phys * q : (phys + 1) * q] = l_det[k * q : (k + 1) * q]
        missing[phys * q : (phys + 1) * q] = missing_det[k * q : (k + 1) * q]

    llrs = combine(l_rcs, spic.llrs, config.alpha, missing, config.llr_clip)
    return DetectionResult(
        llrs=llrs,
        missing_bits=missing,
        candidates_evaluated=int(surv_idx.shape[0]),
        counters=counters,
        spic_llrs=spic.llrs.copy(),
        rcs_llrs=l_rcs,
        layer_order=order,
    )
