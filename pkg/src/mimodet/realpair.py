"""Real-valued paired detection path.

The complex system is stacked into reals and the 2N_L real components are
grouped into N_L pairs (same-layer or cross-layer); each pair is then treated
as one detection unit throughout the pipeline: joint 2x2 MMSE interference
cancellation, bivariate-Gaussian posteriors over the PAM-amplitude grid,
pair-level candidate sets and block metric tables.  Cross-layer pairing
decouples the real and imaginary parts of a layer, which is where the extra
degrees of freedom over the complex pipeline come from.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import mcmc as mcmc_mod
from .candidates import (
    CandidateList,
    CandidateSet,
    enumerate_and_reduce,
    order_layers,
    real_decompose,
)
from .constellation import Constellation
from .metric_engine import OpCounters, ce_aware_transform, evaluate_all, precompute_tables
from .mmse_spic import VAR_FLOOR
from .numerics import hpd_solve


def pair_grid(constellation: Constellation):
    """Joint alphabet of one pair: all PAM x PAM 2-vectors and their bits.

    Grid index i1 * P + i2 combines PAM labels i1 (first component) and i2
    (second); the bit row concatenates both components' branch labels.
    """
    pam = constellation.pam_points
    labels = constellation.pam_labels
    p = pam.size
    i1, i2 = np.divmod(np.arange(p * p), p)
    values = np.stack([pam[i1], pam[i2]], axis=1)
    bits = np.concatenate([labels[i1], labels[i2]], axis=1)
    return values, bits


def pam_soft_stats(constellation: Constellation, llrs, llr_clip: float):
    """Prior mean/variance of one PAM component from its branch bit LLRs."""
    llrs = np.clip(np.asarray(llrs, dtype=float).ravel(), -llr_clip, llr_clip)
    labels = constellation.pam_labels
    if llrs.size != labels.shape[1]:
        raise ValueError(f"expected {labels.shape[1]} LLRs, got {llrs.size}")
    p1 = 1.0 / (1.0 + np.exp(-llrs))
    probs = np.prod(np.where(labels == 1, p1, 1.0 - p1), axis=1)
    mean = float(np.dot(probs, constellation.pam_points))
    second = float(np.dot(probs, constellation.pam_points**2))
    return mean, max(second - mean * mean, 0.0)


def _floor_spd(mat: np.ndarray):
    """Symmetrize and floor the eigenvalues of a 2x2 covariance; also invert."""
    sym = 0.5 * (mat + mat.T)
    w, v = np.linalg.eigh(sym)
    w = np.clip(w, VAR_FLOOR, None)
    cov = (v * w) @ v.T
    inv = (v / w) @ v.T
    return cov, inv


def _component_bit_positions(pairs: np.ndarray, n_layers: int, q: int) -> np.ndarray:
    """Global coded-bit positions covered by each pair, component order.

    Component c < n_layers is layer c's in-phase branch (even bit offsets of
    that layer's Q-bit label); component n_layers + c is layer c's quadrature
    branch (odd offsets).
    """
    half = q // 2
    pos = np.empty((pairs.shape[0], q), dtype=np.intp)
    for k, (c1, c2) in enumerate(pairs):
        for t, c in enumerate((int(c1), int(c2))):
            layer, off = (c, 0) if c < n_layers else (c - n_layers, 1)
            pos[k, t * half : (t + 1) * half] = layer * q + 2 * np.arange(half) + off
    return pos


class PairSpicState:
    """Joint per-pair outputs of the real-valued interference cancellation."""

    def __init__(self, v_hat, gain, cov_inv, sinr, llrs, iterations):
        self.v_hat = v_hat  # (K, 2) filtered pair outputs
        self.gain = gain  # (K, 2, 2) effective gain matrices
        self.cov_inv = cov_inv  # (K, 2, 2) whitening matrices
        self.sinr = sinr  # (K,)
        self.llrs = llrs  # global bit positions
        self.iterations = iterations


def run_pair_spic(
    model,
    constellation: Constellation,
    n0: float,
    n_iter: int,
    llr_clip: float,
) -> PairSpicState:
    """Joint-pair MMSE interference cancellation on the real-valued model."""
    n_layers = model.n_layers
    q = constellation.q
    half = q // 2
    flat = model.pairs.reshape(-1)
    hp = model.h_real[:, flat]
    y_r = model.y_real
    n_half = n0 / 2.0  # per-real-dimension noise variance
    grid_values, grid_bits = pair_grid(constellation)
    bit_pos = _component_bit_positions(model.pairs, n_layers, q)

    n_comp = 2 * n_layers
    means = np.zeros(n_comp)
    variances = np.full(n_comp, 0.5)
    llrs = np.zeros(n_layers * q)
    v_hat = np.zeros((n_layers, 2))
    gain = np.zeros((n_layers, 2, 2))
    cov_inv = np.zeros((n_layers, 2, 2))
    sinr = np.zeros(n_layers)

    for it in range(n_iter):
        if it > 0:
            for k in range(n_layers):
                for t in range(2):
                    comp_llrs = llrs[bit_pos[k, t * half : (t + 1) * half]]
                    mean, var = pam_soft_stats(constellation, comp_llrs, llr_clip)
                    means[2 * k + t] = mean
                    variances[2 * k + t] = var
        m = (hp * variances[None, :]) @ hp.T + n_half * np.eye(hp.shape[0])
        w_t = hpd_solve(m, hp).T  # rows are the per-component filters
        b_full = w_t @ hp
        wresid = w_t @ (y_r - hp @ means)
        for k in range(n_layers):
            sl = slice(2 * k, 2 * k + 2)
            b_k = 0.5 * (b_full[sl, sl] + b_full[sl, sl].T)
            v_hat[k] = wresid[sl] + b_k @ means[sl]
            cov = b_k - b_k @ np.diag(variances[sl]) @ b_k
            cov, inv = _floor_spd(cov)
            gain[k] = b_k
            cov_inv[k] = inv
            sinr[k] = 0.5 * float(np.trace(b_k.T @ inv @ b_k))
            resid = v_hat[k][None, :] - grid_values @ b_k.T
            scores = -np.einsum("ai,ij,aj->a", resid, inv, resid)
            for t in range(q):
                ones = grid_bits[:, t] == 1
                llrs[bit_pos[k, t]] = np.max(scores[ones]) - np.max(scores[~ones])

    return PairSpicState(
        v_hat=v_hat, gain=gain, cov_inv=cov_inv, sinr=sinr, llrs=llrs, iterations=n_iter
    )


def build_pair_sets(
    spic: PairSpicState,
    constellation: Constellation,
    m_vector,
) -> CandidateSet:
    """Pair-level candidate sets ranked by the whitened 2D distance."""
    grid_values, _ = pair_grid(constellation)
    m_vector = tuple(int(m) for m in m_vector)
    size = grid_values.shape[0]
    if any(m < 1 or m > size for m in m_vector):
        raise ValueError(f"m_vector entries must lie in [1, {size}], got {m_vector}")
    order = order_layers(spic.sinr, m_vector)
    indices = []
    values = []
    for k, m in enumerate(m_vector):
        phys = int(order[k])
        resid = spic.v_hat[phys][None, :] - grid_values @ spic.gain[phys].T
        dist = np.einsum("ai,ij,aj->a", resid, spic.cov_inv[phys], resid)
        ranked = np.argsort(dist, kind="stable")[:m]
        indices.append(ranked)
        values.append(grid_values[ranked])
    return CandidateSet(
        indices=tuple(indices),
        values=tuple(values),
        m_vector=m_vector,
        layer_order=order,
        alphabet_size=size,
    )


def _pair_blocks(hp_ord: np.ndarray, y_r: np.ndarray, n_layers: int):
    """2x2 Gram blocks and matched-filter pairs in detector order."""
    g_full = hp_ord.T @ hp_ord
    z_full = hp_ord.T @ y_r
    g_blocks = np.empty((n_layers, n_layers, 2, 2))
    for a in range(n_layers):
        for b in range(n_layers):
            g_blocks[a, b] = g_full[2 * a : 2 * a + 2, 2 * b : 2 * b + 2]
    return g_blocks, z_full.reshape(n_layers, 2)


def _expand_pair_sets(cs: CandidateSet, pool_indices, grid_values) -> CandidateSet:
    indices = []
    values = []
    for k in range(cs.n_layers):
        base = list(np.asarray(cs.indices[k], dtype=np.intp))
        extra = sorted(set(int(i) for i in pool_indices[:, k]) - set(base))
        merged = np.asarray(base + extra, dtype=np.intp)
        indices.append(merged)
        values.append(grid_values[merged])
    return CandidateSet(
        indices=tuple(indices),
        values=tuple(values),
        m_vector=tuple(len(ix) for ix in indices),
        layer_order=cs.layer_order,
        alphabet_size=cs.alphabet_size,
    )


def _anchor_pair_pool(cs: CandidateSet, pool_indices: np.ndarray) -> CandidateList:
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


def detect_real_paired(
    y,
    h_est,
    n0: float,
    constellation: Constellation,
    config,
    rng: Optional[np.random.Generator] = None,
    sigma_ce_sq: float = 0.0,
):
    """Full reduced-search pipeline on the real-valued paired model."""
    from .detector import DetectionResult, candidate_llrs, combine

    y = np.asarray(y, dtype=complex).ravel()
    h_est = np.asarray(h_est, dtype=complex)
    n_layers = h_est.shape[1]
    q = constellation.q
    n0_gen = n0 + n_layers * sigma_ce_sq if config.ce_aware else n0

    model = real_decompose(h_est, y, config.pairing)
    spic = run_pair_spic(model, constellation, n0_gen, config.n_iter, config.llr_clip)
    grid_values, grid_bits = pair_grid(constellation)
    bit_pos = _component_bit_positions(model.pairs, n_layers, q)

    cs = build_pair_sets(spic, constellation, config.m_vector)
    order = cs.layer_order
    flat = model.pairs[order].reshape(-1)
    hp_ord = model.h_real[:, flat]
    g_blocks, z_blocks = _pair_blocks(hp_ord, model.y_real, n_layers)
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
        pool_indices, _ = mcmc_mod.gibbs_refine_blocks(
            cl.surviving_indices(), g_blocks, z_blocks, grid_values, n0_gen, gibbs_cfg, rng
        )
        cs = _expand_pair_sets(cs, pool_indices, grid_values)
        cl = _anchor_pair_pool(cs, pool_indices)

    tables = precompute_tables(g_blocks, z_blocks, cs, counters)
    mu_rec = evaluate_all(tables, cl, counters)
    surv_idx = cl.surviving_indices()

    if config.ce_aware:
        x_surv = grid_values[surv_idx].reshape(surv_idx.shape[0], -1)
        mu_true = 2.0 * mu_rec + float(np.real(np.vdot(y, y)))
        scores = -ce_aware_transform(mu_true, x_surv, n0, sigma_ce_sq, h_est.shape[0])
    else:
        scores = None

    bits_det = grid_bits[surv_idx].reshape(surv_idx.shape[0], -1)
    l_det, missing_det = candidate_llrs(
        mu_rec, bits_det, n0, config.llr_clip, scores=scores
    )

    l_rcs = np.empty(n_layers * q)
    missing = np.empty(n_layers * q, dtype=bool)
    for k in range(n_layers):
        phys = int(order[k])
        l_rcs[bit_pos[phys]] = l_det[k * q : (k + 1) * q]
        missing[bit_pos[phys]] = missing_det[k * q : (k + 1) * q]

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
