"""Gibbs-sampler refinement of a detector candidate pool.

Samplers start from the best seed vectors, sweep the layers in order, and
resample each layer from its exact conditional posterior given the others,
computed from the Gram/matched-filter decomposition of the distance metric.
Every vector whose metric a resampling step evaluates -- the current state
with the swept layer replaced by each alphabet member -- joins the pool,
which is then deduplicated and truncated to the best metrics.  In the
freezing limit (N0 -> 0) the chain descends greedily and the pool collects
the single-coordinate neighbors along that path.  The layer alphabets are
the full constellation, so refinement can pull in candidates the initial
Cartesian enumeration missed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import CandidateList
from .constellation import Constellation


@dataclass(frozen=True)
class GibbsConfig:
    """Sampler count, sweep budget and pool controls."""

    n_samplers: int = 4
    n_sweeps: int = 3
    temperature: float = 1.0
    pool_cap: int = 16

    def __post_init__(self):
        if self.n_samplers < 1:
            raise ValueError("n_samplers must be >= 1")
        if self.n_sweeps < 0:
            raise ValueError("n_sweeps must be >= 0")
        if self.pool_cap < self.n_samplers:
            raise ValueError("pool_cap must be >= n_samplers")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")


def _complex_blocks(g, z):
    """Real 2x2-block form of a complex Gram matrix and matched filter."""
    g = np.asarray(g, dtype=complex)
    z = np.asarray(z, dtype=complex).ravel()
    k = g.shape[0]
    blocks = np.empty((k, k, 2, 2))
    blocks[..., 0, 0] = g.real
    blocks[..., 0, 1] = -g.imag
    blocks[..., 1, 0] = g.imag
    blocks[..., 1, 1] = g.real
    z_blocks = np.stack([z.real, z.imag], axis=1)
    return blocks, z_blocks


def _pool_metrics(indices: np.ndarray, g_blocks, z_blocks, values) -> np.ndarray:
    """Marginal metric -x.z + x^T G x / 2 for alphabet-index vectors."""
    v = values[indices]  # (N, K, 2)
    lin = np.einsum("nki,ki->n", v, z_blocks)
    quad = np.einsum("nki,kmij,nmj->n", v, g_blocks, v)
    return -lin + 0.5 * quad


def _conditional_probs(state_values, g_blocks, z_blocks, values, layer, n0, temperature):
    """Exact conditional sampling distribution of one layer given the rest."""
    t = z_blocks[layer].copy()
    k = g_blocks.shape[0]
    for m in range(k):
        if m != layer:
            t -= g_blocks[layer, m] @ state_values[m]
    lin = values @ t
    quad = np.einsum("ai,ij,aj->a", values, g_blocks[layer, layer], values)
    logits = (2.0 * lin - quad) / (n0 * temperature)
    logits -= logits.max()
    probs = np.exp(logits)
    probs /= probs.sum()
    return probs


def gibbs_refine_blocks(
    seed_indices: np.ndarray,
    g_blocks: np.ndarray,
    z_blocks: np.ndarray,
    values: np.ndarray,
    n0: float,
    cfg: GibbsConfig,
    rng: np.random.Generator,
):
    """Generic block-valued refinement; returns (pool_indices, pool_metrics).

    seed_indices is (N, K) over a shared per-layer alphabet whose entries are
    the 2-vectors in values (A, 2).  The output pool is sorted by metric with
    lexicographic tie-breaking, capped at cfg.pool_cap, and always retains
    the best seed, so merging visit orders cannot change the result.
    """
    seed_indices = np.asarray(seed_indices, dtype=np.intp)
    if seed_indices.ndim != 2 or seed_indices.shape[0] == 0:
        raise ValueError("seed_indices must be a nonempty (N, K) array")
    n_layers = seed_indices.shape[1]

    seed_metrics = _pool_metrics(seed_indices, g_blocks, z_blocks, values)
    seed_order = np.lexsort(tuple(seed_indices[:, k] for k in range(n_layers - 1, -1, -1)))
    seed_order = seed_order[np.argsort(seed_metrics[seed_order], kind="stable")]
    best_seed = tuple(int(v) for v in seed_indices[seed_order[0]])

    pool = {tuple(int(v) for v in row) for row in seed_indices}
    starts = seed_order[: cfg.n_samplers]
    streams = rng.spawn(len(starts))
    for start, stream in zip(starts, streams):
        state = [int(v) for v in seed_indices[start]]
        state_values = values[state].copy()
        for _ in range(cfg.n_sweeps):
            for layer in range(n_layers):
                probs = _conditional_probs(
                    state_values, g_blocks, z_blocks, values, layer, n0, cfg.temperature
                )
                # Every hypothesis this step scored is a visited vector.
                before, after = tuple(state[:layer]), tuple(state[layer + 1 :])
                pool.update(before + (a,) + after for a in range(values.shape[0]))
                pick = int(stream.choice(values.shape[0], p=probs))
                state[layer] = pick
                state_values[layer] = values[pick]

    pool_indices = np.asarray(sorted(pool), dtype=np.intp)
    metrics = _pool_metrics(pool_indices, g_blocks, z_blocks, values)
    keep = np.argsort(metrics, kind="stable")[: cfg.pool_cap]
    kept = {tuple(int(v) for v in pool_indices[i]) for i in keep}
    if best_seed not in kept:
        keep = keep[:-1]  # drop the worst kept entry in favor of the best seed
        best_pos = int(np.where((pool_indices == np.asarray(best_seed)).all(axis=1))[0][0])
        keep = np.append(keep, best_pos)
        keep = keep[np.argsort(metrics[keep], kind="stable")]
    return pool_indices[keep], metrics[keep]


def gibbs_refine(
    seeds: CandidateList,
    g,
    z,
    n0: float,
    constellation: Constellation,
    cfg: GibbsConfig,
    rng: np.random.Generator,
) -> CandidateList:
    """Refine a complex-symbol candidate list; returns the new pool.

    The returned list carries alphabet indices only; anchoring to (expanded)
    candidate sets for metric tabulation is the caller's job.
    """
    g_blocks, z_blocks = _complex_blocks(g, z)
    values = np.stack([constellation.points.real, constellation.points.imag], axis=1)
    pool_indices, _ = gibbs_refine_blocks(
        seeds.surviving_indices(), g_blocks, z_blocks, values, n0, cfg, rng
    )
    return CandidateList(
        indices=pool_indices,
        survivors=np.ones(pool_indices.shape[0], dtype=bool),
        ranks=None,
        from_product=False,
        reduced=False,
        m_vector=(),
    )
