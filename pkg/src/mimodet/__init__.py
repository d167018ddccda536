"""Soft-output MIMO detection library and link-level simulation harness.

Core pieces: Gray QAM alphabets with soft-bit helpers, correlated block-
fading channel generation, iterative MMSE interference cancellation, a
reduced-candidate-search soft ML detector (candidate pruning, real-valued
pairing, estimation-error-aware scoring, Gibbs refinement, LLR combining)
built on an additions-only table metric engine with operation accounting,
exhaustive reference detectors, and a seeded parallel Monte Carlo harness.
"""

from .candidates import (
    CandidateList,
    CandidateSet,
    RealPairedModel,
    build_sets,
    enumerate_and_reduce,
    order_layers,
    real_decompose,
)
from .channel import (
    ChannelRealization,
    ImpairmentConfig,
    correlation_matrix,
    generate_channel,
    transmit,
)
from .constellation import (
    Constellation,
    SoftSymbolStats,
    build_constellation,
    hard_demap,
    map_bits,
    scalar_llrs,
    soft_stats,
)
from .detector import (
    DetectionResult,
    DetectorConfig,
    candidate_llrs,
    combine,
    detect,
)
from .harness import SimConfig, run_simulation, write_results
from .mcmc import GibbsConfig, gibbs_refine
from .metric_engine import (
    MetricTables,
    OpCounters,
    ce_aware_transform,
    evaluate_all,
    precompute_tables,
    predict_counts,
)
from .mmse_spic import SpicState, mmse_oneshot, pic, post_stats, spic_filter
from .numerics import gram, hpd_solve, matched_filter
from .oracle import ce_aware_oracle, map_llrs, mlm_llrs

__version__ = "0.1.0"

__all__ = [
    "CandidateList",
    "CandidateSet",
    "ChannelRealization",
    "Constellation",
    "DetectionResult",
    "DetectorConfig",
    "GibbsConfig",
    "ImpairmentConfig",
    "MetricTables",
    "OpCounters",
    "RealPairedModel",
    "SimConfig",
    "SoftSymbolStats",
    "SpicState",
    "build_constellation",
    "build_sets",
    "candidate_llrs",
    "ce_aware_oracle",
    "ce_aware_transform",
    "combine",
    "correlation_matrix",
    "detect",
    "enumerate_and_reduce",
    "evaluate_all",
    "generate_channel",
    "gibbs_refine",
    "gram",
    "hard_demap",
    "hpd_solve",
    "map_bits",
    "map_llrs",
    "matched_filter",
    "mlm_llrs",
    "mmse_oneshot",
    "order_layers",
    "pic",
    "post_stats",
    "precompute_tables",
    "predict_counts",
    "real_decompose",
    "run_simulation",
    "scalar_llrs",
    "soft_stats",
    "spic_filter",
    "write_results",
]
