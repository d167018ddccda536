"""Seeded Monte Carlo link-level simulation over an SNR sweep.

Every (SNR point, trial) pair derives its own random generator from the
master seed by counter, so results are bit-reproducible and independent of
how trials are distributed over workers.  All detectors in the roster see
the identical channel, symbols and noise per trial, giving paired error
comparisons by construction; optional pairwise discordance accumulation
supports McNemar-style significance tests on those pairs.

SNR is symbol energy over noise density per receive antenna with
unit-energy symbols and unit-variance channel entries, so
N0 = N_L * 10^(-SNR/10).
"""

from __future__ import annotations

import csv
import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import mmse_spic, oracle
from .channel import ImpairmentConfig, generate_channel, transmit
from .constellation import build_constellation, map_bits
from .detector import DetectorConfig, detect

CSV_HEADER = (
    "snr_db,detector,trials,bits,bit_errors,ber,vec_errors,ver,"
    "avg_candidates,real_mults,real_adds,wall_ms"
)

DETECTOR_KINDS = ("mmse", "mmse-spic", "rcsml", "rcsml-basic", "mlm", "map")

#: Default per-layer candidate budgets by modulation order (trimmed to the
#: layer count for smaller ranks).
DEFAULT_M_VECTORS = {2: (4, 3, 2, 2), 4: (5, 5, 3, 3), 6: (7, 7, 4, 4)}


class ConfigError(ValueError):
    """Simulation configuration rejected; the message names the field."""


@dataclass(frozen=True)
class DetectorSpec:
    """One roster entry: a detector kind plus its parameters."""

    kind: str
    name: str = ""
    n_iter: int = 2
    config: Optional[DetectorConfig] = None

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ConfigError(f"detectors[].kind: unknown kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)
        if self.kind in ("rcsml", "rcsml-basic") and self.config is None:
            raise ConfigError(f"detectors[].config: required for kind {self.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation campaign."""

    q: int
    snr_db: tuple
    trials: int
    detectors: tuple
    n_tx: int = 4
    n_rx: int = 4
    n_layers: int = 4
    seed: int = 0
    impairments: ImpairmentConfig = field(default_factory=ImpairmentConfig)
    workers: int = 1
    measure_time: bool = False
    paired_stats: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if self.q not in (2, 4, 6):
            raise ConfigError(f"q: unsupported bits per symbol {self.q}")
        if not self.snr_db:
            raise ConfigError("snr_db: at least one SNR point is required")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if not self.detectors:
            raise ConfigError("detectors: the roster must not be empty")
        if not 1 <= self.n_layers <= min(self.n_tx, self.n_rx) or self.n_layers > 4:
            raise ConfigError(
                f"n_layers: need 1 <= n_layers <= min(n_tx, n_rx) <= 4, got "
                f"n_layers={self.n_layers}, n_tx={self.n_tx}, n_rx={self.n_rx}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ConfigError(f"detectors: duplicate names in roster: {names}")


def default_m_vector(q: int, n_layers: int) -> tuple:
    return DEFAULT_M_VECTORS[q][:n_layers]


def default_roster(q: int, n_layers: int, include_oracles: bool = False):
    """Reasonable roster: linear baselines plus the reduced-search detector."""
    m = default_m_vector(q, n_layers)
    roster = [
        DetectorSpec(kind="mmse"),
        DetectorSpec(kind="mmse-spic", n_iter=2),
        DetectorSpec(kind="rcsml", config=DetectorConfig(m_vector=m, n_iter=2)),
    ]
    if include_oracles:
        roster.append(DetectorSpec(kind="mlm"))
    return tuple(roster)


PRESETS = {
    "test1": dict(q=4, impairments=ImpairmentConfig(evm_fraction=0.06)),
    "test2": dict(q=6, impairments=ImpairmentConfig(evm_fraction=0.06)),
    "test3": dict(
        q=2,
        impairments=ImpairmentConfig(evm_fraction=0.06, alpha_tx=0.9, beta_rx=0.9),
    ),
    "test4": dict(
        q=4,
        impairments=ImpairmentConfig(evm_fraction=0.06, alpha_tx=0.1, beta_rx=0.1),
    ),
}


def snr_to_n0(snr_db: float, n_layers: int) -> float:
    return n_layers * 10.0 ** (-snr_db / 10.0)


def _detector_rng(cfg: SimConfig, snr_idx: int, trial: int, name: str):
    tag = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(cfg.seed, snr_idx, trial, tag))
    )


def _run_detector(spec: DetectorSpec, y, ch, constellation, rng):
    """Returns (llrs, candidates, mults, adds, channel_mults)."""
    if spec.kind == "mmse":
        state = mmse_spic.run(y, ch.h_est, ch.n0, constellation, n_iter=1)
        return state.llrs, 0, 0, 0, 0
    if spec.kind == "mmse-spic":
        state = mmse_spic.run(y, ch.h_est, ch.n0, constellation, n_iter=spec.n_iter)
        return state.llrs, 0, 0, 0, 0
    if spec.kind in ("rcsml", "rcsml-basic"):
        res = detect(
            y,
            ch.h_est,
            ch.n0,
            constellation,
            spec.config,
            rng=rng,
            sigma_ce_sq=ch.sigma_ce_sq,
        )
        c = res.counters
        return (
            res.llrs,
            res.candidates_evaluated,
            c.real_mults,
            c.real_adds,
            c.channel_rate_mults,
        )
    if spec.kind == "mlm":
        llrs = oracle.mlm_llrs(y, ch.h_est, ch.n0, constellation)
    elif spec.kind == "map":
        llrs = oracle.map_llrs(y, ch.h_est, ch.n0, constellation)
    else:  # unreachable given DetectorSpec validation
        raise ConfigError(f"unknown detector kind {spec.kind!r}")
    return llrs, constellation.size**ch.h_est.shape[1], 0, 0, 0


@dataclass
class _Accumulator:
    trials: int = 0
    bits: int = 0
    bit_errors: int = 0
    vec_errors: int = 0
    candidates: int = 0
    real_mults: int = 0
    real_adds: int = 0
    channel_rate_mults: int = 0
    wall_ns: int = 0

    def merge(self, other: "_Accumulator"):
        for f in (
            "trials",
            "bits",
            "bit_errors",
            "vec_errors",
            "candidates",
            "real_mults",
            "real_adds",
            "channel_rate_mults",
            "wall_ns",
        ):
            setattr(self, f, getattr(self, f) + getattr(other, f))


def _run_chunk(cfg: SimConfig, snr_idx: int, trial_lo: int, trial_hi: int):
    """Run a contiguous block of trials for one SNR point."""
    constellation = build_constellation(cfg.q)
    n0 = snr_to_n0(cfg.snr_db[snr_idx], cfg.n_layers)
    n_bits = cfg.q * cfg.n_layers
    accs = {spec.name: _Accumulator() for spec in cfg.detectors}
    pair_keys = [
        (a.name, b.name)
        for i, a in enumerate(cfg.detectors)
        for b in cfg.detectors[i + 1 :]
    ]
    pairwise = {k: [0, 0] for k in pair_keys} if cfg.paired_stats else {}

    for trial in range(trial_lo, trial_hi):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(cfg.seed, snr_idx, trial))
        )
        ch = generate_channel(rng, cfg.n_rx, cfg.n_layers, cfg.impairments, n0)
        bits = rng.integers(0, 2, size=n_bits)
        x = map_bits(constellation, bits)
        y = transmit(rng, ch.h_true, x, n0, cfg.impairments.evm_fraction)

        err_vectors = {}
        for spec in cfg.detectors:
            det_rng = _detector_rng(cfg, snr_idx, trial, spec.name)
            t0 = time.perf_counter_ns() if cfg.measure_time else 0
            llrs, cands, mults, adds, ch_mults = _run_detector(
                spec, y, ch, constellation, det_rng
            )
            if cfg.measure_time:
                accs[spec.name].wall_ns += time.perf_counter_ns() - t0
            hard = (np.asarray(llrs) > 0).astype(np.int64)
            errs = hard != bits
            err_vectors[spec.name] = errs
            acc = accs[spec.name]
            acc.trials += 1
            acc.bits += n_bits
            acc.bit_errors += int(errs.sum())
            acc.vec_errors += int(errs.any())
            acc.candidates += int(cands)
            acc.real_mults += int(mults)
            acc.real_adds += int(adds)
            acc.channel_rate_mults += int(ch_mults)
        for key in pairwise:
            ea, eb = err_vectors[key[0]], err_vectors[key[1]]
            pairwise[key][0] += int(np.count_nonzero(ea & ~eb))
            pairwise[key][1] += int(np.count_nonzero(eb & ~ea))

    return snr_idx, accs, pairwise


@dataclass
class SimResults:
    """Aggregated campaign output: one row per (SNR, detector)."""

    config: SimConfig
    rows: list
    pairwise: dict  # (snr_idx, name_a, name_b) -> [a_only_bits, b_only_bits]


def run_simulation(cfg: SimConfig) -> SimResults:
    """Execute the campaign, distributing trials over workers."""
    chunks = []
    n_chunks = cfg.workers if cfg.trials >= cfg.workers else 1
    for snr_idx in range(len(cfg.snr_db)):
        bounds = np.linspace(0, cfg.trials, n_chunks + 1, dtype=int)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi > lo:
                chunks.append((snr_idx, int(lo), int(hi)))

    agg = {
        (si, spec.name): _Accumulator()
        for si in range(len(cfg.snr_db))
        for spec in cfg.detectors
    }
    pairwise = {}

    def _fold(result):
        snr_idx, accs, pw = result
        for name, acc in accs.items():
            agg[(snr_idx, name)].merge(acc)
        for (a, b), counts in pw.items():
            key = (snr_idx, a, b)
            cur = pairwise.setdefault(key, [0, 0])
            cur[0] += counts[0]
            cur[1] += counts[1]

    if cfg.workers == 1 or len(chunks) == 1:
        for snr_idx, lo, hi in chunks:
            _fold(_run_chunk(cfg, snr_idx, lo, hi))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_chunk, cfg, *chunk) for chunk in chunks]
            for fut in futures:
                _fold(fut.result())

    rows = []
    for snr_idx, snr in enumerate(cfg.snr_db):
        for spec in cfg.detectors:
            acc = agg[(snr_idx, spec.name)]
            rows.append(
                {
                    "snr_db": snr,
                    "detector": spec.name,
                    "trials": acc.trials,
                    "bits": acc.bits,
                    "bit_errors": acc.bit_errors,
                    "ber": acc.bit_errors / acc.bits if acc.bits else 0.0,
                    "vec_errors": acc.vec_errors,
                    "ver": acc.vec_errors / acc.trials if acc.trials else 0.0,
                    "avg_candidates": acc.candidates / acc.trials if acc.trials else 0.0,
                    "real_mults": acc.real_mults,
                    "real_adds": acc.real_adds,
                    "wall_ms": acc.wall_ns / 1e6,
                    "channel_rate_mults": acc.channel_rate_mults,
                }
            )
    return SimResults(config=cfg, rows=rows, pairwise=pairwise)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_results(rows: Sequence[dict], path) -> None:
    """Write aggregate rows as CSV with the fixed column schema."""
    if not rows:
        raise ValueError("no result rows to write")
    columns = CSV_HEADER.split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def write_results_json(rows: Sequence[dict], path) -> None:
    """JSON mirror of the CSV rows, plus the channel-rate counter report."""
    if not rows:
        raise ValueError("no result rows to write")
    payload = []
    for row in rows:
        entry = dict(row)
        entry["mults_symbol_rate"] = row["real_mults"]
        entry["mults_channel_rate"] = row["channel_rate_mults"]
        entry["adds"] = row["real_adds"]
        payload.append(entry)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
