"""Figure rendering for simulation result files.

Consumes the CSV written by the harness and renders per-detector BER/VER
curves and a complexity summary next to it.  Kept separate from the
simulation loop so existing result files can be re-plotted.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_NUMERIC = {
    "snr_db": float,
    "trials": int,
    "bits": int,
    "bit_errors": int,
    "ber": float,
    "vec_errors": int,
    "ver": float,
    "avg_candidates": float,
    "real_mults": int,
    "real_adds": int,
    "wall_ms": float,
}


def load_results(csv_path) -> list:
    """Parse a harness result CSV back into typed row dicts."""
    rows = []
    with open(csv_path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            for key, cast in _NUMERIC.items():
                if key in row:
                    row[key] = cast(float(row[key]) if cast is int else row[key])
            rows.append(row)
    if not rows:
        raise ValueError(f"no data rows in {csv_path}")
    return rows


def _by_detector(rows):
    order = []
    grouped = {}
    for row in rows:
        name = row["detector"]
        if name not in grouped:
            grouped[name] = []
            order.append(name)
        grouped[name].append(row)
    for name in order:
        grouped[name].sort(key=lambda r: r["snr_db"])
    return order, grouped


def render_report(rows, out_dir, stem: str = "results") -> list:
    """Render error-rate and complexity figures; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    order, grouped = _by_detector(rows)
    written = []

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2), sharex=True)
    for name in order:
        pts = grouped[name]
        snr = [r["snr_db"] for r in pts]
        axes[0].semilogy(snr, [max(r["ber"], 1e-12) for r in pts], marker="o", label=name)
        axes[1].semilogy(snr, [max(r["ver"], 1e-12) for r in pts], marker="s", label=name)
    axes[0].set_ylabel("uncoded BER")
    axes[1].set_ylabel("vector error rate")
    for ax in axes:
        ax.set_xlabel("Es/N0 per Rx antenna [dB]")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / f"{stem}_error_rates.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    labels = order
    cands = [grouped[n][-1]["avg_candidates"] for n in labels]
    mults = [
        grouped[n][-1]["real_mults"] / max(grouped[n][-1]["trials"], 1) for n in labels
    ]
    xpos = range(len(labels))
    axes[0].bar(xpos, cands, color="tab:blue")
    axes[0].set_ylabel("avg candidate vectors / trial")
    axes[1].bar(xpos, mults, color="tab:orange")
    axes[1].set_ylabel("real multiplications / trial")
    for ax in axes:
        ax.set_xticks(list(xpos))
        ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
        ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = out_dir / f"{stem}_complexity.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    return written
