"""Command line interface: run simulation campaigns and render reports.

``mimodet run`` sweeps SNR with the configured detector roster and writes
the aggregate CSV (plus an optional JSON mirror); unless disabled it also
renders the report figures next to the CSV.  ``mimodet plot`` re-renders
figures from an existing result file.  Configuration comes from a YAML file
and/or command line overrides (CLI wins).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .channel import ImpairmentConfig
from .detector import DetectorConfig
from .harness import (
    PRESETS,
    ConfigError,
    DetectorSpec,
    SimConfig,
    default_m_vector,
    default_roster,
    run_simulation,
    write_results,
    write_results_json,
)
from .plotting import load_results, render_report


def _parse_snr(text: str):
    """Parse '0,4,8' or 'start:step:stop' (stop inclusive) into floats."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"snr: expected start:step:stop, got {text!r}")
        start, step, stop = parts
        if step <= 0:
            raise ConfigError("snr: step must be positive")
        out = []
        v = start
        while v <= stop + 1e-9:
            out.append(round(v, 9))
            v += step
        return out
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_m_vector(text: str):
    return tuple(int(p) for p in text.split(",") if p.strip())


def _detector_spec_from_dict(entry: dict, q: int, n_layers: int) -> DetectorSpec:
    entry = dict(entry)
    kind = entry.pop("kind", None)
    if kind is None:
        raise ConfigError("detectors[]: each entry needs a 'kind'")
    name = entry.pop("name", "")
    n_iter = int(entry.pop("n_iter", 2))
    if kind in ("rcsml", "rcsml-basic"):
        entry.setdefault("m_vector", default_m_vector(q, n_layers))
        entry.setdefault("n_iter", n_iter)
        if kind == "rcsml-basic":
            # basic flavor: one-shot candidate generation, pure reduced-set LLRs
            entry.setdefault("alpha", 1.0)
            entry.setdefault("reduction", False)
            entry["n_iter"] = 1
        cfg = DetectorConfig(**entry)
        return DetectorSpec(kind=kind, name=name, config=cfg)
    if entry:
        raise ConfigError(f"detectors[{kind}]: unexpected keys {sorted(entry)}")
    return DetectorSpec(kind=kind, name=name, n_iter=n_iter)


def build_sim_config(args) -> SimConfig:
    """Merge defaults, preset, YAML file and CLI flags into a SimConfig."""
    settings: dict = {"q": 4, "snr_db": [10.0, 14.0, 18.0], "trials": 1000}
    impairments: dict = {}
    detector_entries = None

    if args.preset:
        preset = PRESETS.get(args.preset)
        if preset is None:
            raise ConfigError(f"preset: unknown preset {args.preset!r}")
        settings["q"] = preset["q"]
        imp = preset["impairments"]
        impairments = {
            "evm_fraction": imp.evm_fraction,
            "sigma_ce_sq": imp.sigma_ce_sq,
            "alpha_tx": imp.alpha_tx,
            "beta_rx": imp.beta_rx,
        }

    if args.config:
        with open(args.config) as fh:
            doc = yaml.safe_load(fh) or {}
        settings.update(doc.get("sim", {}))
        impairments.update(doc.get("impairments", {}))
        if "detectors" in doc:
            detector_entries = doc["detectors"]

    if args.snr:
        settings["snr_db"] = _parse_snr(args.snr)
    if args.trials is not None:
        settings["trials"] = args.trials
    if args.seed is not None:
        settings["seed"] = args.seed
    if args.workers is not None:
        settings["workers"] = args.workers

    q = int(settings.get("q", 4))
    n_layers = int(settings.get("n_layers", 4))
    m_vector = _parse_m_vector(args.m_vector) if args.m_vector else None

    if args.detector:
        detector_entries = []
        for kind in args.detector:
            entry = {"kind": kind}
            if kind in ("rcsml", "rcsml-basic"):
                if m_vector:
                    entry["m_vector"] = m_vector
                if args.alpha is not None:
                    entry["alpha"] = args.alpha
                if args.niter is not None:
                    entry["n_iter"] = args.niter
            detector_entries.append(entry)

    if detector_entries is not None:
        detectors = tuple(
            _detector_spec_from_dict(e, q, n_layers) for e in detector_entries
        )
    else:
        detectors = default_roster(q, n_layers)
        if m_vector or args.alpha is not None or args.niter is not None:
            cfg = DetectorConfig(
                m_vector=m_vector or default_m_vector(q, n_layers),
                n_iter=args.niter if args.niter is not None else 2,
                alpha=args.alpha if args.alpha is not None else 0.5,
            )
            detectors = detectors[:-1] + (DetectorSpec(kind="rcsml", config=cfg),)

    try:
        imp_cfg = ImpairmentConfig(**impairments)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"impairments: {exc}") from exc
    settings.pop("impairments", None)
    known = {
        k: v
        for k, v in settings.items()
        if k
        in (
            "q",
            "snr_db",
            "trials",
            "n_tx",
            "n_rx",
            "n_layers",
            "seed",
            "workers",
            "measure_time",
        )
    }
    unknown = set(settings) - set(known)
    if unknown:
        raise ConfigError(f"sim: unknown keys {sorted(unknown)}")
    return SimConfig(detectors=detectors, impairments=imp_cfg, **known)


def _cmd_run(args) -> int:
    cfg = build_sim_config(args)
    results = run_simulation(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_results(results.rows, out)
    print(f"wrote {out} ({len(results.rows)} rows)")
    if args.json_out:
        write_results_json(results.rows, args.json_out)
        print(f"wrote {args.json_out}")
    if not args.no_figures:
        figures = render_report(results.rows, out.parent, stem=out.stem)
        for path in figures:
            print(f"wrote {path}")
    return 0


def _cmd_plot(args) -> int:
    rows = load_results(args.results)
    out_dir = args.out_dir or Path(args.results).parent
    figures = render_report(rows, out_dir, stem=Path(args.results).stem)
    for path in figures:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimodet",
        description="Soft-output MIMO detector simulations and reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte Carlo SNR sweep")
    run_p.add_argument("--config", help="YAML configuration file")
    run_p.add_argument("--preset", choices=sorted(PRESETS), help="named scenario preset")
    run_p.add_argument("--snr", help="SNR points: '0,4,8' or start:step:stop")
    run_p.add_argument("--trials", type=int, help="trials per SNR point")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument(
        "--detector",
        action="append",
        choices=["mmse", "mmse-spic", "rcsml", "rcsml-basic", "mlm", "map"],
        help="add a detector to the roster (repeatable; replaces the default)",
    )
    run_p.add_argument("--m-vector", help="per-layer candidate counts, e.g. 5,5,3,3")
    run_p.add_argument("--alpha", type=float, help="LLR combining weight")
    run_p.add_argument("--niter", type=int, help="interference cancellation iterations")
    run_p.add_argument("--out", default="results.csv", help="output CSV path")
    run_p.add_argument("--json-out", help="also write a JSON mirror of the rows")
    run_p.add_argument("--workers", type=int, help="parallel worker processes")
    run_p.add_argument(
        "--no-figures", action="store_true", help="skip rendering report figures"
    )
    run_p.set_defaults(func=_cmd_run)

    plot_p = sub.add_parser("plot", help="render figures from a result CSV")
    plot_p.add_argument("results", help="result CSV written by 'run'")
    plot_p.add_argument("--out-dir", help="directory for the figures")
    plot_p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
