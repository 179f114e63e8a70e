"""Command-line front end: ``qcnhc run``, ``qcnhc preset`` and ``qcnhc compare``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import PRESETS, ConfigError, parse_runs, preset_runs
from .ensemble import AbortedRunError, EnsembleConfig, compare_series, run_ensemble
from .results import RunManifest, read_series, write_series

EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_ABORTED = 3


def load_runs(path) -> dict[str, EnsembleConfig]:
    """Configs from a key = value file or from a manifest written by an earlier run."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        try:
            cfg = RunManifest.from_json(text).ensemble_config()
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: not a valid manifest: {exc}") from None
        return {cfg.scheme: cfg}
    try:
        return parse_runs(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def report(name: str, cfg: EnsembleConfig, series, wall: float) -> str:
    lines = [f"{name}: {cfg.scheme} n_bath={cfg.n_bath} {cfg.mode} "
             f"n_traj={cfg.n_traj} ({wall:.1f} s)"]
    if series.drift_max is not None:
        lines.append(f"  conserved-quantity drift: mean {series.drift_mean:.2e}, "
                     f"max {series.drift_max:.2e}")
    if not cfg.adiabatic:
        lines.append(f"  hops/trajectory {series.hops_per_trajectory:.2f}, capped "
                     f"{series.capped_fraction:.1%}, max hop energy error "
                     f"{series.max_hop_error:.1e}")
    lines.append(f"  aborted {series.aborted_fraction:.2%}")
    return "\n".join(lines)


def execute(runs: dict[str, EnsembleConfig], out: Path, stem: str, workers=None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for scheme, cfg in runs.items():
        name = f"{stem}_{scheme}" if len(runs) > 1 else stem
        start = time.perf_counter()
        try:
            series = run_ensemble(cfg, workers=workers)
        except AbortedRunError as exc:
            series = exc.series
            print(f"{name}: {exc}", file=sys.stderr)
            status = EXIT_ABORTED
        wall = time.perf_counter() - start
        path = write_series(series, RunManifest.build(cfg, series, wall), out / f"{name}.csv")
        print(report(name, cfg, series, wall))
        print(f"  wrote {path}")
    return status


def _cmd_run(args) -> int:
    runs = load_runs(args.config)
    if args.seed is not None:
        runs = {k: v.replace(master_seed=args.seed) for k, v in runs.items()}
    stem = Path(args.config).name.split(".")[0]
    return execute(runs, Path(args.out), stem, args.workers)


def _cmd_preset(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.n_traj is not None:
        overrides["n_traj"] = args.n_traj
    return execute(preset_runs(args.name, **overrides), Path(args.out), args.name, args.workers)


def _cmd_compare(args) -> int:
    a, b = read_series(args.a), read_series(args.b)
    cmp = compare_series(a, b, t_max=args.t_max)
    worst = int(abs(cmp.diff).argmax())
    print(f"sup |a - b| = {cmp.sup:.6g} at t = {cmp.times[worst]:.6g} "
          f"(z = {cmp.z[worst]:.2f}); tolerance {args.tol:g}")
    return 0 if cmp.sup <= args.tol else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcnhc",
        description="Spin-boson <sigma_z(t)> from quantum-classical trajectory ensembles.",
        epilog="QCNHC_WORKERS sets the number of worker processes (speed only).")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the ensemble(s) described by a config file")
    run.add_argument("--config", required=True, help="key = value file or a run manifest")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--out", default=".", help="output directory (default: .)")
    run.add_argument("--workers", type=int, help=argparse.SUPPRESS)
    run.set_defaults(func=_cmd_run)

    pre = sub.add_parser("preset", help="reproduce one figure: writes one CSV per back end")
    pre.add_argument("name", choices=sorted(PRESETS))
    pre.add_argument("--out", required=True, help="output directory")
    pre.add_argument("--seed", type=int, help="override master_seed")
    pre.add_argument("--n-traj", type=int, help="override the ensemble size")
    pre.add_argument("--workers", type=int, help=argparse.SUPPRESS)
    pre.set_defaults(func=_cmd_preset)

    cmp = sub.add_parser("compare", help="sup-norm difference of two result files")
    cmp.add_argument("a")
    cmp.add_argument("b")
    cmp.add_argument("--tol", type=float, required=True)
    cmp.add_argument("--t-max", type=float, help="only compare times up to this value")
    cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qcnhc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"qcnhc: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
