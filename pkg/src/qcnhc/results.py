"""CSV output of observable series and the run manifest written beside it."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import EnsembleConfig, ObservableSeries

HEADER = ("t", "mean", "stderr", "n_effective")


@dataclass
class RunManifest:
    """Everything needed to reproduce a result, plus its run diagnostics."""

    config: dict
    version: str = __version__
    master_seed: int = 0
    wall_clock: float = 0.0
    aborted_fraction: float = 0.0
    capped_fraction: float = 0.0
    drift_max: float | None = None
    drift_mean: float | None = None
    max_hop_error: float = 0.0
    hops_per_trajectory: float = 0.0
    extra: dict = field(default_factory=dict)

    @classmethod
    def build(cls, cfg: EnsembleConfig, series: ObservableSeries | None = None,
              wall_clock: float = 0.0) -> "RunManifest":
        out = cls(config=resolved_config(cfg), master_seed=cfg.master_seed,
                  wall_clock=wall_clock)
        if series is not None:
            out.aborted_fraction = series.aborted_fraction
            out.capped_fraction = series.capped_fraction
            out.drift_max = series.drift_max
            out.drift_mean = series.drift_mean
            out.max_hop_error = series.max_hop_error
            out.hops_per_trajectory = series.hops_per_trajectory
        return out

    def ensemble_config(self) -> EnsembleConfig:
        return EnsembleConfig(**self.config)

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def resolved_config(cfg: EnsembleConfig) -> dict:
    """Config fields with the derived thermostat defaults filled in."""
    values = asdict(cfg)
    params = cfg.params()
    if values["tau"] is None:
        values["tau"] = 1.0 / cfg.omega_max
    values["m_eta1"] = params.m_eta1
    values["m_eta2"] = params.m_eta2
    return values


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.generic):
        return value.item()
    return value


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def write_series(series: ObservableSeries, manifest: RunManifest | None, path) -> Path:
    """Write the series as CSV and, if given, the manifest as a sibling JSON file."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HEADER)
            for t, m, s, n in zip(series.times, series.mean, series.stderr,
                                  series.n_effective):
                writer.writerow((repr(float(t)), repr(float(m)), repr(float(s)), int(n)))
        if manifest is not None:
            manifest_path(path).write_text(manifest.to_json())
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_series(path) -> ObservableSeries:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != HEADER:
        raise ValueError(f"{path}: expected header {','.join(HEADER)}")
    body = rows[1:]
    try:
        cols = list(zip(*body)) if body else [(), (), (), ()]
        return ObservableSeries(
            times=np.array([float(v) for v in cols[0]]),
            mean=np.array([float(v) for v in cols[1]]),
            stderr=np.array([float(v) for v in cols[2]]),
            n_effective=np.array([int(v) for v in cols[3]], dtype=np.int64),
        )
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed row: {exc}") from None


def read_manifest(path) -> RunManifest:
    return RunManifest.from_json(Path(path).read_text())
