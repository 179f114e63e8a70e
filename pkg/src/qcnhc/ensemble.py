"""Trajectory ensembles and the sigma_z(t) estimator."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .model import AdiabaticData, SpinBoson, SpinBosonParams
from .nonadiabatic import output_steps, propagate_batch, sigma_z_elements
from .propagators import SCHEMES, IntegratorConfig, make_stepper, suzuki_yoshida_weights
from .rng import TrajectoryStreams
from .sampling import draw_initial

MODES = ("adiabatic", "nonadiabatic")
MAX_ABORTED_FRACTION = 0.01


@dataclass(frozen=True)
class EnsembleConfig:
    """Every knob of an ensemble run, flat so it maps one-to-one onto config keys.

    Thermostat masses default to ``n_bath kT tau^2`` and ``kT tau^2`` with
    ``tau = 1 / omega_max`` unless ``tau``, ``m_eta1`` or ``m_eta2`` are set.
    """

    n_traj: int = 10_000
    t_max: float = 10.0
    dt: float = 0.01
    n_output: int = 201
    scheme: str = "nhc"
    mode: str = "adiabatic"
    max_hops: int = 6
    master_seed: int = 0
    populations_only: bool = False
    block_size: int = 1000
    omega: float = 1.0 / 3.0
    kondo: float = 0.007
    beta: float = 0.3
    omega_max: float = 3.0
    gamma_s: float = 0.0
    n_bath: int = 1
    tau: float | None = None
    m_eta1: float | None = None
    m_eta2: float | None = None
    zeta: float = 1.0
    sy_order: int = 3
    n_respa: int = 1

    def __post_init__(self):
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise ValueError(f"n_traj must be an integer >= 1, got {self.n_traj}")
        if not self.t_max >= 0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.max_hops) != self.max_hops or self.max_hops < 0:
            raise ValueError(f"max_hops must be an integer >= 0, got {self.max_hops}")
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ValueError(f"block_size must be an integer >= 1, got {self.block_size}")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        # delegate the remaining range checks
        self.params()
        self.integrator()
        output_steps(self.t_max, self.dt, self.n_output)

    @property
    def adiabatic(self) -> bool:
        return self.mode == "adiabatic"

    @property
    def monitor_scheme(self) -> str | None:
        return self.scheme if self.scheme in ("nve", "nhc") else None

    def params(self) -> SpinBosonParams:
        kT = 1.0 / self.beta
        tau = self.tau if self.tau is not None else 1.0 / self.omega_max
        m1 = self.m_eta1 if self.m_eta1 is not None else self.n_bath * kT * tau**2
        m2 = self.m_eta2 if self.m_eta2 is not None else kT * tau**2
        return SpinBosonParams(omega=self.omega, kondo=self.kondo, beta=self.beta,
                               omega_max=self.omega_max, gamma_s=self.gamma_s,
                               n_bath=self.n_bath, m_eta1=m1, m_eta2=m2)

    def model(self) -> SpinBoson:
        return SpinBoson.ohmic(self.params())

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(dt=self.dt, scheme=self.scheme, zeta=self.zeta,
                                sy_weights=suzuki_yoshida_weights(self.sy_order),
                                n_respa=self.n_respa)

    def stepper(self, model: SpinBoson | None = None):
        return make_stepper(model or self.model(), self.integrator())

    def output_steps(self) -> np.ndarray:
        return output_steps(self.t_max, self.dt, self.n_output)

    def times(self) -> np.ndarray:
        return self.output_steps() * self.dt

    def replace(self, **changes) -> "EnsembleConfig":
        values = asdict(self)
        values.update(changes)
        return EnsembleConfig(**values)


@dataclass
class ObservableSeries:
    """Ensemble estimate of <sigma_z(t)> with diagnostics."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_effective: np.ndarray
    imag_mean: np.ndarray = field(default=None)
    imag_stderr: np.ndarray = field(default=None)
    capped_fraction: float = 0.0
    aborted_fraction: float = 0.0
    drift_mean: float | None = None
    drift_max: float | None = None
    max_hop_error: float = 0.0
    hops_per_trajectory: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        self.n_effective = np.asarray(self.n_effective, dtype=np.int64)
        if not (len(self.times) == len(self.mean) == len(self.stderr) == len(self.n_effective)):
            raise ValueError("series arrays must have equal lengths")
        if self.imag_mean is None:
            self.imag_mean = np.zeros_like(self.mean)
        if self.imag_stderr is None:
            self.imag_stderr = np.zeros_like(self.stderr)

    def __len__(self):
        return len(self.times)


class AbortedRunError(RuntimeError):
    """Raised when too many trajectories became non-finite; carries the partial series."""

    def __init__(self, message: str, series: ObservableSeries):
        super().__init__(message)
        self.series = series


def sigma_z_matrix(adata: AdiabaticData) -> np.ndarray:
    """<alpha|sigma_z|alpha'> in the adiabatic basis, shape (..., 2, 2)."""
    idx = np.array([1, 2])
    a, ap = np.meshgrid(idx, idx, indexing="ij")
    gam = np.asarray(adata.gamma_eff)[..., None, None]
    gap = np.asarray(adata.gap_g)[..., None, None]
    shifted = AdiabaticData(gamma_eff=gam, gap_g=gap, omega=adata.omega,
                            couplings=adata.couplings)
    return sigma_z_elements(a, ap, shifted).astype(complex)


@dataclass
class _BlockSums:
    sum_re: np.ndarray
    sum_re2: np.ndarray
    sum_im: np.ndarray
    sum_im2: np.ndarray
    n_eff: np.ndarray
    n_traj: int
    n_capped: int
    n_aborted: int
    n_hops: int
    drift_sum: float
    drift_max: float
    max_hop_error: float


def _drift(energy: np.ndarray, times: np.ndarray, kT: float):
    """Per-trajectory secular drift of the conserved quantity, relative to max(|H0|, kT).

    The oscillating O(dt^2) error of the integrator is averaged out by
    comparing means over the first and last tenth of the time window.
    """
    t_max = times[-1]
    if t_max <= 0 or energy.shape[1] < 2:
        return np.zeros(energy.shape[0])
    width = t_max / 10.0
    first = times <= width + 1e-12
    last = times >= t_max - width - 1e-12
    h0 = energy[:, 0]
    drift = np.abs(np.nanmean(energy[:, last], axis=1) - np.nanmean(energy[:, first], axis=1))
    return drift / np.maximum(np.abs(h0), kT)


def _run_block(cfg: EnsembleConfig, start: int, stop: int) -> _BlockSums:
    model = cfg.model()
    stepper = cfg.stepper(model)
    rng = TrajectoryStreams(cfg.master_seed, np.arange(start, stop))
    init = draw_initial(model.bath, model.params, rng, size=stop - start,
                        populations_only=cfg.populations_only)
    res = propagate_batch(init, stepper, rng, cfg.output_steps(), max_hops=cfg.max_hops,
                          adiabatic=cfg.adiabatic, monitor=cfg.monitor_scheme)
    re = res.contributions.real
    im = res.contributions.imag
    if res.energy is not None:
        with np.errstate(invalid="ignore"):
            drift = _drift(res.energy[~res.aborted], cfg.times(), model.params.kT)
        drift_sum = float(np.sum(drift))
        drift_max = float(np.max(drift)) if drift.size else 0.0
    else:
        drift_sum = drift_max = math.nan
    return _BlockSums(
        sum_re=re.sum(axis=0), sum_re2=(re * re).sum(axis=0),
        sum_im=im.sum(axis=0), sum_im2=(im * im).sum(axis=0),
        n_eff=res.valid.sum(axis=0), n_traj=stop - start,
        n_capped=int(np.count_nonzero(res.capped)),
        n_aborted=int(np.count_nonzero(res.aborted)),
        n_hops=int(res.n_hops), drift_sum=drift_sum, drift_max=drift_max,
        max_hop_error=res.max_hop_error,
    )


def _run_block_args(args):
    return _run_block(*args)


def default_workers() -> int:
    value = os.environ.get("QCNHC_WORKERS")
    return max(1, int(value)) if value else 1


def _mean_stderr(s1, s2, n):
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(n > 0, s1 / np.maximum(n, 1), np.nan)
        var = (s2 - n * mean**2) / np.maximum(n - 1, 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / np.maximum(n, 1))
    return mean, np.where(n > 1, stderr, 0.0)


def run_ensemble(cfg: EnsembleConfig, workers: int | None = None) -> ObservableSeries:
    """Monte Carlo estimate of <sigma_z(t)> over ``cfg.n_traj`` trajectories.

    Trajectories are split into fixed blocks of ``cfg.block_size``; blocks
    may run on several processes but are always reduced in index order, so
    the result does not depend on ``workers``.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = [(s, min(s + cfg.block_size, cfg.n_traj))
              for s in range(0, cfg.n_traj, cfg.block_size)]
    jobs = [(cfg, s, e) for s, e in bounds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_block_args, jobs))
    else:
        blocks = [_run_block(*job) for job in jobs]

    n_out = len(cfg.output_steps())
    tot = {k: np.zeros(n_out) for k in ("re", "re2", "im", "im2")}
    n_eff = np.zeros(n_out, dtype=np.int64)
    n_capped = n_aborted = n_hops = 0
    drift_sum, drift_max, hop_err = 0.0, 0.0, 0.0
    for b in blocks:
        tot["re"] = tot["re"] + b.sum_re
        tot["re2"] = tot["re2"] + b.sum_re2
        tot["im"] = tot["im"] + b.sum_im
        tot["im2"] = tot["im2"] + b.sum_im2
        n_eff = n_eff + b.n_eff
        n_capped += b.n_capped
        n_aborted += b.n_aborted
        n_hops += b.n_hops
        drift_sum += b.drift_sum
        drift_max = max(drift_max, b.drift_max)
        hop_err = max(hop_err, b.max_hop_error)

    mean, stderr = _mean_stderr(tot["re"], tot["re2"], n_eff)
    imag_mean, imag_stderr = _mean_stderr(tot["im"], tot["im2"], n_eff)
    n_alive = cfg.n_traj - n_aborted
    monitored = cfg.monitor_scheme is not None
    series = ObservableSeries(
        times=cfg.times(), mean=mean, stderr=stderr, n_effective=n_eff,
        imag_mean=imag_mean, imag_stderr=imag_stderr,
        capped_fraction=0.0 if cfg.adiabatic else n_capped / cfg.n_traj,
        aborted_fraction=n_aborted / cfg.n_traj,
        drift_mean=drift_sum / n_alive if monitored and n_alive else None,
        drift_max=drift_max if monitored else None,
        max_hop_error=hop_err,
        hops_per_trajectory=n_hops / cfg.n_traj,
    )
    if series.aborted_fraction > MAX_ABORTED_FRACTION:
        raise AbortedRunError(
            f"{n_aborted} of {cfg.n_traj} trajectories aborted "
            f"({series.aborted_fraction:.2%} > {MAX_ABORTED_FRACTION:.0%})", series)
    return series


class Comparison(NamedTuple):
    sup: float
    times: np.ndarray
    diff: np.ndarray
    z: np.ndarray


def compare_series(a: ObservableSeries, b: ObservableSeries, t_max: float | None = None,
                   decimals: int = 9) -> Comparison:
    """Sup-norm of ``a.mean - b.mean`` over the common output times (optionally t <= t_max)."""
    ta = np.round(a.times, decimals)
    tb = np.round(b.times, decimals)
    common, ia, ib = np.intersect1d(ta, tb, return_indices=True)
    if t_max is not None:
        keep = common <= t_max + 10.0 ** (-decimals)
        common, ia, ib = common[keep], ia[keep], ib[keep]
    if len(common) == 0:
        raise ValueError("series share no output times")
    diff = a.mean[ia] - b.mean[ib]
    se = np.hypot(a.stderr[ia], b.stderr[ib])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
    return Comparison(float(np.max(np.abs(diff))), common, diff, z)
