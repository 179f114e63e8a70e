"""Surface-hopping realization of the quantum-transition operator.

Each trajectory carries one surface pair (alpha, alpha'). After every
classical step the left and then the right index may flip. A flip from
``a`` to ``b`` is proposed with probability ``pi = |s| / (1 + |s|)`` where
``s = dt (P/M) . d_ab``; an accepted flip multiplies the weight by
``s / pi`` and a declined one by ``1 / (1 - pi)``, which keeps the
Monte Carlo estimate equal to the branch sum of the short-time expansion.
Flips shift the momenta along the coupling vector so that the mean-surface
extended energy is unchanged. A flip that would need more kinetic energy
along the coupling direction than is available is frustrated and is never
proposed.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from .model import AdiabaticData, ExtendedPhasePoint, surface_sign

LEFT, RIGHT = "left", "right"
CHANNELS = (LEFT, RIGHT)


@dataclass
class TrajectoryState:
    """Batch of trajectories; every field has the batch as its leading axis."""

    x: ExtendedPhasePoint
    alpha: np.ndarray
    alpha_prime: np.ndarray
    weight: np.ndarray
    phase: np.ndarray
    hops: np.ndarray
    alive: np.ndarray

    @classmethod
    def from_initial(cls, init) -> "TrajectoryState":
        alpha = np.atleast_1d(np.asarray(init.alpha, dtype=np.int64))
        n = len(alpha)
        x = init.point
        if x.R.ndim == 1:
            x = ExtendedPhasePoint(x.R[None], x.P[None], np.atleast_1d(x.eta1),
                                   np.atleast_1d(x.eta2), np.atleast_1d(x.p_eta1),
                                   np.atleast_1d(x.p_eta2))
        return cls(
            x=x.copy(),
            alpha=alpha.copy(),
            alpha_prime=np.atleast_1d(np.asarray(init.alpha_prime, dtype=np.int64)).copy(),
            weight=np.atleast_1d(np.asarray(init.weight, dtype=complex)).copy(),
            phase=np.zeros(n),
            hops=np.zeros(n, dtype=np.int64),
            alive=np.ones(n, dtype=bool),
        )

    def __len__(self):
        return len(self.alpha)

    def copy(self) -> "TrajectoryState":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw = {k: (v.copy() if hasattr(v, "copy") else v) for k, v in kw.items()}
        return TrajectoryState(**kw)

    def index_of(self, channel: str) -> np.ndarray:
        if channel == LEFT:
            return self.alpha
        if channel == RIGHT:
            return self.alpha_prime
        raise ValueError(f"unknown channel {channel!r}")


class HopProbabilities(NamedTuple):
    left: np.ndarray
    right: np.ndarray
    no_hop: np.ndarray


def coupling_rate(state: TrajectoryState, adata: AdiabaticData, channel: str) -> np.ndarray:
    """Signed (P/M) . d_{a b} for flipping the channel's index from a to b.

    d_21 = -d_12 and the eigenvectors are real, so the right-index factor
    d*_{a' b'} reduces to the same expression.
    """
    masses = _masses(adata, state)
    v_dot_c = np.sum(state.x.P * adata.couplings / masses, axis=-1)
    frm = state.index_of(channel)
    return np.where(frm == 1, 1.0, -1.0) * v_dot_c * adata.d12_scale


def hop_probability(state: TrajectoryState, adata: AdiabaticData, dt: float) -> HopProbabilities:
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    pis = []
    for channel in CHANNELS:
        a = np.abs(dt * coupling_rate(state, adata, channel))
        pis.append(a / (1.0 + a))
    return HopProbabilities(pis[0], pis[1], (1.0 - pis[0]) * (1.0 - pis[1]))


def _masses(adata, state):
    masses = getattr(adata, "masses", None)
    return np.ones(state.x.P.shape[-1]) if masses is None else masses


def _jump_geometry(state: TrajectoryState, adata: AdiabaticData, channel: str):
    """Unit coupling direction, effective mass, parallel momentum and energy release."""
    masses = _masses(adata, state)
    c = adata.couplings
    norm = np.sqrt(np.sum(c * c))
    d_hat = c / norm if norm > 0 else np.zeros_like(c)
    inv_mu = np.sum(d_hat * d_hat / masses)
    mu = 1.0 / inv_mu if inv_mu > 0 else np.inf
    p_par = mu * np.sum(state.x.P * d_hat / masses, axis=-1) if inv_mu > 0 else np.zeros(len(state))
    # old-minus-new mean surface energy: flipping index a changes E_a = s_a G to -s_a G
    delta_e = surface_sign(state.index_of(channel)) * adata.gap_g
    return d_hat, mu, p_par, delta_e


class _JumpConstants:
    """Bath-only quantities of the momentum jump, fixed for a whole run."""

    def __init__(self, couplings, masses):
        c = np.asarray(couplings, dtype=float)
        self.c_over_m = c / masses
        norm = np.sqrt(np.sum(c * c))
        self.d_hat = c / norm if norm > 0 else np.zeros_like(c)
        inv_mu = np.sum(self.d_hat**2 / masses)
        # with no coupling every rate vanishes, so mu only has to stay finite
        self.mu = 1.0 / inv_mu if inv_mu > 0 else 0.0
        self.p_par_per_vc = self.mu / norm if norm > 0 else 0.0
        self.dhat_dot_c_over_m = float(self.d_hat @ self.c_over_m)


def hop_allowed(state: TrajectoryState, adata: AdiabaticData, channel: str) -> np.ndarray:
    """False where the momentum jump for this channel would be frustrated."""
    _, mu, p_par, delta_e = _jump_geometry(state, adata, channel)
    if not np.isfinite(mu):
        return np.zeros(len(state), dtype=bool)
    return p_par**2 + 2.0 * mu * delta_e >= 0.0


def apply_hop(state: TrajectoryState, channel: str, adata: AdiabaticData, mask=None):
    """Flip one index on the rows in ``mask`` with an energy-conserving momentum jump.

    Returns ``(new_state, frustrated)``. Frustrated rows are left unchanged.
    The weight is not touched; reweighting belongs to the sampling step.
    """
    n = len(state)
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    d_hat, mu, p_par, delta_e = _jump_geometry(state, adata, channel)
    if np.isfinite(mu):
        radicand = p_par**2 + 2.0 * mu * delta_e
    else:
        radicand = np.full(n, -1.0)
    frustrated = mask & (radicand < 0)
    go = mask & ~frustrated
    new = state.copy()
    if np.any(go):
        sgn = np.where(p_par[go] >= 0, 1.0, -1.0)
        lam = sgn * np.sqrt(radicand[go]) - p_par[go]
        new.x.P[go] = state.x.P[go] + lam[:, None] * d_hat
        idx = new.index_of(channel)
        idx[go] = 3 - idx[go]
        new.hops[go] += 1
    return new, frustrated


def sigma_z_elements(alpha, alpha_prime, adata: AdiabaticData):
    """<alpha|sigma_z|alpha'> for arrays of pairs (real in this phase convention)."""
    cos_t = adata.gamma_eff / adata.gap_g
    sin_t = adata.omega / adata.gap_g
    diag = np.where(alpha == 1, cos_t, -cos_t)
    return np.where(alpha == alpha_prime, diag, -sin_t)


@dataclass
class BatchResult:
    """Per-trajectory output of :func:`propagate_batch`."""

    contributions: np.ndarray  # (n_traj, n_out) complex
    valid: np.ndarray  # (n_traj, n_out) bool, False once a trajectory aborted
    hops: np.ndarray
    capped: np.ndarray
    aborted: np.ndarray
    energy: np.ndarray | None  # (n_traj, n_out) conserved quantity, when monitored
    max_hop_error: float
    n_hops: int
    n_frustrated: int


def output_steps(t_max: float, dt: float, n_output: int) -> np.ndarray:
    """Step indices of ``n_output`` nearly even output times spanning [0, t_max]."""
    n_steps = int(round(t_max / dt))
    if n_output < 1:
        raise ValueError("n_output must be >= 1")
    if n_output == 1 or n_steps == 0:
        return np.zeros(1, dtype=np.int64) if n_steps == 0 else np.array([n_steps])
    if n_steps < n_output - 1:
        raise ValueError(f"{n_output} output points need at least {n_output - 1} steps")
    return np.round(np.linspace(0, n_steps, n_output)).astype(np.int64)


def propagate_batch(init, stepper, rng, steps: np.ndarray, *, max_hops: int = 6,
                    adiabatic: bool = False, monitor: str | None = None) -> BatchResult:
    """Propagate a batch of sampled trajectories and record sigma_z contributions.

    ``steps`` are the (sorted) step indices at which the observable is
    recorded. ``rng`` supplies per-row uniforms for the hop decisions and
    Gaussian noise for Langevin steppers; every row draws the same number of
    values each step regardless of what happens to it. ``monitor`` names a
    scheme ('nve' or 'nhc') whose conserved quantity is recorded at output
    times.
    """
    from .propagators import conserved_quantity

    state = TrajectoryState.from_initial(init)
    model = stepper.model
    dt = stepper.config.dt
    n = len(state)
    steps = np.asarray(steps, dtype=np.int64)
    n_out = len(steps)
    contrib = np.zeros((n, n_out), dtype=complex)
    valid = np.zeros((n, n_out), dtype=bool)
    energy = np.zeros((n, n_out)) if monitor else None
    max_hop_error = 0.0
    n_hops = 0
    n_frustrated = 0  # channels excluded because the jump is frustrated

    with np.errstate(over="ignore", invalid="ignore"):
        force, adata = stepper.prepare(state.x, state.alpha, state.alpha_prime)
    geom = _JumpConstants(adata.couplings, _masses(adata, state))
    out = 0

    def record(k_out, adata):
        ok = state.alive & state.x.is_finite() & np.isfinite(state.weight)
        _kill(state, ~ok)
        sz = sigma_z_elements(state.alpha, state.alpha_prime, adata)
        c = state.weight * np.exp(1j * state.phase) * sz
        contrib[:, k_out] = np.where(state.alive, c, 0.0)
        valid[:, k_out] = state.alive
        if energy is not None:
            energy[:, k_out] = np.where(
                state.alive,
                conserved_quantity(state.x, (state.alpha, state.alpha_prime), model, monitor),
                np.nan)

    with np.errstate(over="ignore", invalid="ignore"):
        while out < n_out and steps[out] == 0:
            record(out, adata)
            out += 1
        n_steps = int(steps[-1]) if n_out else 0
        for k in range(1, n_steps + 1):
            gam_old = adata.gamma_eff
            state.x, force, adata = stepper.advance(state.x, state.alpha, state.alpha_prime,
                                                    force, rng)
            gap_mid = np.sqrt((adata.omega) ** 2 + (0.5 * (gam_old + adata.gamma_eff)) ** 2)
            state.phase = state.phase + dt * (
                surface_sign(state.alpha) - surface_sign(state.alpha_prime)) * gap_mid

            if not adiabatic:
                u = rng.random((n, len(CHANNELS)))
                hopped = np.zeros(n, dtype=bool)
                # P/M . c, shared by both channels and updated after each jump
                v_c = state.x.P @ geom.c_over_m
                for j, channel in enumerate(CHANNELS):
                    idx = state.index_of(channel)
                    from_sign = np.where(idx == 1, 1.0, -1.0)
                    s = dt * from_sign * v_c * adata.d12_scale
                    a = np.abs(s)
                    p_par = geom.p_par_per_vc * v_c
                    # energy released by the flip: E_a - E_b = -from_sign G
                    radicand = p_par**2 - 2.0 * geom.mu * from_sign * adata.gap_g
                    can = state.alive & (state.hops < max_hops) & (a > 0)
                    blocked = can & (radicand < 0)
                    n_frustrated += int(np.count_nonzero(blocked))
                    can &= ~blocked
                    pi = np.where(can, a / (1.0 + a), 0.0)
                    hop = u[:, j] < pi
                    # accepted: s / pi = sign(s) (1 + a); declined: 1 / (1 - pi) = 1 + a
                    factor = np.where(hop, np.sign(s) * (1.0 + a), np.where(can, 1.0 + a, 1.0))
                    state.weight = state.weight * factor
                    if np.any(hop):
                        rows = np.flatnonzero(hop)
                        before = _energy_rows(state, rows, model, monitor)
                        pp = p_par[rows]
                        lam = np.where(pp >= 0, 1.0, -1.0) * np.sqrt(radicand[rows]) - pp
                        state.x.P[rows] += lam[:, None] * geom.d_hat
                        v_c[rows] += lam * geom.dhat_dot_c_over_m
                        idx[rows] = 3 - idx[rows]
                        state.hops[rows] += 1
                        n_hops += len(rows)
                        after = _energy_rows(state, rows, model, monitor)
                        max_hop_error = max(max_hop_error, float(np.nanmax(np.abs(after - before))))
                        hopped[rows] = True
                if np.any(hopped):
                    f_new, _ = model.mean_force(state.x.R[hopped], state.alpha[hopped],
                                                state.alpha_prime[hopped])
                    force = force.copy()
                    force[hopped] = f_new

            while out < n_out and steps[out] == k:
                record(out, adata)
                out += 1

    return BatchResult(
        contributions=contrib,
        valid=valid,
        hops=state.hops,
        capped=state.hops >= max_hops if not adiabatic else np.zeros(n, dtype=bool),
        aborted=~state.alive,
        energy=energy,
        max_hop_error=max_hop_error,
        n_hops=n_hops,
        n_frustrated=n_frustrated,
    )


def _energy_rows(state, rows, model, scheme):
    from .propagators import conserved_quantity

    sub = state.x.take(rows)
    pair = (state.alpha[rows], state.alpha_prime[rows])
    return np.asarray(conserved_quantity(sub, pair, model, scheme or "nhc"))


def _kill(state: TrajectoryState, rows):
    if not np.any(rows):
        return
    state.alive[rows] = False
    state.weight[rows] = 0.0
    state.x.R[rows] = 0.0
    state.x.P[rows] = 0.0
    for name in ("eta1", "eta2", "p_eta1", "p_eta2"):
        getattr(state.x, name)[rows] = 0.0


def propagate_trajectory(init, cfg, rng) -> BatchResult:
    """Propagate one sampled trajectory (or a batch) using an ensemble config.

    ``cfg`` provides ``stepper()``, ``output_steps()``, ``max_hops`` and
    ``adiabatic`` as :class:`qcnhc.ensemble.EnsembleConfig` does.
    """
    return propagate_batch(init, cfg.stepper(), rng, cfg.output_steps(),
                           max_hops=cfg.max_hops, adiabatic=cfg.adiabatic,
                           monitor=cfg.monitor_scheme)
