"""Classical propagation of the extended phase point on a fixed surface pair.

Three schemes are available: constant energy (velocity Verlet), the
two-variable Nosé-Hoover chain (thermostat half-steps around a Verlet core,
Suzuki-Yoshida composed), and Langevin dynamics (OBABO splitting with an
exact Ornstein-Uhlenbeck momentum update).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ExtendedPhasePoint, SpinBoson

SCHEMES = ("nve", "nhc", "bd")


def suzuki_yoshida_weights(order: int) -> tuple[float, ...]:
    """Composition weights for a symmetric splitting of the given order."""
    if order == 1:
        return (1.0,)
    if order == 3:
        w = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
        return (w, 1.0 - 2.0 * w, w)
    if order == 5:
        w = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
        return (w, w, 1.0 - 4.0 * w, w, w)
    if order == 7:
        return (0.784513610477560, 0.235573213359357, -1.17767998417887,
                1.31518632068391, -1.17767998417887, 0.235573213359357,
                0.784513610477560)
    raise ValueError(f"unsupported Suzuki-Yoshida order {order}; use 1, 3, 5 or 7")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    scheme: str = "nhc"
    zeta: float = 1.0
    sy_weights: tuple[float, ...] = field(default_factory=lambda: suzuki_yoshida_weights(3))
    n_respa: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.zeta >= 0:
            raise ValueError(f"zeta must be >= 0, got {self.zeta}")
        if abs(sum(self.sy_weights) - 1.0) > 1e-12:
            raise ValueError("sy_weights must sum to 1")
        if int(self.n_respa) != self.n_respa or self.n_respa < 1:
            raise ValueError(f"n_respa must be an integer >= 1, got {self.n_respa}")


def _with(x: ExtendedPhasePoint, **changes) -> ExtendedPhasePoint:
    values = dict(R=x.R, P=x.P, eta1=x.eta1, eta2=x.eta2, p_eta1=x.p_eta1, p_eta2=x.p_eta2)
    values.update(changes)
    return ExtendedPhasePoint(**values)


def velocity_verlet(x: ExtendedPhasePoint, pair, model: SpinBoson, dt: float, force=None):
    """One kick-drift-kick step under the mean-surface force.

    Returns ``(x_new, force_new, adata_new)``; pass ``force`` from the previous
    step to skip recomputing it.
    """
    alpha, alpha_prime = pair
    if force is None:
        force, _ = model.mean_force(x.R, alpha, alpha_prime)
    p_half = x.P + (0.5 * dt) * force
    r_new = x.R + p_half * (dt / model.bath.masses)
    force_new, adata = model.mean_force(r_new, alpha, alpha_prime)
    p_new = p_half + (0.5 * dt) * force_new
    return _with(x, R=r_new, P=p_new), force_new, adata


def nhc_thermostat(x: ExtendedPhasePoint, model: SpinBoson, tau: float,
                   weights=(1.0,), n_respa: int = 1) -> ExtendedPhasePoint:
    """Propagate the chain sub-flow (bath momenta scaling and Nosé variables) for ``tau``."""
    params = model.params
    kT, n_dof = params.kT, params.n_bath
    q1, q2 = params.m_eta1, params.m_eta2
    p1, p2 = x.p_eta1, x.p_eta2
    e1, e2 = x.eta1, x.eta2
    two_ke = np.sum(x.P**2 / model.bath.masses, axis=-1)
    scale = np.ones_like(two_ke)
    for _ in range(n_respa):
        for w in weights:
            d = w * tau / n_respa
            p2 = p2 + 0.5 * d * (p1**2 / q1 - kT)
            s = np.exp(-0.25 * d * p2 / q2)
            p1 = (p1 * s + 0.5 * d * (two_ke - n_dof * kT)) * s
            e1 = e1 + d * p1 / q1
            e2 = e2 + d * p2 / q2
            f = np.exp(-d * p1 / q1)
            scale = scale * f
            two_ke = two_ke * f * f
            p1 = (p1 * s + 0.5 * d * (two_ke - n_dof * kT)) * s
            p2 = p2 + 0.5 * d * (p1**2 / q1 - kT)
    return _with(x, P=x.P * scale[..., None], eta1=e1, eta2=e2, p_eta1=p1, p_eta2=p2)


def ou_momenta(P, model: SpinBoson, zeta: float, tau: float, rng):
    """Exact Ornstein-Uhlenbeck update of the bath momenta over ``tau``."""
    m = model.bath.masses
    c1 = np.exp(-zeta * tau / m)
    c2 = np.sqrt(m * model.params.kT * (1.0 - c1 * c1))
    return P * c1 + c2 * rng.standard_normal(np.shape(P))


def step_nve(x: ExtendedPhasePoint, pair, model: SpinBoson, dt: float) -> ExtendedPhasePoint:
    return velocity_verlet(x, pair, model, dt)[0]


def step_nhc(x: ExtendedPhasePoint, pair, model: SpinBoson, dt: float,
             config: IntegratorConfig | None = None) -> ExtendedPhasePoint:
    """Thermostat half-step, Verlet step, thermostat half-step."""
    config = config or IntegratorConfig(dt=dt, scheme="nhc")
    x = nhc_thermostat(x, model, 0.5 * dt, config.sy_weights, config.n_respa)
    x = velocity_verlet(x, pair, model, dt)[0]
    return nhc_thermostat(x, model, 0.5 * dt, config.sy_weights, config.n_respa)


def step_langevin(x: ExtendedPhasePoint, pair, model: SpinBoson, dt: float, zeta: float,
                  rng) -> ExtendedPhasePoint:
    """OBABO step; with ``zeta == 0`` this is exactly :func:`step_nve`."""
    if not zeta >= 0:
        raise ValueError(f"zeta must be >= 0, got {zeta}")
    x = _with(x, P=ou_momenta(x.P, model, zeta, 0.5 * dt, rng))
    x = velocity_verlet(x, pair, model, dt)[0]
    return _with(x, P=ou_momenta(x.P, model, zeta, 0.5 * dt, rng))


def conserved_quantity(x: ExtendedPhasePoint, pair, model: SpinBoson, scheme: str):
    """Mean-surface energy (nve) or extended energy (nhc) used for drift monitoring."""
    if scheme == "nve":
        return model.energy(x, pair, thermostat=False)
    if scheme == "nhc":
        return model.energy(x, pair, thermostat=True)
    if scheme == "bd":
        raise ValueError("Langevin dynamics has no conserved quantity to monitor")
    raise ValueError(f"unknown scheme {scheme!r}")


def nhc_matrix(x: ExtendedPhasePoint) -> np.ndarray:
    """Antisymmetric structure matrix of the chain flow for a single phase point.

    Ordering (R, eta1, eta2, P, p_eta1, p_eta2); the momentum-thermostat
    coupling is applied to every bath oscillator.
    """
    n = x.R.shape[-1]
    size = 2 * n + 4
    b = np.zeros((size, size))
    r, e1, e2 = slice(0, n), n, n + 1
    p, q1, q2 = slice(n + 2, 2 * n + 2), 2 * n + 2, 2 * n + 3
    b[r, p] = np.eye(n)
    b[p, r] = -np.eye(n)
    b[e1, q1] = 1.0
    b[q1, e1] = -1.0
    b[e2, q2] = 1.0
    b[q2, e2] = -1.0
    b[p, q1] = -x.P
    b[q1, p] = x.P
    b[q1, q2] = -x.p_eta1
    b[q2, q1] = x.p_eta1
    return b


def extended_gradient(x: ExtendedPhasePoint, pair, model: SpinBoson) -> np.ndarray:
    """Gradient of the mean-surface extended energy in the ordering of :func:`nhc_matrix`."""
    alpha, alpha_prime = pair
    params, bath = model.params, model.bath
    force, _ = model.mean_force(x.R, alpha, alpha_prime)
    return np.concatenate([
        -force, [params.n_bath * params.kT, params.kT],
        x.P / bath.masses, [x.p_eta1 / params.m_eta1, x.p_eta2 / params.m_eta2],
    ])


def extended_flow(x: ExtendedPhasePoint, pair, model: SpinBoson) -> np.ndarray:
    """dX/dt = B(X) grad H for a single phase point."""
    return nhc_matrix(x) @ extended_gradient(x, pair, model)


class Stepper:
    """Batched classical propagation used by the trajectory engine.

    ``advance`` takes and returns the cached mean force so each step costs
    one force evaluation.
    """

    def __init__(self, model: SpinBoson, config: IntegratorConfig):
        self.model = model
        self.config = config

    def prepare(self, x, alpha, alpha_prime):
        return self.model.mean_force(x.R, alpha, alpha_prime)

    def advance(self, x, alpha, alpha_prime, force, rng):
        raise NotImplementedError


class NVEStepper(Stepper):
    def advance(self, x, alpha, alpha_prime, force, rng):
        return velocity_verlet(x, (alpha, alpha_prime), self.model, self.config.dt, force)


class NHCStepper(Stepper):
    def advance(self, x, alpha, alpha_prime, force, rng):
        cfg = self.config
        half = 0.5 * cfg.dt
        x = nhc_thermostat(x, self.model, half, cfg.sy_weights, cfg.n_respa)
        x, force, adata = velocity_verlet(x, (alpha, alpha_prime), self.model, cfg.dt, force)
        x = nhc_thermostat(x, self.model, half, cfg.sy_weights, cfg.n_respa)
        return x, force, adata


class LangevinStepper(Stepper):
    def advance(self, x, alpha, alpha_prime, force, rng):
        cfg = self.config
        half = 0.5 * cfg.dt
        x = _with(x, P=ou_momenta(x.P, self.model, cfg.zeta, half, rng))
        x, force, adata = velocity_verlet(x, (alpha, alpha_prime), self.model, cfg.dt, force)
        x = _with(x, P=ou_momenta(x.P, self.model, cfg.zeta, half, rng))
        return x, force, adata


def make_stepper(model: SpinBoson, config: IntegratorConfig) -> Stepper:
    return {"nve": NVEStepper, "nhc": NHCStepper, "bd": LangevinStepper}[config.scheme](
        model, config)


def sample_momentum_trace(model: SpinBoson, config: IntegratorConfig, x0: ExtendedPhasePoint,
                          n_steps: int, rng=None, pair=(1, 1), every: int = 1) -> np.ndarray:
    """Run a decoupled or coupled batch for ``n_steps`` and return bath momenta
    recorded every ``every`` steps, shape ``(n_records, *x0.P.shape)``."""
    stepper = make_stepper(model, config)
    shape = x0.R.shape[:-1]
    alpha = np.full(shape, pair[0])
    alpha_prime = np.full(shape, pair[1])
    force, _ = stepper.prepare(x0, alpha, alpha_prime)
    x = x0
    out = []
    for k in range(1, n_steps + 1):
        x, force, _ = stepper.advance(x, alpha, alpha_prime, force, rng)
        if k % every == 0:
            out.append(x.P)
    return np.array(out)

