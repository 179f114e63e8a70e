"""Spin-boson system with a two-variable Nosé-Hoover chain.

Dimensionless units are used throughout: hbar = k_B = M_j = 1 and the
bath cutoff frequency omega_c = 1.

Arrays describing bath coordinates carry the oscillator index on the last
axis, so every function here accepts either a single phase point
(shape ``(n_bath,)``) or a batch of them (shape ``(n_traj, n_bath)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple

import numpy as np

HBAR = 1.0
KB = 1.0
OMEGA_C = 1.0


@dataclass(frozen=True)
class SpinBosonParams:
    """Physical parameters of the spin-boson model and its thermostat.

    ``m_eta1`` and ``m_eta2`` default to ``n_bath * kT * tau**2`` and
    ``kT * tau**2`` with ``tau = 1 / omega_max`` when left as ``None``.
    """

    omega: float = 1.0 / 3.0
    kondo: float = 0.007
    beta: float = 0.3
    omega_max: float = 3.0
    gamma_s: float = 0.0
    n_bath: int = 1
    m_eta1: float | None = None
    m_eta2: float | None = None

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if not self.kondo >= 0:
            raise ValueError(f"kondo must be >= 0, got {self.kondo}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.omega_max > 0:
            raise ValueError(f"omega_max must be > 0, got {self.omega_max}")
        if not math.isfinite(self.gamma_s):
            raise ValueError(f"gamma_s must be finite, got {self.gamma_s}")
        if int(self.n_bath) != self.n_bath or self.n_bath < 1:
            raise ValueError(f"n_bath must be an integer >= 1, got {self.n_bath}")
        tau = 1.0 / self.omega_max
        if self.m_eta1 is None:
            object.__setattr__(self, "m_eta1", self.n_bath * self.kT * tau**2)
        if self.m_eta2 is None:
            object.__setattr__(self, "m_eta2", self.kT * tau**2)
        if not self.m_eta1 > 0:
            raise ValueError(f"m_eta1 must be > 0, got {self.m_eta1}")
        if not self.m_eta2 > 0:
            raise ValueError(f"m_eta2 must be > 0, got {self.m_eta2}")

    @property
    def kT(self) -> float:
        return KB / self.beta


@dataclass(frozen=True)
class BathSpec:
    """Discretized harmonic bath: one entry per oscillator."""

    masses: np.ndarray
    frequencies: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        w = np.asarray(self.frequencies, dtype=float)
        c = np.asarray(self.couplings, dtype=float)
        if not (m.ndim == w.ndim == c.ndim == 1 and len(m) == len(w) == len(c)):
            raise ValueError("masses, frequencies and couplings must be 1-D and equal length")
        if len(w) == 0:
            raise ValueError("bath needs at least one oscillator")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("frequencies must be finite and positive")
        if np.any(np.diff(w) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("couplings must be finite and nonnegative")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("masses must be finite and positive")
        for name, arr in (("masses", m), ("frequencies", w), ("couplings", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.frequencies)

    def reorganization_sum(self) -> float:
        """Sum of c_j^2 / (2 M_j w_j^2) over the oscillators."""
        return float(np.sum(self.couplings**2 / (2 * self.masses * self.frequencies**2)))


def build_ohmic_bath(params: SpinBosonParams) -> BathSpec:
    """Discretize an Ohmic density with exponential cutoff into ``n_bath`` modes.

    w_j = -w_c ln(1 - j w_0 / w_c), w_0 = w_c (1 - exp(-w_max / w_c)) / N_b
    and c_j = w_j sqrt(xi hbar w_0 M_j).
    """
    n = int(params.n_bath)
    if n < 1:
        raise ValueError("n_bath must be >= 1")
    w0 = OMEGA_C * (1.0 - math.exp(-params.omega_max / OMEGA_C)) / n
    j = np.arange(1, n + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        freqs = -OMEGA_C * np.log1p(-j * w0 / OMEGA_C)
    if not np.all(np.isfinite(freqs)):
        raise ValueError("bath parameters produce non-finite frequencies")
    masses = np.ones(n)
    couplings = freqs * np.sqrt(params.kondo * HBAR * w0 * masses)
    return BathSpec(masses=masses, frequencies=freqs, couplings=couplings)


@dataclass
class ExtendedPhasePoint:
    """Point X = (R, eta1, eta2, P, p_eta1, p_eta2) of the extended phase space.

    ``R`` and ``P`` have shape ``(..., n_bath)``; the Nosé variables have the
    matching leading shape ``(...)``.
    """

    R: np.ndarray
    P: np.ndarray
    eta1: np.ndarray | float = 0.0
    eta2: np.ndarray | float = 0.0
    p_eta1: np.ndarray | float = 0.0
    p_eta2: np.ndarray | float = 0.0

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        if self.R.shape != self.P.shape:
            raise ValueError(f"R and P shapes differ: {self.R.shape} vs {self.P.shape}")
        lead = self.R.shape[:-1]
        for name in ("eta1", "eta2", "p_eta1", "p_eta2"):
            value = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, np.broadcast_to(value, lead).copy() if value.shape != lead else value)

    @classmethod
    def zeros(cls, n_bath: int, batch: int | None = None) -> "ExtendedPhasePoint":
        shape = (n_bath,) if batch is None else (batch, n_bath)
        return cls(np.zeros(shape), np.zeros(shape))

    def copy(self) -> "ExtendedPhasePoint":
        return ExtendedPhasePoint(
            *(np.array(getattr(self, f.name), copy=True) for f in fields(self))
        )

    def as_vector(self) -> np.ndarray:
        """Flatten a single point in the order (R, eta1, eta2, P, p_eta1, p_eta2)."""
        return np.concatenate(
            [self.R, [self.eta1, self.eta2], self.P, [self.p_eta1, self.p_eta2]]
        ).astype(float)

    @classmethod
    def from_vector(cls, v: np.ndarray, n_bath: int) -> "ExtendedPhasePoint":
        v = np.asarray(v, dtype=float)
        n = n_bath
        return cls(R=v[:n], P=v[n + 2:2 * n + 2], eta1=v[n], eta2=v[n + 1],
                   p_eta1=v[2 * n + 2], p_eta2=v[2 * n + 3])

    def is_finite(self) -> np.ndarray:
        ok = np.all(np.isfinite(self.R), axis=-1) & np.all(np.isfinite(self.P), axis=-1)
        for name in ("eta1", "eta2", "p_eta1", "p_eta2"):
            ok &= np.isfinite(getattr(self, name))
        return ok

    def take(self, idx) -> "ExtendedPhasePoint":
        return ExtendedPhasePoint(
            *(np.asarray(getattr(self, f.name))[idx] for f in fields(self))
        )


class SurfacePair(NamedTuple):
    """Adiabatic indices (alpha, alpha') of a density-matrix element; 1 is the lower surface."""

    alpha: int
    alpha_prime: int

    @property
    def is_diagonal(self) -> bool:
        return self.alpha == self.alpha_prime

    def swapped(self) -> "SurfacePair":
        return SurfacePair(self.alpha_prime, self.alpha)


ALL_PAIRS = (SurfacePair(1, 1), SurfacePair(1, 2), SurfacePair(2, 1), SurfacePair(2, 2))


def surface_sign(index):
    """-1 for the lower surface, +1 for the upper one (E_alpha = sign * G)."""
    return 2 * np.asarray(index) - 3


def mean_surface_sign(alpha, alpha_prime):
    """(s_alpha + s_alpha') / 2, so that the mean surface energy is this times G."""
    return 0.5 * (surface_sign(alpha) + surface_sign(alpha_prime))


@dataclass
class AdiabaticData:
    """Eigenstructure of the two-level block at fixed bath positions.

    Forces and the nonadiabatic coupling are all proportional to the bath
    coupling vector, so they are materialized lazily from ``couplings``.
    """

    gamma_eff: np.ndarray
    gap_g: np.ndarray
    omega: float
    couplings: np.ndarray = field(repr=False)
    masses: np.ndarray | None = field(default=None, repr=False)

    @property
    def e1(self):
        return -self.gap_g

    @property
    def e2(self):
        return self.gap_g

    @property
    def f1(self):
        return self.couplings * (self.gamma_eff / self.gap_g)[..., None]

    @property
    def f2(self):
        return -self.f1

    @property
    def d12_scale(self):
        """hbar Omega / (2 G^2); d12 = couplings * d12_scale."""
        return HBAR * self.omega / (2.0 * self.gap_g**2)

    @property
    def d12(self):
        return self.couplings * np.asarray(self.d12_scale)[..., None]

    @property
    def d21(self):
        return -self.d12


def gamma_eff(R, bath: BathSpec, params: SpinBosonParams):
    """Sum_j c_j R_j + hbar gamma_s, the total sigma_z field seen by the spin."""
    return np.sum(np.asarray(R) * bath.couplings, axis=-1) + HBAR * params.gamma_s


def adiabatic_eval(R, bath: BathSpec, params: SpinBosonParams) -> AdiabaticData:
    """Closed-form eigenstructure of -hbar Omega sigma_x - Gamma_eff sigma_z."""
    gam = np.asarray(gamma_eff(R, bath, params))
    g = np.sqrt((HBAR * params.omega) ** 2 + gam**2)
    return AdiabaticData(gamma_eff=gam, gap_g=g, omega=params.omega, couplings=bath.couplings,
                         masses=bath.masses)


def subsystem_matrix(gamma, params: SpinBosonParams) -> np.ndarray:
    """2x2 subsystem Hamiltonian in the (|up>, |down>) basis."""
    w = HBAR * params.omega
    return np.array([[-gamma, -w], [-w, gamma]], dtype=float)


def eigenvectors(adata: AdiabaticData):
    """Columns |1>, |2> in the (|up>, |down>) basis.

    Phase convention: with Gamma = G cos(theta), hbar Omega = G sin(theta),
    |1> = (cos(theta/2), sin(theta/2)) and |2> = (-sin(theta/2), cos(theta/2)).
    """
    theta = np.arctan2(HBAR * adata.omega, adata.gamma_eff)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def bath_potential(R, bath: BathSpec):
    return np.sum(0.5 * bath.masses * bath.frequencies**2 * np.asarray(R) ** 2, axis=-1)


def kinetic_energy(P, bath: BathSpec):
    return np.sum(np.asarray(P) ** 2 / (2 * bath.masses), axis=-1)


def mean_surface_energy(adata: AdiabaticData, alpha, alpha_prime):
    """(E_alpha + E_alpha') / 2."""
    return mean_surface_sign(alpha, alpha_prime) * adata.gap_g


def thermostat_energy(X: ExtendedPhasePoint, params: SpinBosonParams):
    kT = params.kT
    return (X.p_eta1**2 / (2 * params.m_eta1) + X.p_eta2**2 / (2 * params.m_eta2)
            + params.n_bath * kT * X.eta1 + kT * X.eta2)


def extended_energy(X: ExtendedPhasePoint, pair, bath: BathSpec, params: SpinBosonParams,
                    thermostat: bool = True):
    """Mean-surface Hamiltonian of the extended system.

    ``pair`` is a :class:`SurfacePair` or a tuple of index arrays matching the
    batch shape of ``X``. With ``thermostat=False`` the four Nosé terms are
    dropped (constant-energy variant).
    """
    alpha, alpha_prime = pair
    adata = adiabatic_eval(X.R, bath, params)
    h = kinetic_energy(X.P, bath) + bath_potential(X.R, bath)
    h = h + mean_surface_energy(adata, alpha, alpha_prime)
    if thermostat:
        h = h + thermostat_energy(X, params)
    return h


def bohr_frequency(pair, adata: AdiabaticData):
    """omega_{alpha alpha'} = (E_alpha - E_alpha') / hbar."""
    alpha, alpha_prime = pair
    return (surface_sign(alpha) - surface_sign(alpha_prime)) * adata.gap_g / HBAR


def with_params(params: SpinBosonParams, **changes) -> SpinBosonParams:
    """Copy of ``params`` with ``changes`` applied; thermostat masses are re-derived
    unless given explicitly."""
    changes.setdefault("m_eta1", None)
    changes.setdefault("m_eta2", None)
    return replace(params, **changes)


@dataclass(frozen=True)
class SpinBoson:
    """Parameters and discretized bath bundled together."""

    params: SpinBosonParams
    bath: BathSpec

    @classmethod
    def ohmic(cls, params: SpinBosonParams) -> "SpinBoson":
        return cls(params, build_ohmic_bath(params))

    @property
    def n_bath(self) -> int:
        return len(self.bath)

    def adiabatic(self, R) -> AdiabaticData:
        return adiabatic_eval(R, self.bath, self.params)

    def mean_force(self, R, alpha, alpha_prime):
        """Force on R from the bath potential plus the mean adiabatic surface.

        Returns ``(force, adata)`` so callers can reuse the eigenstructure.
        """
        R = np.asarray(R)
        adata = self.adiabatic(R)
        m = mean_surface_sign(alpha, alpha_prime)
        force = R * self._neg_spring
        force -= (m * adata.gamma_eff / adata.gap_g)[..., None] * self.bath.couplings
        return force, adata

    @property
    def _neg_spring(self):
        return -self.bath.masses * self.bath.frequencies**2

    def energy(self, X: ExtendedPhasePoint, pair, thermostat: bool = True):
        return extended_energy(X, pair, self.bath, self.params, thermostat=thermostat)
