"""Initial conditions: spin in |up>, bath in thermal equilibrium (Wigner form)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ALL_PAIRS,
    HBAR,
    AdiabaticData,
    BathSpec,
    ExtendedPhasePoint,
    SpinBosonParams,
    SurfacePair,
    adiabatic_eval,
    eigenvectors,
)


def wigner_variances(bath: BathSpec, beta: float):
    """Position and momentum variances of the thermal Wigner function of each mode."""
    w, m = bath.frequencies, bath.masses
    coth = 1.0 / np.tanh(0.5 * beta * HBAR * w)
    var_r = HBAR * coth / (2 * m * w)
    var_p = m * HBAR * w * coth / 2
    return var_r, var_p


def sample_bath_wigner(bath: BathSpec, beta: float, rng, size: int | None = None):
    """Draw bath positions and momenta from the thermal Wigner distribution.

    ``rng`` is a ``numpy.random.Generator`` or a :class:`~qcnhc.rng.TrajectoryStreams`;
    ``size`` adds a leading batch axis (required for streams).
    """
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    var_r, var_p = wigner_variances(bath, beta)
    n = len(bath)
    shape = (n,) if size is None else (size, n)
    R = rng.standard_normal(shape) * np.sqrt(var_r)
    P = rng.standard_normal(shape) * np.sqrt(var_p)
    return R, P


def initial_pair_weights(adata: AdiabaticData) -> dict[SurfacePair, np.ndarray]:
    """w(a, a') = <a'|up><up|a> for each of the four surface pairs."""
    vecs = eigenvectors(adata)
    up = vecs[0]  # <up|alpha> for alpha = 1, 2
    return {
        pair: np.asarray(up[pair.alpha_prime - 1] * up[pair.alpha - 1], dtype=complex)
        for pair in ALL_PAIRS
    }


@dataclass
class InitialSample:
    """A sampled phase point with its surface pair and importance weight.

    Array-valued fields allow a whole batch to be stored in one object.
    """

    point: ExtendedPhasePoint
    alpha: np.ndarray
    alpha_prime: np.ndarray
    weight: np.ndarray

    @property
    def pair(self):
        if np.ndim(self.alpha) == 0:
            return SurfacePair(int(self.alpha), int(self.alpha_prime))
        return SurfacePair(self.alpha, self.alpha_prime)

    def __len__(self):
        return int(np.size(self.alpha))


def draw_initial(bath: BathSpec, params: SpinBosonParams, rng, size: int | None = None,
                 populations_only: bool = False) -> InitialSample:
    """Sample (R, P) and a surface pair with probability proportional to |w|.

    The returned weight is ``w / prob`` so that averaging weight times any
    pair-dependent estimator reproduces the full sum over pairs. With
    ``populations_only`` only the two diagonal pairs are drawn.
    """
    R, P = sample_bath_wigner(bath, params.beta, rng, size=size)
    adata = adiabatic_eval(R, bath, params)
    w = initial_pair_weights(adata)
    pairs = ALL_PAIRS if not populations_only else (SurfacePair(1, 1), SurfacePair(2, 2))
    mags = np.stack([np.abs(w[p]) for p in pairs], axis=-1)
    cum = np.cumsum(mags, axis=-1)
    total = cum[..., -1]
    u = rng.random() if size is None else rng.random(size)
    # a pair with zero weight spans an empty interval and is never chosen
    choice = np.sum(cum <= (np.asarray(u) * total)[..., None], axis=-1)

    alpha = np.array([p.alpha for p in pairs])[choice]
    alpha_prime = np.array([p.alpha_prime for p in pairs])[choice]
    w_sel = np.choose(choice, [w[p] for p in pairs])
    prob = np.take_along_axis(mags, np.asarray(choice)[..., None], axis=-1)[..., 0] / total
    weight = w_sel / prob
    point = ExtendedPhasePoint(R=R, P=P)
    return InitialSample(point=point, alpha=alpha, alpha_prime=alpha_prime,
                         weight=np.asarray(weight, dtype=complex))
