"""Quantum-classical spin-boson dynamics with a Nosé-Hoover chain bath.

The bath of a spin-boson model is represented classically, either by many
oscillators at constant energy or by a single oscillator coupled to a
Nosé-Hoover chain thermostat (or to Langevin noise). The spin population
difference <sigma_z(t)> is estimated from trajectory ensembles in the
adiabatic approximation or with surface-hopping transitions.
"""

__version__ = "0.1.0"

from .ensemble import (
    AbortedRunError,
    EnsembleConfig,
    ObservableSeries,
    compare_series,
    run_ensemble,
)
from .model import BathSpec, ExtendedPhasePoint, SpinBoson, SpinBosonParams, build_ohmic_bath
from .propagators import IntegratorConfig, make_stepper
from .sampling import draw_initial

__all__ = [
    "AbortedRunError",
    "BathSpec",
    "EnsembleConfig",
    "ExtendedPhasePoint",
    "IntegratorConfig",
    "ObservableSeries",
    "SpinBoson",
    "SpinBosonParams",
    "build_ohmic_bath",
    "compare_series",
    "draw_initial",
    "make_stepper",
    "run_ensemble",
]
