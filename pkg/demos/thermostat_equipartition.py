#!/usr/bin/env python3
"""Can one oscillator plus a thermostat sample the canonical ensemble?

Free oscillator (kondo = 0) at omega = 3, integrated with the Nose-Hoover
chain and with Langevin dynamics. Prints <P^2>/kT, which should be 1, and
a coarse histogram of P against the Gaussian.
"""

import numpy as np

from qcnhc.model import ExtendedPhasePoint, SpinBoson, SpinBosonParams
from qcnhc.propagators import IntegratorConfig, sample_momentum_trace
from qcnhc.rng import TrajectoryStreams

beta = 3.0
chains, steps = 20, 50_000
model = SpinBoson.ohmic(SpinBosonParams(kondo=0.0, beta=beta, n_bath=1))

for scheme in ("nhc", "bd", "nve"):
    rng = TrajectoryStreams(1, np.arange(chains))
    # start every chain away from equilibrium on purpose
    x0 = ExtendedPhasePoint(R=np.full((chains, 1), 0.5), P=np.zeros((chains, 1)))
    trace = sample_momentum_trace(model, IntegratorConfig(scheme=scheme), x0, steps,
                                  rng=rng, every=10)
    p = trace[len(trace) // 10:].ravel()
    print(f"{scheme}: <P^2>/kT = {np.mean(p**2) * beta:.3f}")

    edges = np.linspace(-2, 2, 9)
    hist, _ = np.histogram(p, bins=edges, density=True)
    mid = 0.5 * (edges[1:] + edges[:-1])
    gauss = np.sqrt(beta / (2 * np.pi)) * np.exp(-beta * mid**2 / 2)
    for m, h, g in zip(mid, hist, gauss):
        print(f"   {m:+.2f} {h:6.3f} {g:6.3f}")
