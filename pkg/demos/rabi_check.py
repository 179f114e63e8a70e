#!/usr/bin/env python3
"""Decoupled spin: the ensemble should reproduce cos(2 Omega t).

With kondo = 0 the bath never talks to the spin, so all three back ends
must give plain Rabi oscillations. Good first thing to run after install.
"""

import numpy as np

from qcnhc import EnsembleConfig, run_ensemble

omega = 1.0 / 3.0

for scheme in ("nve", "nhc", "bd"):
    cfg = EnsembleConfig(n_traj=4000, kondo=0.0, scheme=scheme, n_output=11)
    s = run_ensemble(cfg)
    exact = np.cos(2 * omega * s.times)
    z = np.abs(s.mean - exact) / np.maximum(s.stderr, 1e-15)
    print(f"{scheme}: worst deviation {np.max(np.abs(s.mean - exact)):.3f} "
          f"({z.max():.1f} stderr)")

# the last run, point by point
print("\n   t    <sz>    exact   stderr")
for t, m, e, se in zip(s.times, s.mean, exact, s.stderr):
    print(f"{t:5.1f} {m:7.3f} {e:7.3f} {se:7.3f}")
