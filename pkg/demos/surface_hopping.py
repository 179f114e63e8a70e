#!/usr/bin/env python3
"""Nonadiabatic runs with up to six transitions per trajectory.

Shows the hopping diagnostics (hops per trajectory, capped fraction,
energy error per hop) and how far each back end strays from the physical
bound |<sz>| <= 1. Small ensembles by default; the figure presets use 1e5.
"""

import numpy as np

from qcnhc import run_ensemble
from qcnhc.config import preset_runs

n_traj = 5000
runs = preset_runs("fig4", n_traj=n_traj)
runs["nve"] = runs["nve"].replace(n_traj=n_traj // 5)  # 200 modes is the slow one

for scheme, cfg in runs.items():
    s = run_ensemble(cfg)
    excess = np.max(np.abs(s.mean) - 1 - 3 * s.stderr)
    print(f"{scheme} (N_b={cfg.n_bath}, {cfg.n_traj} traj)")
    print(f"  hops/trajectory {s.hops_per_trajectory:.2f}, capped {s.capped_fraction:.0%}, "
          f"max hop energy error {s.max_hop_error:.1e}")
    print(f"  max |<sz>| {np.max(np.abs(s.mean)):.2f}, largest stderr {s.stderr.max():.2f}, "
          f"{'within' if excess <= 0 else 'outside'} the bound")
