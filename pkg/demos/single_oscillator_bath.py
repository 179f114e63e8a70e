#!/usr/bin/env python3
"""One thermostatted oscillator vs. a 200-mode bath (adiabatic dynamics).

Runs the three back ends of the weak-coupling figure preset with a reduced
ensemble and prints the curves side by side. Pass a figure name (fig1 or
fig2) and an ensemble size on the command line to change the defaults.
"""

import sys

import numpy as np

from qcnhc import compare_series, run_ensemble
from qcnhc.config import preset_runs

fig = sys.argv[1] if len(sys.argv) > 1 else "fig1"
n_traj = int(sys.argv[2]) if len(sys.argv) > 2 else 2000

runs = preset_runs(fig, n_traj=n_traj)
series = {}
for scheme, cfg in runs.items():
    print(f"running {scheme} with {cfg.n_bath} oscillator(s) ...")
    series[scheme] = run_ensemble(cfg)

t = series["nve"].times
print("\n   t     NVE     NHC      BD")
for k in range(0, len(t), 10):
    print(f"{t[k]:5.1f} " + " ".join(f"{series[s].mean[k]:7.3f}" for s in ("nve", "nhc", "bd")))

for scheme in ("nhc", "bd"):
    cmp = compare_series(series[scheme], series["nve"])
    print(f"\nsup |{scheme.upper()} - NVE| = {cmp.sup:.3f}, largest |z| = {np.max(np.abs(cmp.z)):.1f}")

drift = series["nhc"].drift_mean
print(f"NHC extended-energy drift (ensemble mean): {drift:.1e}")
