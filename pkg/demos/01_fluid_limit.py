#!/usr/bin/env python3
"""How the normalized component count collapses onto a straight line.

Start n unit masses, let pairs of components merge at rate equal to
the product of their masses, and watch K(t/n)/n. On the sub-critical
window t in (0, 1) the path concentrates on 1 - t/2: the randomness
washes out at rate 1/sqrt(n).

Writes fluid_limit.png and prints the mean-vs-limit table.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mcoal import (
    ensemble_stats,
    fluid_limit,
    limit_params_er,
    run_ensemble,
    scale_trajectory,
    unit_masses,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

n = 5000
reps = 200
params = limit_params_er(n)
grid = np.linspace(0.05, 0.9, 18)

print(f"simulating {reps} runs of {n} unit masses up to rescaled time 0.9 ...")
trajs = run_ensemble(unit_masses(n), 0.9 / n, reps, master_seed=2024, record=grid / n)
paths = [scale_trajectory(t, params, grid)[1] for t in trajs]
summary = ensemble_stats(paths, params)

limit = fluid_limit(grid, params)
print(f"\n{'t':>6} {'mean K(t/n)/n':>14} {'1 - t/2':>9} {'deviation':>10}")
for g in range(grid.size):
    print(
        f"{grid[g]:6.2f} {summary.mean_scaled_k[g]:14.5f} {limit[g]:9.5f}"
        f" {summary.mean_scaled_k[g] - limit[g]:10.2e}"
    )

fig, ax = plt.subplots(figsize=(6, 4))
# a handful of individual paths to show the concentration
for r in (0, 1, 2):
    scaled, _ = scale_trajectory(trajs[r], params, grid)
    ax.plot(grid, scaled, lw=0.8, alpha=0.5, color="gray")
ax.plot(grid, summary.mean_scaled_k, "o", ms=4, label=f"ensemble mean ({reps} runs)")
ax.plot(grid, limit, "-", label="fluid limit 1 - t/2")
ax.set_xlabel("rescaled time t")
ax.set_ylabel("K(t/n) / n")
ax.set_title(f"Component count of {n} coalescing unit masses")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "fluid_limit.png", dpi=120)
print(f"\nfigure saved to {OUT / 'fluid_limit.png'}")
