#!/usr/bin/env python3
"""The compensated count: one path of M, <M> and [M].

Subtracting the accumulated merge intensity from the component count
leaves a martingale:

    M(t) = K(t) - kappa + (t/2) S1^2 - (1/2) int_0^t S2(s) ds

Its predictable quadratic variation <M> is the same integral term,
and its quadratic variation [M] counts the merges exactly. This
script draws all three for a single run and then checks, over an
ensemble, that var M(t) tracks the mean of <M>(t).
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mcoal import martingale_path, run_ensemble, simulate, unit_masses

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

mv = unit_masses(60)
horizon = 0.01
traj = simulate(mv, horizon, seed=11)
path = martingale_path(traj, mv)

print(f"one run of {len(mv)} unit masses to t = {horizon}: {traj.n_events} merges")
print(f"[M] at the end      : {path.bracket_M[-1]:.0f}")
print(f"kappa - K at the end: {60 - traj.k_after[-1]}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.step(path.times, path.M, where="post", label="M(t)")
ax1.plot(path.times, path.angle_M, label="<M>(t)")
ax1.step(path.times, path.bracket_M, where="post", label="[M](t)")
ax1.set_xlabel("t")
ax1.set_title("one trajectory")
ax1.legend()

reps = 2000
print(f"\nensemble of {reps} runs: var M(t) against mean <M>(t)")
trajs = run_ensemble(mv, horizon, reps, master_seed=12, record="full")
paths = [martingale_path(t, mv) for t in trajs]
grid = np.linspace(0, horizon, 12)
m = np.vstack([p.at(grid)[0] for p in paths])
angle = np.vstack([p.at(grid)[1] for p in paths])
print(f"{'t':>8} {'var M':>8} {'mean <M>':>9}")
for g in range(0, grid.size, 3):
    print(f"{grid[g]:8.4f} {m[:, g].var(ddof=1):8.4f} {angle[:, g].mean():9.4f}")

ax2.plot(grid, m.var(axis=0, ddof=1), "o", label="var M(t)")
ax2.plot(grid, angle.mean(axis=0), "-", label="mean <M>(t)")
ax2.set_xlabel("t")
ax2.set_title(f"variance identity ({reps} runs)")
ax2.legend()
fig.tight_layout()
fig.savefig(OUT / "martingale_anatomy.png", dpi=120)
print(f"\nfigure saved to {OUT / 'martingale_anatomy.png'}")
