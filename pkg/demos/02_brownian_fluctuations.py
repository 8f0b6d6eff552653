#!/usr/bin/env python3
"""The second-order picture: fluctuations are a time-changed Brownian motion.

Blow the deviations from the fluid limit up by sqrt(n):

    Z(t) = sqrt(n) * (K(t/n)/n - (1 - t/2))

For unit masses the limit is B(t/2), so Z(t) should look centered
Gaussian with variance t/2, independent increments, and covariance
min(s, t)/2. This script checks all three against a moderate ensemble
and draws the marginal at t = 0.8 over the N(0, 0.4) density.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import scipy.stats

from mcoal import (
    ensemble_stats,
    fluct_variance,
    limit_params_er,
    run_ensemble,
    scale_trajectory,
    unit_masses,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

n = 4000
reps = 1000
params = limit_params_er(n)
grid = np.linspace(0.1, 0.9, 9)

print(f"simulating {reps} runs of {n} unit masses ...")
trajs = run_ensemble(unit_masses(n), 0.9 / n, reps, master_seed=77, record=grid / n)
paths = [scale_trajectory(t, params, grid)[1] for t in trajs]
summary = ensemble_stats(paths, params)
z = np.vstack([p.Z for p in paths])

print(f"\n{'t':>5} {'var Z(t)':>9} {'t/2':>6} {'ratio':>6}")
for g in range(grid.size):
    theory = fluct_variance(grid[g], params)
    print(f"{grid[g]:5.2f} {summary.var_z[g]:9.4f} {theory:6.3f} {summary.var_z[g] / theory:6.3f}")

s, t = 0.4, 0.8
a, b = np.argmin(np.abs(grid - s)), np.argmin(np.abs(grid - t))
print(f"\ncov(Z({s}), Z({t}))   = {summary.cov_z[a, b]: .4f}   (min(s,t)/2 = {s / 2})")
incr_corr = np.corrcoef(z[:, a], z[:, b] - z[:, a])[0, 1]
print(f"corr(Z({s}), Z({t})-Z({s})) = {incr_corr: .4f}   (independent increments: 0)")

ks = scipy.stats.kstest(z[:, b], "norm", args=(0, np.sqrt(t / 2)))
print(f"KS of Z({t}) against N(0, {t / 2}): D = {ks.statistic:.4f}, p = {ks.pvalue:.3f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.hist(z[:, b], bins=40, density=True, alpha=0.6, label=f"Z({t}) over {reps} runs")
xs = np.linspace(-2.5, 2.5, 200)
ax1.plot(xs, scipy.stats.norm.pdf(xs, 0, np.sqrt(t / 2)), label=f"N(0, {t / 2})")
ax1.set_title("marginal fluctuation")
ax1.legend()
ax2.plot(grid, summary.var_z, "o", label="ensemble var Z(t)")
ax2.plot(grid, fluct_variance(grid, params), "-", label="t/2")
ax2.set_xlabel("t")
ax2.set_title("variance growth")
ax2.legend()
fig.tight_layout()
fig.savefig(OUT / "brownian_fluctuations.png", dpi=120)
print(f"\nfigure saved to {OUT / 'brownian_fluctuations.png'}")
