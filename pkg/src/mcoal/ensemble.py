"""Reproducible (parallel) trajectory ensembles.

Trajectory r of an ensemble draws from the Philox stream keyed by
SeedSequence(master_seed, spawn_key=(r,)), so results are identical
for any worker count and any completion order; aggregation is a fold
in trajectory-index order.
"""

import concurrent.futures
import os

import numpy as np

from . import _kernels
from .engine import make_generator, simulate

__all__ = ["trajectory_seed", "run_ensemble", "sample_k_at"]


def trajectory_seed(master_seed, index):
    """Seed stream for trajectory `index`, derived only from (seed, index)."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def _simulate_chunk(mv, t_max, record, master_seed, start, stop):
    return [
        simulate(mv, t_max, trajectory_seed(master_seed, r), record=record)
        for r in range(start, stop)
    ]


def run_ensemble(mv, t_max, reps, master_seed, record="full", workers=1):
    """Simulate `reps` independent trajectories.

    Parameters
    ----------
    record : "full" or array-like of times
        Passed through to `simulate`.
    workers : int or None
        Process count; None uses the available parallelism. The result
        list is ordered by trajectory index regardless.
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(int(workers), reps))
    if workers == 1:
        return _simulate_chunk(mv, t_max, record, master_seed, 0, reps)

    bounds = np.linspace(0, reps, workers + 1).astype(int)
    out = [None] * workers
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_simulate_chunk, mv, t_max, record, master_seed, bounds[w], bounds[w + 1]): w
            for w in range(workers)
            if bounds[w] < bounds[w + 1]
        }
        for fut in concurrent.futures.as_completed(futures):
            out[futures[fut]] = fut.result()
    trajectories = []
    for chunk in out:
        if chunk:
            trajectories.extend(chunk)
    return trajectories


def sample_k_at(mv, t, reps, master_seed):
    """Component-count samples at a single time, batched in one stream.

    Fast path for large ensembles of small instances: all replications
    consume one sequential Philox stream keyed by `master_seed`
    (deterministic, but not per-trajectory addressable).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if reps < 1:
        raise ValueError("need at least one replication")
    summary = mv.summary()
    gen = make_generator(np.random.SeedSequence(int(master_seed)))
    return _kernels.sample_k_batch(
        gen, mv.masses.copy(), summary.sigma1, summary.sigma2, float(t), int(reps)
    )
