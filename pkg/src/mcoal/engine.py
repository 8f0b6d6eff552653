"""Event-driven simulation of the multiplicative coalescent.

Any two components with masses x and y merge at rate x*y. The
simulator runs a Gillespie loop: waiting times are exponential at the
total rate (S1^2 - S2)/2, and the merging pair is chosen by two
independent size-biased draws with rejection of equal slots. Slots are
never compacted; a merge zeroes one slot and overwrites the other, so
updates stay O(log kappa) via a Fenwick tree.

Trajectories record either every merge (``record="full"``) or just the
component count on a time grid. From a full trajectory the associated
martingale path can be extracted exactly, because the running sum of
squared masses is piecewise constant between merges.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mass_vectors import MassSummary, MassVector

__all__ = [
    "WeightedSampler",
    "CoalescentState",
    "Trajectory",
    "MartingalePath",
    "total_rate",
    "propose_pair",
    "simulate",
    "martingale_path",
    "write_trajectory_csv",
    "read_trajectory_csv",
]


def make_generator(seed):
    """Counter-based generator (Philox) from an int or SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def _seed_token(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    if isinstance(seed, np.random.Generator):
        return None
    return int(seed)


class WeightedSampler:
    """Fenwick-tree sampler over mutable slot weights.

    Point update and cumulative-weight search both run in O(log n).
    Sampling returns slot i with probability weight(i)/total_weight.
    Slots are 0-based in this interface.
    """

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=np.float64).copy()
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise ValueError("need a non-empty 1-d weight array")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")
        self._tree = _kernels.fenwick_build(self.weights)
        self._top = _kernels.fenwick_top(self.weights.size)

    def __len__(self):
        return self.weights.size

    @property
    def total_weight(self):
        return _kernels.fenwick_prefix(self._tree, self.weights.size)

    def get(self, slot):
        return self.weights[slot]

    def set(self, slot, weight):
        if weight < 0:
            raise ValueError("weights must be non-negative")
        delta = weight - self.weights[slot]
        self.weights[slot] = weight
        _kernels.fenwick_add(self._tree, slot + 1, delta)

    def prefix(self, slot):
        """Cumulative weight of slots 0..slot inclusive."""
        return _kernels.fenwick_prefix(self._tree, slot + 1)

    def sample(self, rng):
        """One slot, mass-proportionally; rejects emptied slots."""
        total = self.total_weight
        if total <= 0:
            raise ValueError("cannot sample from an all-zero sampler")
        n = self.weights.size
        while True:
            slot = _kernels.fenwick_find(self._tree, rng.random() * total, self._top)
            if slot <= n and self.weights[slot - 1] > 0:
                return slot - 1


@dataclass
class CoalescentState:
    """Mutable simulation state: slot masses plus running aggregates.

    S1 is conserved across merges; S2 is non-decreasing; K drops by
    one per merge.
    """

    active_masses: np.ndarray
    S1: float
    S2: float
    K: int
    clock: float = 0.0

    @classmethod
    def from_mass_vector(cls, mv):
        s = mv.summary()
        return cls(
            active_masses=mv.masses.copy(),
            S1=s.sigma1,
            S2=s.sigma2,
            K=s.kappa,
            clock=0.0,
        )


def total_rate(state):
    """Total merge rate sum_{i<j} x_i x_j = (S1^2 - S2)/2."""
    return 0.5 * (state.S1 * state.S1 - state.S2)


def propose_pair(sampler, rng):
    """Unordered pair {i, j}, i != j, with probability ~ x_i * x_j.

    Two independent size-biased draws, rejecting equal slots; the
    per-attempt acceptance probability is 1 - S2/S1^2.
    """
    if np.count_nonzero(sampler.weights) < 2:
        raise ValueError("need at least two components to propose a pair")
    while True:
        i = sampler.sample(rng)
        j = sampler.sample(rng)
        if i != j:
            return i, j


@dataclass
class Trajectory:
    """One simulated path of the component-count process.

    In full mode, `times`, `k_after` and `s2_after` hold one entry per
    merge. In grid mode only `grid_t` / `grid_k` are populated.
    """

    initial_summary: MassSummary
    n_label: int
    t_max: float
    seed: object
    mode: str
    times: np.ndarray | None = None
    k_after: np.ndarray | None = None
    s2_after: np.ndarray | None = None
    grid_t: np.ndarray | None = None
    grid_k: np.ndarray | None = None
    beyond_moment_bound_window: bool = False

    @property
    def events(self):
        """List of (time, K_after, S2_after) tuples (full mode)."""
        self._require_full()
        return list(zip(self.times.tolist(), self.k_after.tolist(), self.s2_after.tolist()))

    @property
    def n_events(self):
        return self.times.size if self.mode == "full" else None

    def _require_full(self):
        if self.mode != "full":
            raise ValueError("grid-mode trajectory lacks per-event data")

    def _check_horizon(self, t):
        if np.any(t > self.t_max * (1 + 1e-12)):
            raise ValueError(f"lookup beyond the simulated horizon {self.t_max}")

    def k_at(self, t):
        """Right-continuous component count at time(s) t (full mode)."""
        self._require_full()
        t = np.asarray(t, dtype=np.float64)
        self._check_horizon(t)
        merged = np.searchsorted(self.times, t, side="right")
        return self.initial_summary.kappa - merged

    def s2_at(self, t):
        """Right-continuous sum of squared masses at time(s) t."""
        self._require_full()
        t = np.asarray(t, dtype=np.float64)
        self._check_horizon(t)
        idx = np.searchsorted(self.times, t, side="right")
        s2 = np.concatenate([[self.initial_summary.sigma2], self.s2_after])
        return s2[idx]


def simulate(mv, t_max, seed, record="full", backend="auto"):
    """Simulate the coalescent started from `mv` up to time `t_max`.

    Parameters
    ----------
    mv : MassVector
    t_max : float
        Horizon in unscaled (rate-1) time; must be non-negative.
    seed : int or numpy.random.SeedSequence
        Stream key; identical inputs give bit-identical trajectories.
    record : "full" or array-like of times
        Full mode stores every merge; otherwise the component count is
        recorded at the given (ascending, <= t_max) times only.
    backend : {"auto", "compiled", "python"}
        The compiled and Python event loops consume the same random
        stream and produce identical trajectories; "python" exists for
        cross-checking.

    Returns
    -------
    Trajectory
    """
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    if not isinstance(mv, MassVector):
        raise TypeError("mv must be a MassVector")
    summary = mv.summary()
    grid = None
    if not (isinstance(record, str) and record == "full"):
        grid = np.asarray(record, dtype=np.float64).ravel()
        if grid.size and (np.any(np.diff(grid) < 0) or grid[0] < 0):
            raise ValueError("grid times must be ascending and non-negative")
        if grid.size and grid[-1] > t_max:
            raise ValueError(f"grid times beyond the horizon: {grid[grid > t_max].tolist()}")

    if backend not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    use_python = backend == "python" or (backend == "auto" and not _kernels.HAVE_NUMBA)
    rng = make_generator(seed)
    masses = mv.masses.copy()

    if grid is None:
        out_times = np.empty(max(len(mv) - 1, 0))
        out_k = np.empty(max(len(mv) - 1, 0), dtype=np.int64)
        out_s2 = np.empty(max(len(mv) - 1, 0))
        runner = _run_full_py if use_python else _kernels.run_full
        m = runner(rng, masses, summary.sigma1, summary.sigma2, t_max, out_times, out_k, out_s2)
        traj = Trajectory(
            initial_summary=summary,
            n_label=mv.n_label,
            t_max=float(t_max),
            seed=_seed_token(seed),
            mode="full",
            times=out_times[:m].copy(),
            k_after=out_k[:m].copy(),
            s2_after=out_s2[:m].copy(),
        )
    else:
        out_k = np.empty(grid.size, dtype=np.int64)
        runner = _run_grid_py if use_python else _kernels.run_grid
        runner(rng, masses, summary.sigma1, summary.sigma2, t_max, grid, out_k)
        traj = Trajectory(
            initial_summary=summary,
            n_label=mv.n_label,
            t_max=float(t_max),
            seed=_seed_token(seed),
            mode="grid",
            grid_t=grid.copy(),
            grid_k=out_k,
        )
    traj.beyond_moment_bound_window = bool(t_max * summary.sigma2 >= 1.0)
    return traj


def _run_full_py(rng, masses, s1, s2, t_max, out_times, out_k, out_s2):
    # Reference event loop mirroring _kernels.run_full through the
    # public sampler ops; consumes the identical random stream.
    sampler = WeightedSampler(masses)
    state = CoalescentState(
        active_masses=sampler.weights, S1=s1, S2=s2, K=int(np.count_nonzero(masses))
    )
    m = 0
    while state.K > 1:
        state.clock += -math.log1p(-rng.random()) / total_rate(state)
        if state.clock > t_max:
            break
        i, j = propose_pair(sampler, rng)
        xi = sampler.get(i)
        xj = sampler.get(j)
        state.S2 = state.S2 - xi * xi - xj * xj + (xi + xj) * (xi + xj)
        sampler.set(i, xi + xj)
        sampler.set(j, 0.0)
        state.K -= 1
        out_times[m] = state.clock
        out_k[m] = state.K
        out_s2[m] = state.S2
        m += 1
    masses[:] = sampler.weights
    return m


def _run_grid_py(rng, masses, s1, s2, t_max, grid, out_k):
    sampler = WeightedSampler(masses)
    state = CoalescentState(
        active_masses=sampler.weights, S1=s1, S2=s2, K=int(np.count_nonzero(masses))
    )
    gi = 0
    m = 0
    while state.K > 1:
        state.clock += -math.log1p(-rng.random()) / total_rate(state)
        while gi < grid.size and grid[gi] < state.clock:
            out_k[gi] = state.K
            gi += 1
        if state.clock > t_max:
            break
        i, j = propose_pair(sampler, rng)
        xi = sampler.get(i)
        xj = sampler.get(j)
        state.S2 = state.S2 - xi * xi - xj * xj + (xi + xj) * (xi + xj)
        sampler.set(i, xi + xj)
        sampler.set(j, 0.0)
        state.K -= 1
        m += 1
    while gi < grid.size:
        out_k[gi] = state.K
        gi += 1
    masses[:] = sampler.weights
    return m


def write_trajectory_csv(traj, path):
    """Persist a trajectory.

    Full mode: `event_index,time,K,S2` with an index-0 row for the
    initial state. Grid mode: `t,K`. Floats are written with
    round-trip precision so equal trajectories give equal bytes.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if traj.mode == "full":
            writer.writerow(["event_index", "time", "K", "S2"])
            writer.writerow([0, repr(0.0), traj.initial_summary.kappa, repr(traj.initial_summary.sigma2)])
            for i in range(traj.times.size):
                writer.writerow(
                    [i + 1, repr(float(traj.times[i])), int(traj.k_after[i]), repr(float(traj.s2_after[i]))]
                )
        else:
            writer.writerow(["t", "K"])
            for i in range(traj.grid_t.size):
                writer.writerow([repr(float(traj.grid_t[i])), int(traj.grid_k[i])])


def read_trajectory_csv(path, initial_summary, t_max, n_label=None, seed=None):
    """Load a trajectory written by `write_trajectory_csv`.

    The CSV does not carry the initial summary or the horizon; the
    caller supplies them (normally from the run manifest).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    if header == ["event_index", "time", "K", "S2"]:
        if not rows or int(rows[0][0]) != 0:
            raise ValueError(f"{path}: full trajectory must start with the index-0 row")
        times = np.array([float(r[1]) for r in rows[1:]])
        k_after = np.array([int(r[2]) for r in rows[1:]], dtype=np.int64)
        s2_after = np.array([float(r[3]) for r in rows[1:]])
        traj = Trajectory(
            initial_summary=initial_summary,
            n_label=n_label if n_label is not None else initial_summary.kappa,
            t_max=float(t_max),
            seed=seed,
            mode="full",
            times=times,
            k_after=k_after,
            s2_after=s2_after,
        )
    elif header == ["t", "K"]:
        traj = Trajectory(
            initial_summary=initial_summary,
            n_label=n_label if n_label is not None else initial_summary.kappa,
            t_max=float(t_max),
            seed=seed,
            mode="grid",
            grid_t=np.array([float(r[0]) for r in rows]),
            grid_k=np.array([int(r[1]) for r in rows], dtype=np.int64),
        )
    else:
        raise ValueError(f"{path}: unrecognized trajectory header {header}")
    traj.beyond_moment_bound_window = bool(t_max * initial_summary.sigma2 >= 1.0)
    return traj


@dataclass
class MartingalePath:
    """Compensated component count along one trajectory.

    With kappa the initial count and S1, S2 the mass power sums,

        M(t)   = K(t) - kappa + (t/2) S1^2 - (1/2) int_0^t S2(s) ds
        <M>_t  =               (t/2) S1^2 - (1/2) int_0^t S2(s) ds
        [M]_t  = sum of squared jumps of M up to t

    evaluated at the merge times (index 0 is t = 0). The integral is
    exact: S2 is piecewise constant between merges.
    """

    times: np.ndarray
    M: np.ndarray
    angle_M: np.ndarray
    bracket_M: np.ndarray
    t_max: float = 0.0
    _kappa: int = field(repr=False, default=0)
    _sigma1_sq: float = field(repr=False, default=0.0)
    _event_times: np.ndarray = field(repr=False, default=None)
    _k_after: np.ndarray = field(repr=False, default=None)
    _s2_levels: np.ndarray = field(repr=False, default=None)
    _cum_int: np.ndarray = field(repr=False, default=None)

    @property
    def initial_count(self):
        return self._kappa

    def at(self, t):
        """(M, <M>, [M], K) at arbitrary time(s) t <= horizon."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t > self.t_max):
            raise ValueError("evaluation beyond the simulated horizon")
        idx = np.searchsorted(self._event_times, t, side="right")
        k = np.concatenate([[self._kappa], self._k_after])[idx]
        seg_start = np.concatenate([[0.0], self._event_times])[idx]
        integral = self._cum_int[idx] + self._s2_levels[idx] * (t - seg_start)
        angle = 0.5 * t * self._sigma1_sq - 0.5 * integral
        m = k - self._kappa + angle
        bracket = self.bracket_M[idx]
        return m, angle, bracket, k


def martingale_path(traj, mv):
    """Extract the martingale triple from a full-mode trajectory.

    The quadratic variation is accumulated from the actual squared
    jumps of M; its exact agreement with kappa - K(t) is a checkable
    identity rather than a construction.
    """
    if traj.mode != "full":
        raise ValueError("martingale extraction needs a full-mode trajectory (grid mode has insufficient data)")
    summary = traj.initial_summary
    kappa = summary.kappa
    s1_sq = summary.sigma1 * summary.sigma1

    times = traj.times
    n_ev = times.size
    # S2 level on segment [t_{i-1}, t_i) and the running exact integral
    # of S2 over the segments completed so far.
    s2_levels = np.concatenate([[summary.sigma2], traj.s2_after])
    seg_bounds = np.concatenate([[0.0], times])
    seg_lengths = np.diff(seg_bounds)
    cum_int = np.concatenate([[0.0], np.cumsum(s2_levels[:-1] * seg_lengths)])

    full_times = seg_bounds
    k_path = np.concatenate([[kappa], traj.k_after])
    angle = 0.5 * full_times * s1_sq - 0.5 * cum_int
    m_path = k_path - kappa + angle

    # [M]: sum of squared jumps. The compensator is continuous, so the
    # jump of M at each event is the (integer) jump of K; accumulating
    # those keeps the bracket exact, where differencing the float M
    # values would not.
    jumps_sq = (k_path[1:] - k_path[:-1]).astype(np.float64) ** 2
    bracket = np.concatenate([[0.0], np.cumsum(jumps_sq)])

    return MartingalePath(
        times=full_times,
        M=m_path,
        angle_M=angle,
        bracket_M=bracket,
        t_max=traj.t_max,
        _kappa=kappa,
        _sigma1_sq=s1_sq,
        _event_times=times,
        _k_after=traj.k_after,
        _s2_levels=s2_levels,
        _cum_int=cum_int,
    )
