"""Independent ground-truth mechanisms for validating the engine.

Two oracles, sharing nothing with the event-driven simulator:

* a static percolation sampler -- at a fixed time t each possible edge
  {i, j} is present independently with probability 1 - exp(-t*z_i*z_j),
  and components are found with a union-find pass;
* the exact distribution of the component count for small instances,
  obtained by integrating the Kolmogorov forward equations of the
  merge chain on the lattice of set partitions.
"""

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.sparse

from .engine import make_generator

__all__ = [
    "PartitionChain",
    "KDistribution",
    "percolation_sample",
    "percolation_k_samples",
    "build_partition_chain",
    "exact_k_distribution",
    "exact_mean_k",
]

MAX_EXACT_KAPPA = 8  # Bell(8) = 4140 states
MAX_PERCOLATION_KAPPA = 4096


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _edge_probabilities(masses, t):
    iu, ju = np.triu_indices(masses.size, k=1)
    return iu, ju, -np.expm1(-t * masses[iu] * masses[ju])


def percolation_sample(mv, t, seed, max_kappa=MAX_PERCOLATION_KAPPA):
    """One draw of the graph at fixed time t.

    Returns (component count, component masses sorted non-increasing).
    O(kappa^2) edges are sampled, so this is an oracle, not a
    production path; the default cap refuses kappa > 4096.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    masses = mv.masses
    n = masses.size
    if n > max_kappa:
        raise ValueError(f"percolation oracle capped at kappa <= {max_kappa}, got {n}")
    rng = make_generator(seed)
    iu, ju, probs = _edge_probabilities(masses, t)
    present = rng.random(probs.size) < probs
    uf = _UnionFind(n)
    for a, b in zip(iu[present], ju[present]):
        uf.union(int(a), int(b))
    comp_mass = {}
    for v in range(n):
        root = uf.find(v)
        comp_mass[root] = comp_mass.get(root, 0.0) + masses[v]
    sizes = sorted(comp_mass.values(), reverse=True)
    return len(sizes), sizes


def percolation_k_samples(mv, t, reps, seed, max_kappa=MAX_PERCOLATION_KAPPA):
    """Component count only, for `reps` independent percolation draws."""
    if t < 0:
        raise ValueError("t must be non-negative")
    masses = mv.masses
    n = masses.size
    if n > max_kappa:
        raise ValueError(f"percolation oracle capped at kappa <= {max_kappa}, got {n}")
    rng = make_generator(seed)
    iu, ju, probs = _edge_probabilities(masses, t)
    iu = iu.tolist()
    ju = ju.tolist()
    out = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        present = rng.random(probs.size) < probs
        uf = _UnionFind(n)
        for e in np.nonzero(present)[0].tolist():
            uf.union(iu[e], ju[e])
        out[r] = len({uf.find(v) for v in range(n)})
    return out


@dataclass
class PartitionChain:
    """Merge chain on set partitions of the labeled initial components.

    `states` lists canonical partitions (tuples of sorted index
    tuples); `rates` is the sparse generator matrix with off-diagonal
    entry mass(B1)*mass(B2) for each feasible block merge;
    `initial_state` indexes the all-singletons partition.
    """

    states: list
    rates: scipy.sparse.csr_matrix
    initial_state: int
    block_counts: np.ndarray


def build_partition_chain(mv):
    """Enumerate all set partitions reachable by merges and their rates."""
    masses = mv.masses
    n = masses.size
    if n > MAX_EXACT_KAPPA:
        raise ValueError(
            f"partition state space too large: kappa={n} exceeds {MAX_EXACT_KAPPA}"
        )
    singletons = tuple((i,) for i in range(n))
    index = {singletons: 0}
    states = [singletons]
    rows, cols, vals = [], [], []
    queue = [singletons]
    while queue:
        part = queue.pop()
        s = index[part]
        block_mass = [sum(masses[v] for v in block) for block in part]
        for a in range(len(part)):
            for b in range(a + 1, len(part)):
                merged_block = tuple(sorted(part[a] + part[b]))
                rest = [part[c] for c in range(len(part)) if c not in (a, b)]
                target = tuple(sorted(rest + [merged_block]))
                if target not in index:
                    index[target] = len(states)
                    states.append(target)
                    queue.append(target)
                rate = block_mass[a] * block_mass[b]
                rows.append(s)
                cols.append(index[target])
                vals.append(rate)
    # diagonal: negative row sums
    m = len(states)
    q = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(m, m)).tolil()
    row_sums = np.asarray(q.sum(axis=1)).ravel()
    q.setdiag(-row_sums)
    return PartitionChain(
        states=states,
        rates=q.tocsr(),
        initial_state=0,
        block_counts=np.array([len(p) for p in states], dtype=np.int64),
    )


@dataclass
class KDistribution:
    """Distribution of the component count at a fixed time.

    probs[k-1] = P(K(t) = k) for k in 1..kappa.
    """

    t: float
    probs: np.ndarray

    @property
    def kappa(self):
        return self.probs.size

    def prob(self, k):
        return self.probs[k - 1]

    def mean(self):
        return float(np.dot(np.arange(1, self.probs.size + 1), self.probs))


def exact_k_distribution(mv, t, rtol=1e-10, atol=1e-12):
    """Exact law of K(t) for small instances (kappa <= 8).

    Integrates the forward equations p'(t) = Q^T p(t) from the
    all-singletons state with an adaptive explicit integrator, then
    marginalizes the partition law over block counts.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    chain = build_partition_chain(mv)
    kappa = mv.masses.size
    probs = np.zeros(kappa)
    if t == 0:
        probs[kappa - 1] = 1.0
        return KDistribution(t=0.0, probs=probs)

    qt = chain.rates.T.tocsr()
    p0 = np.zeros(len(chain.states))
    p0[chain.initial_state] = 1.0
    sol = scipy.integrate.solve_ivp(
        lambda _, p: qt @ p,
        (0.0, t),
        p0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"forward-equation integration failed: {sol.message}")
    p = sol.y[:, -1]
    drift = abs(p.sum() - 1.0)
    if drift > 1e-8 or p.min() < -1e-8:
        raise RuntimeError(
            f"integration left the probability simplex (drift {drift:.2e}, min {p.min():.2e})"
        )
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    for s, nb in enumerate(chain.block_counts):
        probs[nb - 1] += p[s]
    return KDistribution(t=float(t), probs=probs)


def exact_mean_k(mv, t, **kwargs):
    """Expected component count at time t (small instances)."""
    return exact_k_distribution(mv, t, **kwargs).mean()
