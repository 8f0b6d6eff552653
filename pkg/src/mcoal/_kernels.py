"""Compiled inner loops for the event-driven coalescent.

All kernels draw uniforms from a ``numpy.random.Generator`` so that the
compiled and interpreted code paths consume bit-identical random streams.
If numba is unavailable the same functions run as plain Python.
"""

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def fenwick_build(weights):
    """Build a Fenwick (binary indexed) tree over `weights` in O(n)."""
    n = weights.shape[0]
    tree = np.zeros(n + 1)
    for i in range(1, n + 1):
        tree[i] += weights[i - 1]
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]
    return tree


@njit(cache=True)
def fenwick_add(tree, slot, delta):
    """Add `delta` to the weight of 1-based `slot`."""
    n = tree.shape[0] - 1
    j = slot
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True)
def fenwick_prefix(tree, slot):
    """Cumulative weight of slots 1..`slot`."""
    s = 0.0
    j = slot
    while j > 0:
        s += tree[j]
        j -= j & (-j)
    return s


@njit(cache=True)
def fenwick_top(n):
    """Largest power of two not exceeding n (search starting mask)."""
    top = 1
    while (top << 1) <= n:
        top <<= 1
    return top


@njit(cache=True)
def fenwick_find(tree, target, top):
    """Smallest 1-based slot whose cumulative weight exceeds `target`.

    Valid for 0 <= target < total weight; may return n+1 for targets at
    or beyond the total (callers must reject that).
    """
    n = tree.shape[0] - 1
    idx = 0
    half = top
    rem = target
    while half > 0:
        nxt = idx + half
        if nxt <= n and tree[nxt] <= rem:
            rem -= tree[nxt]
            idx = nxt
        half >>= 1
    return idx + 1


@njit(cache=True)
def draw_pair(gen, tree, masses, total, top):
    """Draw an unordered pair of distinct slots with probability
    proportional to the product of their masses (size-biased double
    draw with rejection of equal or emptied slots)."""
    n = masses.shape[0]
    while True:
        i = fenwick_find(tree, gen.random() * total, top)
        j = fenwick_find(tree, gen.random() * total, top)
        if i == j or i > n or j > n:
            continue
        if masses[i - 1] > 0.0 and masses[j - 1] > 0.0:
            return i, j


@njit(cache=True)
def run_full(gen, masses, s1, s2_init, t_max, out_times, out_k, out_s2):
    """Gillespie loop recording every merge; returns the event count.

    `masses` is mutated in place (merged slots are zeroed). Output
    arrays must have room for len(masses)-1 events.
    """
    n = masses.shape[0]
    tree = fenwick_build(masses)
    top = fenwick_top(n)
    k = n
    s2 = s2_init
    clock = 0.0
    m = 0
    while k > 1:
        rate = 0.5 * (s1 * s1 - s2)
        clock += -math.log1p(-gen.random()) / rate
        if clock > t_max:
            break
        total = fenwick_prefix(tree, n)
        i, j = draw_pair(gen, tree, masses, total, top)
        xi = masses[i - 1]
        xj = masses[j - 1]
        s2 = s2 - xi * xi - xj * xj + (xi + xj) * (xi + xj)
        masses[i - 1] = xi + xj
        masses[j - 1] = 0.0
        fenwick_add(tree, i, xj)
        fenwick_add(tree, j, -xj)
        k -= 1
        out_times[m] = clock
        out_k[m] = k
        out_s2[m] = s2
        m += 1
    return m


@njit(cache=True)
def run_grid(gen, masses, s1, s2_init, t_max, grid, out_k):
    """Gillespie loop recording only the component count at `grid` times.

    Consumes the exact same random stream as `run_full`, so a grid run
    reproduces the step lookup of the corresponding full run. `grid`
    must be sorted ascending with grid[-1] <= t_max. Returns the event
    count.
    """
    n = masses.shape[0]
    tree = fenwick_build(masses)
    top = fenwick_top(n)
    k = n
    s2 = s2_init
    clock = 0.0
    m = 0
    gi = 0
    ng = grid.shape[0]
    while k > 1:
        rate = 0.5 * (s1 * s1 - s2)
        clock += -math.log1p(-gen.random()) / rate
        # K is right-continuous: grid points strictly before the next
        # event keep the current count.
        while gi < ng and grid[gi] < clock:
            out_k[gi] = k
            gi += 1
        if clock > t_max:
            break
        total = fenwick_prefix(tree, n)
        i, j = draw_pair(gen, tree, masses, total, top)
        xi = masses[i - 1]
        xj = masses[j - 1]
        s2 = s2 - xi * xi - xj * xj + (xi + xj) * (xi + xj)
        masses[i - 1] = xi + xj
        masses[j - 1] = 0.0
        fenwick_add(tree, i, xj)
        fenwick_add(tree, j, -xj)
        k -= 1
        m += 1
    while gi < ng:
        out_k[gi] = k
        gi += 1
    return m


@njit(cache=True)
def sample_k_batch(gen, masses0, s1, s2_init, t, reps):
    """Component count at a single time for `reps` independent runs.

    All runs share one sequentially consumed random stream; use for
    large batches of small instances where per-run stream setup would
    dominate.
    """
    out = np.empty(reps, dtype=np.int64)
    grid = np.empty(1)
    grid[0] = t
    out_k = np.empty(1, dtype=np.int64)
    masses = np.empty_like(masses0)
    for r in range(reps):
        masses[:] = masses0
        run_grid(gen, masses, s1, s2_init, t, grid, out_k)
        out[r] = out_k[0]
    return out


@njit(cache=True)
def propose_pairs_batch(gen, masses, count):
    """Sample `count` pairs from a frozen state (for law checks)."""
    n = masses.shape[0]
    tree = fenwick_build(masses)
    top = fenwick_top(n)
    total = fenwick_prefix(tree, n)
    out_i = np.empty(count, dtype=np.int64)
    out_j = np.empty(count, dtype=np.int64)
    for c in range(count):
        i, j = draw_pair(gen, tree, masses, total, top)
        out_i[c] = i
        out_j[c] = j
    return out_i, out_j
