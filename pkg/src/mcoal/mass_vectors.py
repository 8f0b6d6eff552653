"""Initial mass vectors for multiplicative random graph processes.

Three families are supported: homogeneous unit masses, unit masses
perturbed by a batch of heavy vertices, and deterministic quantile
weights drawn from a probability distribution. Each family comes with
the limit parameters that the analysis layer needs.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MassVector",
    "MassSummary",
    "LimitParams",
    "FiniteSizeDiagnostics",
    "QuantileSpec",
    "PointMass",
    "Pareto",
    "Exponential",
    "TabulatedInverse",
    "unit_masses",
    "generalized_er",
    "quantile_masses",
    "limit_params_er",
    "limit_params_general",
    "write_mass_csv",
    "read_mass_csv",
]


def _fsum(values):
    # Compensated summation; heavy-tailed weight sums at n ~ 1e6 need
    # better than naive accumulation for the sqrt(n)-scale diagnostics.
    return math.fsum(values.tolist()) if isinstance(values, np.ndarray) else math.fsum(values)


@dataclass(frozen=True)
class MassSummary:
    """First two power sums and the count of positive masses."""

    sigma1: float
    sigma2: float
    kappa: int


class MassVector:
    """Finite vector of strictly positive masses, sorted non-increasing.

    Zeros are stripped at construction; negative masses are rejected.
    Instances are immutable and safe to share across workers.

    Parameters
    ----------
    masses : array-like
        Component masses; zeros allowed (dropped), negatives rejected.
    n_label : int, optional
        The index n of the vector sequence this instantiates. Defaults
        to the number of positive masses.
    """

    __slots__ = ("masses", "n_label")

    def __init__(self, masses, n_label=None):
        arr = np.asarray(masses, dtype=np.float64).ravel()
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("masses must be finite")
        if np.any(arr < 0):
            raise ValueError("masses must be non-negative")
        arr = arr[arr > 0]
        if arr.size == 0:
            raise ValueError("mass vector needs at least one positive mass")
        arr = np.sort(arr)[::-1].copy()
        arr.setflags(write=False)
        object.__setattr__(self, "masses", arr)
        object.__setattr__(self, "n_label", int(n_label) if n_label is not None else arr.size)

    def __setattr__(self, name, value):
        raise AttributeError("MassVector is immutable")

    def __reduce__(self):
        # slots + immutability break the default pickle path
        return (MassVector, (np.asarray(self.masses), self.n_label))

    def __len__(self):
        return self.masses.size

    def __repr__(self):
        head = ", ".join(f"{m:g}" for m in self.masses[:4])
        tail = ", ..." if len(self) > 4 else ""
        return f"MassVector([{head}{tail}], kappa={len(self)}, n_label={self.n_label})"

    def __eq__(self, other):
        if not isinstance(other, MassVector):
            return NotImplemented
        return self.n_label == other.n_label and np.array_equal(self.masses, other.masses)

    @property
    def kappa(self):
        return self.masses.size

    def summary(self):
        """Compensated sigma1, sigma2 and the component count."""
        return MassSummary(
            sigma1=_fsum(self.masses),
            sigma2=_fsum(self.masses * self.masses),
            kappa=self.masses.size,
        )

    def scaled(self, factor):
        """The vector with every mass multiplied by `factor` > 0."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return MassVector(self.masses * factor, n_label=self.n_label)


@dataclass(frozen=True)
class LimitParams:
    """Normalizers and limit constants for the component-count limits.

    `varkappa` normalizes the component count, `varsigma` rescales
    time. `alpha` sets the fluid slope (fluid limit 1 - t*alpha/2),
    `beta1`/`beta2` the drift of the fluctuation limit
    (beta1 - beta2*t/2).
    """

    varkappa: float
    varsigma: float
    alpha: float
    beta1: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        if not (self.varkappa > 0 and self.varsigma > 0):
            raise ValueError("varkappa and varsigma must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("beta1 and beta2 must be non-negative")


@dataclass(frozen=True)
class FiniteSizeDiagnostics:
    """Signed finite-n discrepancies behind the fluctuation drift.

    kappa_discrepancy  = sqrt(varkappa) * (kappa/varkappa - 1)
    alpha_discrepancy  = sqrt(varkappa) * (sigma1^2/(varkappa*varsigma) - alpha)

    These converge to beta1 and beta2 when the drift assumptions hold;
    they are reported signed even when a limit would be negative.
    """

    kappa_discrepancy: float
    alpha_discrepancy: float


class QuantileSpec:
    """Weight distribution described through its quantile function.

    Subclasses provide ``tail_value(x)`` = F^{-1}(1 - x) for x in
    (0, 1], vectorized over numpy arrays, together with the first two
    moments. By convention F^{-1}(0) = 0, so tail_value(1) == 0.
    """

    mean: float
    second_moment: float

    def tail_value(self, x):
        raise NotImplementedError

    def inv_cdf(self, u):
        """Generalized inverse F^{-1}(u) with F^{-1}(0) = 0."""
        return self.tail_value(1.0 - np.asarray(u, dtype=np.float64))

    def _validate_moments(self):
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError("first moment must be positive and finite")
        if not (self.second_moment > 0 and math.isfinite(self.second_moment)):
            raise ValueError("second moment must be positive and finite")


class PointMass(QuantileSpec):
    """All weight concentrated at a single value w0 > 0."""

    def __init__(self, w0=1.0):
        if w0 <= 0:
            raise ValueError("point mass location must be positive")
        self.w0 = float(w0)
        self.mean = self.w0
        self.second_moment = self.w0 * self.w0

    def tail_value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < 1.0, self.w0, 0.0)


class Pareto(QuantileSpec):
    """Pareto weights: F(x) = 1 - x^(-a) on [1, inf), a > 2.

    The shape must exceed 2 so the second moment E[W^2] = a/(a-2) is
    finite; tail_value(x) = x^(-1/a).
    """

    def __init__(self, a):
        if a <= 2:
            raise ValueError("Pareto shape must exceed 2 (finite second moment)")
        self.a = float(a)
        self.mean = self.a / (self.a - 1.0)
        self.second_moment = self.a / (self.a - 2.0)

    def tail_value(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            vals = np.power(x, -1.0 / self.a)
        return np.where(x < 1.0, vals, 0.0)


class Exponential(QuantileSpec):
    """Exponential weights with rate lam: tail_value(x) = -ln(x)/lam."""

    def __init__(self, lam):
        if lam <= 0:
            raise ValueError("rate must be positive")
        self.lam = float(lam)
        self.mean = 1.0 / self.lam
        self.second_moment = 2.0 / (self.lam * self.lam)

    def tail_value(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            vals = -np.log(x) / self.lam
        return np.where(x < 1.0, vals, 0.0)


class TabulatedInverse(QuantileSpec):
    """Step-interpolated table of (x, F^{-1}(1-x)) pairs.

    `knots` are ascending points in (0, 1]; `values` the non-increasing
    tail quantiles at those points. Between knots the value is held
    from the knot at or below x (the first value is used below the
    first knot); at x >= 1 the conventional zero applies regardless of
    the table. Moments must be supplied by the caller.
    """

    def __init__(self, knots, values, mean, second_moment):
        knots = np.asarray(knots, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size == 0:
            raise ValueError("knots and values must be matching 1-d arrays")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(knots <= 0) or np.any(knots > 1):
            raise ValueError("knots must lie in (0, 1]")
        if np.any(np.diff(values) > 0):
            raise ValueError("tail values must be non-increasing")
        if np.any(values < 0):
            raise ValueError("tail values must be non-negative")
        self.knots = knots
        self.values = values
        self.mean = float(mean)
        self.second_moment = float(second_moment)
        self._validate_moments()

    def tail_value(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.knots, x, side="right") - 1
        vals = self.values[np.clip(idx, 0, self.values.size - 1)]
        return np.where(x < 1.0, vals, 0.0)


def unit_masses(n):
    """The vector of n components all equal to one."""
    if n < 1:
        raise ValueError("need at least one component")
    return MassVector(np.ones(int(n)), n_label=int(n))


def generalized_er(n, thetas):
    """n unit masses plus one extra component per entry of `thetas`."""
    thetas = np.asarray(thetas, dtype=np.float64).ravel()
    if np.any(thetas <= 0):
        raise ValueError("perturbation masses must be positive")
    if n < 1:
        raise ValueError("need at least one unit component")
    return MassVector(np.concatenate([np.ones(int(n)), thetas]), n_label=int(n))


def quantile_masses(n, spec):
    """Deterministic quantile weights, normalized by the root of their sum.

    Computes w_i = F^{-1}(1 - i/n) for i in 1..n (so w_n = 0 by the
    F^{-1}(0) = 0 convention), l_n = sum(w), and returns the vector of
    z_i = w_i / sqrt(l_n) with zeros stripped.
    """
    if n < 2:
        raise ValueError("quantile construction needs n >= 2")
    w = np.asarray(spec.tail_value(np.arange(1, n + 1) / n), dtype=np.float64)
    l_n = _fsum(w)
    if l_n <= 0:
        raise ValueError("degenerate distribution: all quantile weights are zero")
    return MassVector(w / math.sqrt(l_n), n_label=int(n))


def limit_params_er(n):
    """Limit parameters of the homogeneous unit-mass family."""
    if n < 1:
        raise ValueError("need at least one component")
    return LimitParams(varkappa=float(n), varsigma=float(n), alpha=1.0, beta1=0.0, beta2=0.0)


def limit_params_general(summary, varkappa, varsigma, alpha, beta1=0.0, beta2=0.0):
    """Package user-supplied limit constants with finite-n diagnostics.

    The constants are analytic properties of the family being tested;
    alongside them the two discrepancies that converge to beta1 and
    beta2 are computed from the concrete vector summary and reported
    signed.

    Returns
    -------
    (LimitParams, FiniteSizeDiagnostics)
    """
    params = LimitParams(
        varkappa=float(varkappa),
        varsigma=float(varsigma),
        alpha=float(alpha),
        beta1=float(beta1),
        beta2=float(beta2),
    )
    root = math.sqrt(params.varkappa)
    ratio = summary.sigma1**2 / (params.varkappa * params.varsigma)
    diags = FiniteSizeDiagnostics(
        kappa_discrepancy=root * (summary.kappa / params.varkappa - 1.0),
        alpha_discrepancy=root * (ratio - params.alpha),
    )
    return params, diags


def write_mass_csv(mv, path):
    """One-column CSV of masses, header `mass`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mass"])
        for m in mv.masses:
            writer.writerow([repr(float(m))])


def read_mass_csv(path, n_label=None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["mass"]:
            raise ValueError(f"expected header ['mass'], got {header}")
        masses = [float(row[0]) for row in reader if row]
    return MassVector(masses, n_label=n_label)
