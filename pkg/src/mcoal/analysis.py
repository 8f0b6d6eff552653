"""Limit formulas, scaled processes, and the statistical test battery.

The normalized component count K(t/varsigma)/varkappa concentrates on
the affine fluid limit 1 - t*alpha/2 on sub-critical windows, and the
sqrt(varkappa)-scaled deviations converge to a drifted time-changed
Brownian motion beta1 - beta2*t/2 + B(alpha*t/2). The functions here
turn trajectory ensembles into those processes and decide, with
pinned tolerances, whether simulated data matches the limits.

Significance policy: family-wise level 0.01 with Bonferroni correction
across grid points; variance/covariance tolerances are relative and
sized for the rep counts of the standard runs.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .mass_vectors import QuantileSpec
from .oracles import KDistribution

__all__ = [
    "FAMILY_LEVEL",
    "FluctuationPath",
    "EnsembleSummary",
    "TestReport",
    "RiemannReport",
    "fluid_limit",
    "fluct_drift",
    "fluct_variance",
    "scale_trajectory",
    "ensemble_stats",
    "test_fluid",
    "test_gaussian_fluctuations",
    "second_moment_bound_check",
    "martingale_suite",
    "riemann_convergence",
    "empirical_k_distribution",
    "total_variation",
    "write_summary_csv",
]

FAMILY_LEVEL = 0.01


def fluid_limit(t, params):
    """Deterministic limit of the normalized count: 1 - t*alpha/2."""
    return 1.0 - np.asarray(t, dtype=np.float64) * params.alpha / 2.0


def fluct_drift(t, params):
    """Deterministic drift of the fluctuation limit: beta1 - beta2*t/2."""
    return params.beta1 - params.beta2 * np.asarray(t, dtype=np.float64) / 2.0


def fluct_variance(t, params):
    """Variance of the Brownian part at time t: alpha*t/2."""
    return params.alpha * np.asarray(t, dtype=np.float64) / 2.0


@dataclass
class FluctuationPath:
    """One trajectory's scaled deviation from the fluid limit.

    Z(t) = sqrt(varkappa) * (K(t/varsigma)/varkappa - (1 - t*alpha/2))
    on the rescaled-time grid.
    """

    grid: np.ndarray
    Z: np.ndarray


def scale_trajectory(traj, params, grid):
    """Normalized count and fluctuation path on a rescaled-time grid.

    `grid` lives in rescaled time; the trajectory is evaluated at
    grid/varsigma by right-continuous step lookup (full mode) or by
    matching the recorded grid (grid mode).

    Returns
    -------
    (scaled, FluctuationPath)
        `scaled` is K(t/varsigma)/varkappa per grid point.
    """
    grid = np.asarray(grid, dtype=np.float64).ravel()
    sim_times = grid / params.varsigma
    if traj.mode == "full":
        short = grid[sim_times > traj.t_max * (1 + 1e-12)]
        if short.size:
            raise ValueError(
                f"trajectory horizon {traj.t_max} too short for grid points {short.tolist()}"
            )
        k = traj.k_at(sim_times)
    else:
        pos = np.searchsorted(traj.grid_t, sim_times)
        pos = np.clip(pos, 0, traj.grid_t.size - 1)
        exact = np.isclose(traj.grid_t[pos], sim_times, rtol=1e-12, atol=1e-15)
        # a requested time may sit just left of its recorded match
        pos_alt = np.clip(pos - 1, 0, traj.grid_t.size - 1)
        alt = np.isclose(traj.grid_t[pos_alt], sim_times, rtol=1e-12, atol=1e-15)
        pos = np.where(exact, pos, pos_alt)
        if not np.all(exact | alt):
            missing = grid[~(exact | alt)]
            raise ValueError(f"recorded grid lacks the requested times {missing.tolist()}")
        k = traj.grid_k[pos]
    scaled = k / params.varkappa
    z = math.sqrt(params.varkappa) * (scaled - fluid_limit(grid, params))
    return scaled, FluctuationPath(grid=grid, Z=z)


@dataclass
class EnsembleSummary:
    """Per-grid-point Monte Carlo statistics of the fluctuation process."""

    grid: np.ndarray
    rep_count: int
    mean_scaled_k: np.ndarray
    mean_z: np.ndarray
    var_z: np.ndarray
    cov_z: np.ndarray
    se_mean_z: np.ndarray
    se_var_z: np.ndarray


def _stack_paths(paths):
    grid = paths[0].grid
    for p in paths[1:]:
        if p.grid.shape != grid.shape or not np.array_equal(p.grid, grid):
            raise ValueError("fluctuation paths live on mismatched grids")
    return grid, np.vstack([p.Z for p in paths])


def ensemble_stats(paths, params):
    """Mean/variance/covariance of the fluctuation ensemble.

    Needs at least two paths on a common grid. The mean of the
    normalized count is recovered exactly from the mean fluctuation:
    mean_scaled = fluid + mean_Z / sqrt(varkappa).
    """
    if len(paths) < 2:
        raise ValueError("ensemble statistics need at least two paths")
    grid, z = _stack_paths(paths)
    reps = z.shape[0]
    mean_z = z.mean(axis=0)
    var_z = z.var(axis=0, ddof=1)
    cov_z = np.cov(z, rowvar=False, ddof=1) if grid.size > 1 else var_z.reshape(1, 1)
    se_mean = np.sqrt(var_z / reps)
    # normal-theory standard error of a sample variance
    se_var = var_z * math.sqrt(2.0 / (reps - 1))
    mean_scaled = fluid_limit(grid, params) + mean_z / math.sqrt(params.varkappa)
    return EnsembleSummary(
        grid=grid,
        rep_count=reps,
        mean_scaled_k=mean_scaled,
        mean_z=mean_z,
        var_z=var_z,
        cov_z=np.atleast_2d(cov_z),
        se_mean_z=se_mean,
        se_var_z=se_var,
    )


@dataclass
class TestReport:
    """Outcome of one statistical verification.

    The verdict is decided purely by the declared tolerance; `details`
    carries the per-component numbers for inspection.
    """

    name: str
    statistic: float
    p_value: float | None
    tolerance: float
    verdict: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict in ("pass", "vacuous")

    def to_dict(self):
        return {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "details": self.details,
        }


def test_fluid(summary, params, abs_tol):
    """Check the ensemble mean of the normalized count against the fluid limit.

    Passes iff the sup-norm deviation over the grid is at most
    `abs_tol` and every pointwise deviation is within three standard
    errors of the mean.
    """
    fluid = fluid_limit(summary.grid, params)
    dev = np.abs(summary.mean_scaled_k - fluid)
    se_scaled = summary.se_mean_z / math.sqrt(params.varkappa)
    sup_dev = float(dev.max()) if dev.size else 0.0
    within_band = bool(np.all(dev <= 3.0 * se_scaled + 1e-300))
    ok = sup_dev <= abs_tol and within_band
    return TestReport(
        name="fluid_limit",
        statistic=sup_dev,
        p_value=None,
        tolerance=abs_tol,
        verdict="pass" if ok else "fail",
        details={
            "grid": summary.grid.tolist(),
            "deviation": dev.tolist(),
            "three_se": (3.0 * se_scaled).tolist(),
            "within_3se": within_band,
        },
    )


def test_gaussian_fluctuations(
    summary,
    z_samples,
    params,
    family_level=FAMILY_LEVEL,
    var_rel_tol=0.15,
    cov_rel_tol=0.20,
    incr_corr_tol=0.10,
):
    """Composite check of the Brownian fluctuation limit.

    (a) marginal normality: Kolmogorov-Smirnov of Z(t) - drift(t)
        against N(0, alpha*t/2) per grid point, Bonferroni-corrected
        to the family level;
    (b) variance ratios |Var Z(t)/(alpha*t/2) - 1| <= var_rel_tol;
    (c) covariances |Cov(Z(s),Z(t)) - alpha*s/2| <= cov_rel_tol * alpha*s/2
        for s < t;
    (d) increment independence: |Corr(Z(s), Z(t)-Z(s))| <= incr_corr_tol.

    Grid points at t = 0 are excluded from (a) and (b); requires at
    least 500 replications.
    """
    z = np.asarray(z_samples, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != summary.grid.size:
        raise ValueError("z_samples must be (reps, grid) shaped")
    if z.shape[0] < 500:
        raise ValueError("gaussian fluctuation test needs rep_count >= 500")
    grid = summary.grid
    positive = grid > 0
    n_pos = int(positive.sum())

    details = {}
    # (a) marginal normality
    level = family_level / max(n_pos, 1)
    p_values = {}
    for g in np.nonzero(positive)[0]:
        t = grid[g]
        sd = math.sqrt(fluct_variance(t, params))
        centered = z[:, g] - fluct_drift(t, params)
        res = scipy.stats.kstest(centered, "norm", args=(0.0, sd))
        p_values[float(t)] = float(res.pvalue)
    ks_ok = all(p >= level for p in p_values.values())
    min_p = min(p_values.values()) if p_values else 1.0
    details["ks"] = {"p_values": p_values, "per_test_level": level, "ok": ks_ok}

    # (b) variance ratios
    theory_var = fluct_variance(grid, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_dev = np.abs(summary.var_z / theory_var - 1.0)
    var_ok = bool(np.all(ratio_dev[positive] <= var_rel_tol))
    details["variance"] = {
        "ratio_deviation": ratio_dev[positive].tolist(),
        "tolerance": var_rel_tol,
        "ok": var_ok,
    }

    # (c) covariance structure
    cov_ok = True
    worst_cov = 0.0
    for a in range(grid.size):
        for b in range(a + 1, grid.size):
            s = grid[a]
            if s <= 0:
                continue
            target = fluct_variance(s, params)
            rel = abs(summary.cov_z[a, b] - target) / target
            worst_cov = max(worst_cov, rel)
            if rel > cov_rel_tol:
                cov_ok = False
    details["covariance"] = {"worst_relative": worst_cov, "tolerance": cov_rel_tol, "ok": cov_ok}

    # (d) increment decorrelation
    incr_ok = True
    worst_corr = 0.0
    for a in range(grid.size):
        for b in range(a + 1, grid.size):
            za = z[:, a]
            incr = z[:, b] - z[:, a]
            if za.std() == 0 or incr.std() == 0:
                continue
            corr = float(np.corrcoef(za, incr)[0, 1])
            worst_corr = max(worst_corr, abs(corr))
            if abs(corr) > incr_corr_tol:
                incr_ok = False
    details["increments"] = {"worst_abs_corr": worst_corr, "tolerance": incr_corr_tol, "ok": incr_ok}

    ok = ks_ok and var_ok and cov_ok and incr_ok
    return TestReport(
        name="gaussian_fluctuations",
        statistic=float(min_p),
        p_value=float(min_p),
        tolerance=level,
        verdict="pass" if ok else "fail",
        details=details,
    )


# library operations, not pytest cases, despite the test_ prefix
test_fluid.__test__ = False
test_gaussian_fluctuations.__test__ = False


def second_moment_bound_check(trajectories, mv, grid):
    """Empirical check of the moment bound E[S2(t)] <= sigma2/(1 - t*sigma2).

    Valid only on grids strictly below 1/sigma2; an empty grid makes
    the check vacuous. Passes iff at every grid point the empirical
    mean is at most bound * (1 + 3 * relative standard error).
    """
    sigma2 = mv.summary().sigma2
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if np.any(grid >= 1.0 / sigma2):
        bad = grid[grid >= 1.0 / sigma2]
        raise ValueError(f"grid points at or beyond 1/sigma2 = {1.0 / sigma2}: {bad.tolist()}")
    if grid.size == 0:
        return TestReport(
            name="second_moment_bound",
            statistic=0.0,
            p_value=None,
            tolerance=0.0,
            verdict="vacuous",
            details={"reason": "empty grid below 1/sigma2"},
        )
    s2_matrix = np.vstack([traj.s2_at(grid) for traj in trajectories])
    reps = s2_matrix.shape[0]
    mean = s2_matrix.mean(axis=0)
    se = s2_matrix.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros_like(mean)
    bound = sigma2 / (1.0 - grid * sigma2)
    allowance = bound * (1.0 + 3.0 * se / mean)
    ok = bool(np.all(mean <= allowance))
    stat = float(np.max(mean / bound))
    return TestReport(
        name="second_moment_bound",
        statistic=stat,
        p_value=None,
        tolerance=1.0,
        verdict="pass" if ok else "fail",
        details={
            "grid": grid.tolist(),
            "mean_s2": mean.tolist(),
            "bound": bound.tolist(),
            "allowance": allowance.tolist(),
        },
    )


def martingale_suite(paths, grid):
    """Three ensemble checks of the compensated count.

    At every grid time: the mean of M is within 3 SE of zero; the
    variance of M agrees with the mean of <M> within 3 SE (tested as
    the paired statistic M^2 - <M>); and the quadratic variation
    equals the number of merges, kappa - K, exactly on every path.
    """
    grid = np.asarray(grid, dtype=np.float64).ravel()
    reps = len(paths)
    if reps < 2:
        raise ValueError("martingale suite needs at least two paths")
    kappa = paths[0].initial_count
    m_mat = np.empty((reps, grid.size))
    a_mat = np.empty((reps, grid.size))
    bracket_exact = True
    for r, path in enumerate(paths):
        m, a, b, k = path.at(grid)
        m_mat[r] = m
        a_mat[r] = a
        if not np.array_equal(b, kappa - k):
            bracket_exact = False
    mean_m = m_mat.mean(axis=0)
    se_m = m_mat.std(axis=0, ddof=1) / math.sqrt(reps)
    mean_ok = bool(np.all(np.abs(mean_m) <= 3.0 * se_m + 1e-300))

    paired = m_mat**2 - a_mat
    mean_paired = paired.mean(axis=0)
    se_paired = paired.std(axis=0, ddof=1) / math.sqrt(reps)
    var_ok = bool(np.all(np.abs(mean_paired) <= 3.0 * se_paired + 1e-300))

    ok = mean_ok and var_ok and bracket_exact
    worst_mean = float(np.max(np.abs(mean_m) / np.where(se_m > 0, se_m, 1.0)))
    return TestReport(
        name="martingale_suite",
        statistic=worst_mean,
        p_value=None,
        tolerance=3.0,
        verdict="pass" if ok else "fail",
        details={
            "grid": grid.tolist(),
            "mean_M": mean_m.tolist(),
            "se_M": se_m.tolist(),
            "var_M": m_mat.var(axis=0, ddof=1).tolist(),
            "mean_angle": a_mat.mean(axis=0).tolist(),
            "mean_zero_ok": mean_ok,
            "variance_identity_ok": var_ok,
            "bracket_exact": bracket_exact,
        },
    )


@dataclass
class RiemannReport:
    """Convergence table for midpoint-free Riemann sums of a monotone tail."""

    rows: list
    report: TestReport


def riemann_convergence(phi, n_grid, integral=None, power=1):
    """Scaled Riemann-sum error e_n = sqrt(n) |I - S_n| over a grid of n.

    S_n = (1/n) sum_{k=1..n} phi(k/n) for a non-increasing phi on
    (0, 1] with finite integral I. A QuantileSpec may be passed
    directly: phi is then its tail quantile raised to `power` and the
    integral defaults to the matching moment. The verdict requires e_n
    to decrease along `n_grid` with the final value below a third of
    the first.
    """
    if isinstance(phi, QuantileSpec):
        spec = phi
        if power == 1:
            integral = spec.mean if integral is None else integral
            phi = spec.tail_value
        elif power == 2:
            integral = spec.second_moment if integral is None else integral
            phi = lambda x: spec.tail_value(x) ** 2
        else:
            raise ValueError("power must be 1 or 2 for a QuantileSpec")
    if integral is None:
        raise ValueError("explicit phi needs its analytic integral")
    rows = []
    for n in n_grid:
        x = np.arange(1, n + 1) / n
        vals = np.asarray(phi(x), dtype=np.float64)
        diffs = np.diff(vals)
        if np.any(diffs > 1e-12 * max(1.0, float(np.abs(vals).max()))):
            raise ValueError("phi increases on sample points; need a non-increasing integrand")
        s_n = math.fsum(vals.tolist()) / n
        e_n = math.sqrt(n) * abs(integral - s_n)
        rows.append((int(n), s_n, e_n))
    errors = [r[2] for r in rows]
    # exact quadratures sit at zero; only positive errors must shrink
    decreasing = all(b < a or a == b == 0.0 for a, b in zip(errors, errors[1:]))
    ratio_ok = errors[-1] < errors[0] / 3.0 if errors[0] > 0 else errors[-1] == 0.0
    ok = decreasing and ratio_ok
    report = TestReport(
        name="riemann_convergence",
        statistic=errors[-1],
        p_value=None,
        tolerance=errors[0] / 3.0 if errors[0] > 0 else 0.0,
        verdict="pass" if ok else "fail",
        details={"rows": rows, "decreasing": decreasing},
    )
    return RiemannReport(rows=rows, report=report)


def empirical_k_distribution(samples, kappa, t):
    """Empirical law of the component count from integer samples."""
    samples = np.asarray(samples)
    counts = np.bincount(samples, minlength=kappa + 1)[1 : kappa + 1]
    return KDistribution(t=float(t), probs=counts / samples.size)


def total_variation(dist_a, dist_b):
    """Total-variation distance between two component-count laws."""
    pa = dist_a.probs if isinstance(dist_a, KDistribution) else np.asarray(dist_a)
    pb = dist_b.probs if isinstance(dist_b, KDistribution) else np.asarray(dist_b)
    if pa.shape != pb.shape:
        raise ValueError("distributions live on different supports")
    return 0.5 * float(np.abs(pa - pb).sum())


def write_summary_csv(summary, params, path):
    """Ensemble summary table: t,mean_scaled_K,fluid,mean_Z,var_Z,se_mean,se_var."""
    fluid = fluid_limit(summary.grid, params)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mean_scaled_K", "fluid", "mean_Z", "var_Z", "se_mean", "se_var"])
        for g in range(summary.grid.size):
            writer.writerow(
                [
                    repr(float(summary.grid[g])),
                    repr(float(summary.mean_scaled_k[g])),
                    repr(float(fluid[g])),
                    repr(float(summary.mean_z[g])),
                    repr(float(summary.var_z[g])),
                    repr(float(summary.se_mean_z[g])),
                    repr(float(summary.se_var_z[g])),
                ]
            )
