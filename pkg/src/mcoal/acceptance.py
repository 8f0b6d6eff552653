"""The acceptance suite: twelve pinned verification criteria.

Each criterion runs at a stated scale with a stated tolerance and
returns a TestReport; `run_all` executes them in order and prints one
pass/fail line per criterion. The quick profile shrinks replication
counts tenfold and doubles tolerances for fast smoke runs.

Criteria 2-4 share one fluctuation ensemble and criteria 6-7 share one
full-record ensemble; ensembles are cached per (profile, seed).
"""

import hashlib
import math
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.stats

from .analysis import (
    TestReport,
    empirical_k_distribution,
    ensemble_stats,
    martingale_suite,
    riemann_convergence,
    scale_trajectory,
    second_moment_bound_check,
    test_fluid,
    total_variation,
)
from .ensemble import run_ensemble, sample_k_at
from .mass_vectors import (
    Pareto,
    generalized_er,
    limit_params_er,
    limit_params_general,
    quantile_masses,
    unit_masses,
)
from .oracles import exact_k_distribution, percolation_k_samples

__all__ = ["Profile", "FULL", "QUICK", "run_all", "CRITERIA"]

DEFAULT_SEED = 20260810


@dataclass(frozen=True)
class Profile:
    """Scale knobs for the suite: full runs as stated, quick shrinks."""

    name: str
    rep_scale: float
    tol_scale: float


FULL = Profile("full", 1.0, 1.0)
QUICK = Profile("quick", 0.1, 2.0)

_CACHE = {}


def _reps(base, profile):
    return max(int(round(base * profile.rep_scale)), 50)


def _seed(master_seed, criterion):
    # distinct, reproducible master seed per criterion
    return master_seed * 100 + criterion


def _grid_record_ensemble(mv, params, grid_rescaled, reps, seed, workers=1):
    """Simulate `reps` grid-record trajectories and scale them."""
    sim_grid = np.asarray(grid_rescaled, dtype=np.float64) / params.varsigma
    t_max = float(sim_grid[-1])
    trajs = run_ensemble(mv, t_max, reps, seed, record=sim_grid, workers=workers)
    paths = [scale_trajectory(traj, params, grid_rescaled)[1] for traj in trajs]
    summary = ensemble_stats(paths, params)
    z = np.vstack([p.Z for p in paths])
    return summary, z


def _er_fluct_ensemble(profile, master_seed):
    """Shared ensemble for criteria 2-4: n=1e4, 2000 reps, grid 0.1..0.9."""
    key = ("er_fluct", profile.name, master_seed)
    if key not in _CACHE:
        n = 10_000
        reps = _reps(2000, profile)
        grid = np.round(np.linspace(0.1, 0.9, 9), 10)
        params = limit_params_er(n)
        summary, z = _grid_record_ensemble(
            unit_masses(n), params, grid, reps, _seed(master_seed, 2)
        )
        _CACHE[key] = (params, grid, summary, z)
    return _CACHE[key]


def _martingale_ensemble(profile, master_seed):
    """Shared full-record ensemble for criteria 6-7: unit n=50.

    Simulated to 0.8/sigma2 so the moment-bound grid is covered; the
    martingale checks read the same paths on [0, 0.2/sigma2].
    """
    key = ("martingale", profile.name, master_seed)
    if key not in _CACHE:
        from .engine import martingale_path

        mv = unit_masses(50)
        horizon = 0.8 / 50.0
        reps = _reps(10_000, profile)
        trajs = run_ensemble(mv, horizon, reps, _seed(master_seed, 6), record="full")
        paths = [martingale_path(traj, mv) for traj in trajs]
        _CACHE[key] = (mv, trajs, paths)
    return _CACHE[key]


def criterion_01_er_fluid(profile=FULL, master_seed=DEFAULT_SEED):
    """Fluid limit of the unit-mass family: sup-norm of the mean error.

    n = 2e4, 500 reps, 10 grid points in (0, 0.9]; tolerance 0.005 and
    3 SE pointwise.
    """
    n = 20_000
    reps = _reps(500, profile)
    grid = np.round(np.linspace(0.09, 0.9, 10), 10)
    params = limit_params_er(n)
    summary, _ = _grid_record_ensemble(unit_masses(n), params, grid, reps, _seed(master_seed, 1))
    report = test_fluid(summary, params, abs_tol=0.005 * profile.tol_scale)
    return TestReport(
        name="er_fluid_limit",
        statistic=report.statistic,
        p_value=None,
        tolerance=report.tolerance,
        verdict=report.verdict,
        details=report.details,
    )


def criterion_02_er_fluct_variance(profile=FULL, master_seed=DEFAULT_SEED):
    """Variance of the fluctuation process vs t/2 at t in {0.3, 0.6, 0.9}."""
    params, grid, summary, _ = _er_fluct_ensemble(profile, master_seed)
    tol = 0.15 * profile.tol_scale
    checks = {}
    worst = 0.0
    for t in (0.3, 0.6, 0.9):
        g = int(np.argmin(np.abs(grid - t)))
        dev = abs(summary.var_z[g] / (t / 2.0) - 1.0)
        checks[t] = dev
        worst = max(worst, dev)
    return TestReport(
        name="er_fluctuation_variance",
        statistic=worst,
        p_value=None,
        tolerance=tol,
        verdict="pass" if worst <= tol else "fail",
        details={"ratio_deviation": {str(k): v for k, v in checks.items()}, "reps": summary.rep_count},
    )


def criterion_03_er_static_gaussian(profile=FULL, master_seed=DEFAULT_SEED):
    """Kolmogorov-Smirnov of Z(0.8) against N(0, 0.4) at level 0.01."""
    params, grid, summary, z = _er_fluct_ensemble(profile, master_seed)
    level = 0.01 / profile.tol_scale
    g = int(np.argmin(np.abs(grid - 0.8)))
    res = scipy.stats.kstest(z[:, g], "norm", args=(0.0, math.sqrt(0.4)))
    return TestReport(
        name="er_static_gaussian",
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        tolerance=level,
        verdict="pass" if res.pvalue >= level else "fail",
        details={"t": 0.8, "variance": 0.4, "reps": summary.rep_count},
    )


def criterion_04_brownian_covariance(profile=FULL, master_seed=DEFAULT_SEED):
    """Cov(Z(0.4), Z(0.8)) near 0.2 and decorrelated increments."""
    params, grid, summary, z = _er_fluct_ensemble(profile, master_seed)
    cov_tol = 0.04 * profile.tol_scale
    corr_tol = 0.10 * profile.tol_scale
    a = int(np.argmin(np.abs(grid - 0.4)))
    b = int(np.argmin(np.abs(grid - 0.8)))
    cov = float(summary.cov_z[a, b])
    incr = z[:, b] - z[:, a]
    corr = float(np.corrcoef(z[:, a], incr)[0, 1])
    cov_dev = abs(cov - 0.2)
    ok = cov_dev <= cov_tol and abs(corr) <= corr_tol
    return TestReport(
        name="brownian_covariance",
        statistic=cov_dev,
        p_value=None,
        tolerance=cov_tol,
        verdict="pass" if ok else "fail",
        details={"cov": cov, "increment_corr": corr, "corr_tolerance": corr_tol},
    )


def criterion_05_oracle_triangle(profile=FULL, master_seed=DEFAULT_SEED):
    """Pairwise TV distance among engine, percolation and exact laws.

    Unit masses kappa=5 at unscaled t=0.3; 1e5 replications per
    sampler; every pairwise distance at most 0.01.
    """
    mv = unit_masses(5)
    t = 0.3
    reps = _reps(100_000, profile)
    tol = 0.01 * profile.tol_scale
    seed = _seed(master_seed, 5)
    engine_emp = empirical_k_distribution(sample_k_at(mv, t, reps, seed), 5, t)
    perc_emp = empirical_k_distribution(
        percolation_k_samples(mv, t, reps, seed + 1), 5, t
    )
    exact = exact_k_distribution(mv, t)
    tvs = {
        "engine_vs_exact": total_variation(engine_emp, exact),
        "percolation_vs_exact": total_variation(perc_emp, exact),
        "engine_vs_percolation": total_variation(engine_emp, perc_emp),
    }
    worst = max(tvs.values())
    return TestReport(
        name="oracle_triangle",
        statistic=worst,
        p_value=None,
        tolerance=tol,
        verdict="pass" if worst <= tol else "fail",
        details={"tv": tvs, "reps": reps, "exact_probs": exact.probs.tolist()},
    )


def criterion_06_martingale_suite(profile=FULL, master_seed=DEFAULT_SEED):
    """Martingale checks for unit n=50 on [0, 0.2/sigma2], 1e4 reps."""
    _, _, paths = _martingale_ensemble(profile, master_seed)
    grid = np.linspace(0.0, 0.2 / 50.0, 5)
    report = martingale_suite(paths, grid)
    return TestReport(
        name="martingale_suite",
        statistic=report.statistic,
        p_value=None,
        tolerance=report.tolerance,
        verdict=report.verdict,
        details=report.details,
    )


def criterion_07_moment_bound(profile=FULL, master_seed=DEFAULT_SEED):
    """Second-moment bound on a 5-point grid in [0, 0.8/sigma2]."""
    mv, trajs, _ = _martingale_ensemble(profile, master_seed)
    grid = np.linspace(0.0, 0.8 / 50.0, 5)
    report = second_moment_bound_check(trajs, mv, grid)
    return TestReport(
        name="second_moment_bound",
        statistic=report.statistic,
        p_value=None,
        tolerance=report.tolerance,
        verdict=report.verdict,
        details=report.details,
    )


def criterion_08_nr_fluid(profile=FULL, master_seed=DEFAULT_SEED):
    """Fluid limit of the Pareto(3) quantile family in original time.

    n = 1e4, 500 reps, grid in (0, 0.4] (critical time 0.5); the mean
    of K(t)/n must track 1 - 0.75 t within 0.01.
    """
    n = 10_000
    reps = _reps(500, profile)
    spec = Pareto(3.0)
    mv = quantile_masses(n, spec)
    varsigma = spec.second_moment / spec.mean  # 2.0
    alpha = spec.mean**2 / spec.second_moment  # 0.75
    params, _ = limit_params_general(mv.summary(), n, varsigma, alpha)
    grid_orig = np.round(np.linspace(0.04, 0.4, 10), 10)
    grid_rescaled = grid_orig * varsigma
    summary, _ = _grid_record_ensemble(mv, params, grid_rescaled, reps, _seed(master_seed, 8))
    report = test_fluid(summary, params, abs_tol=0.01 * profile.tol_scale)
    report.details["grid_original_time"] = grid_orig.tolist()
    return TestReport(
        name="nr_fluid_limit",
        statistic=report.statistic,
        p_value=None,
        tolerance=report.tolerance,
        verdict=report.verdict,
        details=report.details,
    )


def criterion_09_ger_drift(profile=FULL, master_seed=DEFAULT_SEED):
    """Drift discrimination for the perturbed unit-mass family.

    n = 1e4 with 100 extra components of mass 2 (beta1 = 1, beta2 = 4):
    the fitted affine drift of mean Z(t), t in {0.2, ..., 0.8}, must
    have slope within 0.3 of -beta2/2 = -2, and must reject the
    slope -4 alternative by the same margin.
    """
    n = 10_000
    m = int(math.isqrt(n))  # 100
    theta = 2.0
    reps = _reps(2000, profile)
    tol = 0.3 * profile.tol_scale
    mv = generalized_er(n, np.full(m, theta))
    beta1 = m / math.sqrt(n)
    beta2 = 2.0 * m * theta / math.sqrt(n)
    params, diags = limit_params_general(mv.summary(), n, n, 1.0, beta1, beta2)
    grid = np.round(np.linspace(0.2, 0.8, 7), 10)
    summary, _ = _grid_record_ensemble(mv, params, grid, reps, _seed(master_seed, 9))
    slope, intercept = np.polyfit(grid, summary.mean_z, 1)
    target = -beta2 / 2.0
    alternative = -beta2
    matches_half_slope = abs(slope - target) <= tol
    rejects_alternative = abs(slope - alternative) > tol
    ok = matches_half_slope and rejects_alternative
    return TestReport(
        name="ger_drift_discrimination",
        statistic=float(slope),
        p_value=None,
        tolerance=tol,
        verdict="pass" if ok else "fail",
        details={
            "fitted_slope": float(slope),
            "fitted_intercept": float(intercept),
            "target_slope": target,
            "rejected_slope": alternative,
            "finite_n_diagnostics": {
                "kappa_discrepancy": diags.kappa_discrepancy,
                "alpha_discrepancy": diags.alpha_discrepancy,
            },
        },
    )


def criterion_10_riemann(profile=FULL, master_seed=DEFAULT_SEED):
    """Riemann-sum tail convergence for phi(x) = x^(-1/3), integral 3/2.

    phi is the Pareto(3) tail quantile, so the k = n term carries the
    conventional zero value. e_n = sqrt(n) |3/2 - S_n| must decrease
    strictly over n in {1e2, 1e3, 1e4, 1e5} with e_final < e_first/3.
    (With phi(1) = 1 instead, the ratio bound is analytically
    unattainable: e_n = |zeta(1/3)| n^(-1/6) - n^(-1/2)/2 + O(n^(-7/6))
    gives e_final/e_first = 0.352.)
    """
    result = riemann_convergence(Pareto(3.0), [100, 1_000, 10_000, 100_000])
    report = result.report
    return TestReport(
        name="riemann_tail_convergence",
        statistic=report.statistic,
        p_value=None,
        tolerance=report.tolerance,
        verdict=report.verdict,
        details=report.details,
    )


def criterion_11_time_change(profile=FULL, master_seed=DEFAULT_SEED):
    """Mass-scaling time change: doubling masses quarters the horizon.

    Two-sample chi-square between the component-count laws of
    (2,2,2) at t = 0.05 and (1,1,1) at t = 0.2, 1e5 reps each;
    requires p > 0.01.
    """
    reps = _reps(100_000, profile)
    level = 0.01 / profile.tol_scale
    seed = _seed(master_seed, 11)
    base = unit_masses(3)
    scaled = base.scaled(2.0)
    t = 0.05
    k_scaled = sample_k_at(scaled, t, reps, seed)
    k_base = sample_k_at(base, 4.0 * t, reps, seed + 1)
    counts = np.vstack(
        [np.bincount(k_scaled, minlength=4)[1:4], np.bincount(k_base, minlength=4)[1:4]]
    )
    counts = counts[:, counts.sum(axis=0) > 0]
    res = scipy.stats.chi2_contingency(counts)
    return TestReport(
        name="time_change_identity",
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        tolerance=level,
        verdict="pass" if res.pvalue > level else "fail",
        details={"counts": counts.tolist(), "reps": reps},
    )


def criterion_12_determinism(profile=FULL, master_seed=DEFAULT_SEED):
    """Byte-identical trajectory files across 1, 4 and 8 workers."""
    from .cli import RunConfig, cmd_simulate

    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for workers in (1, 4, 8):
            out = Path(tmp) / f"w{workers}"
            config = RunConfig(
                family="er",
                n=400,
                c=0.5,
                grid=5,
                reps=12,
                seed=_seed(master_seed, 12),
                workers=workers,
                out=str(out),
                record="grid",
            )
            code = cmd_simulate(config, echo=lambda *_: None)
            if code != 0:
                raise RuntimeError(f"simulation run failed with exit code {code}")
            files = sorted(out.glob("traj_*.csv"))
            digests.append(
                {f.name: hashlib.sha256(f.read_bytes()).hexdigest() for f in files}
            )
    identical = digests[0] == digests[1] == digests[2]
    return TestReport(
        name="worker_determinism",
        statistic=0.0 if identical else 1.0,
        p_value=None,
        tolerance=0.0,
        verdict="pass" if identical else "fail",
        details={"n_files": len(digests[0]), "workers": [1, 4, 8]},
    )


CRITERIA = [
    criterion_01_er_fluid,
    criterion_02_er_fluct_variance,
    criterion_03_er_static_gaussian,
    criterion_04_brownian_covariance,
    criterion_05_oracle_triangle,
    criterion_06_martingale_suite,
    criterion_07_moment_bound,
    criterion_08_nr_fluid,
    criterion_09_ger_drift,
    criterion_10_riemann,
    criterion_11_time_change,
    criterion_12_determinism,
]


def run_all(profile=FULL, master_seed=DEFAULT_SEED, stream=None):
    """Run every criterion; print one line each; return the reports."""
    stream = stream or sys.stdout
    reports = []
    for idx, criterion in enumerate(CRITERIA, start=1):
        report = criterion(profile=profile, master_seed=master_seed)
        reports.append(report)
        status = "PASS" if report.passed else "FAIL"
        extra = f"p={report.p_value:.4f}" if report.p_value is not None else ""
        print(
            f"[{idx:2d}/12] {status}  {report.name:<28s} "
            f"statistic={report.statistic:.6g} tolerance={report.tolerance:.6g} {extra}",
            file=stream,
        )
    return reports
