"""Command-line orchestration: generate, simulate, analyze, oracle, verify.

Runs are described by a flat key=value config (file and/or flags;
flags win) and leave plain-file artifacts: per-trajectory CSVs plus a
JSON manifest binding them to the config hash. `analyze` refuses
trajectory directories whose hash does not match, so ensembles cannot
be scored against the wrong limit parameters.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O
error.
"""

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .engine import read_trajectory_csv, simulate, write_trajectory_csv
from .ensemble import run_ensemble, trajectory_seed
from .mass_vectors import (
    Exponential,
    Pareto,
    PointMass,
    generalized_er,
    limit_params_er,
    limit_params_general,
    quantile_masses,
    unit_masses,
    write_mass_csv,
)
from .oracles import exact_k_distribution, percolation_k_samples

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_IO = 3

_HASH_FIELDS = ("family", "n", "m", "theta", "dist", "a", "lam", "w0", "c", "grid", "reps", "seed", "record")


@dataclass
class RunConfig:
    """Flat run description; every field is expressible as a CLI flag."""

    family: str = "er"
    n: int = 1000
    m: int = 0
    theta: float = 2.0
    dist: str = "pareto"
    a: float = 3.0
    lam: float = 1.0
    w0: float = 1.0
    c: float = 0.9
    grid: int = 10
    reps: int = 1
    seed: int = 0
    workers: int = 0  # 0 = use available parallelism
    out: str = "runs"
    record: str = "grid"
    allow_critical: bool = False

    def validate(self):
        if self.family not in ("er", "ger", "nr"):
            raise ValueError(f"unknown family {self.family!r} (choose er, ger or nr)")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.grid < 1:
            raise ValueError("grid size must be at least 1")
        if self.record not in ("full", "grid"):
            raise ValueError("record must be 'full' or 'grid'")
        if self.workers < 0:
            raise ValueError("workers must be non-negative (0 = auto)")
        if self.c <= 0:
            raise ValueError("horizon constant c must be positive")
        if self.c >= 1.0 and not self.allow_critical:
            raise ValueError(
                f"c = {self.c} leaves the sub-critical window [0, 1); "
                "pass --allow-critical to simulate anyway"
            )
        if self.family == "ger" and self.m < 0:
            raise ValueError("m must be non-negative")
        return self

    def weight_spec(self):
        if self.dist == "pareto":
            return Pareto(self.a)
        if self.dist == "exponential":
            return Exponential(self.lam)
        if self.dist == "pointmass":
            return PointMass(self.w0)
        raise ValueError(f"unknown distribution {self.dist!r}")

    def mass_vector(self):
        if self.family == "er":
            return unit_masses(self.n)
        if self.family == "ger":
            return generalized_er(self.n, np.full(self.m, self.theta))
        return quantile_masses(self.n, self.weight_spec())

    def limit_params(self):
        """(LimitParams, FiniteSizeDiagnostics or None) for the family."""
        if self.family == "er":
            return limit_params_er(self.n), None
        summary = self.mass_vector().summary()
        if self.family == "ger":
            beta1 = self.m / math.sqrt(self.n)
            beta2 = 2.0 * self.m * self.theta / math.sqrt(self.n)
            return limit_params_general(summary, self.n, self.n, 1.0, beta1, beta2)
        spec = self.weight_spec()
        varsigma = spec.second_moment / spec.mean
        alpha = spec.mean**2 / spec.second_moment
        return limit_params_general(summary, self.n, varsigma, alpha)

    def rescaled_grid(self):
        return np.linspace(self.c / self.grid, self.c, self.grid)

    def sim_horizon(self):
        params, _ = self.limit_params()
        return self.c / params.varsigma

    def flat_text(self):
        lines = [f"{name} = {getattr(self, name)}" for name in _HASH_FIELDS]
        return "\n".join(lines) + "\n"

    def config_hash(self):
        return hashlib.sha256(self.flat_text().encode()).hexdigest()

    @classmethod
    def from_flat_text(cls, text):
        # stored configs already passed the criticality gate at
        # simulation time, so loading one never re-blocks on c >= 1
        values = _parse_flat(text)
        values.setdefault("allow_critical", True)
        return cls(**values).validate()


def _parse_flat(text):
    field_types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in field_types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        kind = field_types[key]
        if kind == "bool" or kind is bool:
            values[key] = val.lower() in ("1", "true", "yes", "on")
        elif kind == "int" or kind is int:
            values[key] = int(val)
        elif kind == "float" or kind is float:
            values[key] = float(val)
        else:
            values[key] = val
    return values


def build_config(args):
    """Defaults, then config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(_parse_flat(Path(args.config).read_text()))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values).validate()


def cmd_generate(config, echo=print):
    """Write the mass vector CSV and its summary/params JSON."""
    mv = config.mass_vector()
    summary = mv.summary()
    params, diags = config.limit_params()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_mass_csv(mv, out / "masses.csv")
    payload = {
        "family": config.family,
        "config": config.flat_text(),
        "config_hash": config.config_hash(),
        "sigma1": summary.sigma1,
        "sigma2": summary.sigma2,
        "kappa": summary.kappa,
        "limit_params": {
            "varkappa": params.varkappa,
            "varsigma": params.varsigma,
            "alpha": params.alpha,
            "beta1": params.beta1,
            "beta2": params.beta2,
        },
    }
    if diags is not None:
        payload["finite_n_diagnostics"] = {
            "kappa_discrepancy": diags.kappa_discrepancy,
            "alpha_discrepancy": diags.alpha_discrepancy,
        }
    (out / "summary.json").write_text(json.dumps(payload, indent=2))
    echo(f"wrote {out / 'masses.csv'} (kappa={summary.kappa}) and {out / 'summary.json'}")
    return EXIT_OK


def cmd_simulate(config, echo=print):
    """Run the ensemble and persist trajectories plus the manifest."""
    mv = config.mass_vector()
    t_max = config.sim_horizon()
    record = "full" if config.record == "full" else config.rescaled_grid() / config.limit_params()[0].varsigma
    started = time.time()
    trajectories = run_ensemble(
        mv, t_max, config.reps, config.seed, record=record, workers=config.workers or None
    )
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for r, traj in enumerate(trajectories):
        name = f"traj_{r:05d}.csv"
        write_trajectory_csv(traj, out / name)
        files.append(name)
    manifest = {
        "version": __version__,
        "config": config.flat_text(),
        "config_hash": config.config_hash(),
        "t_max": t_max,
        "sim_grid": None if config.record == "full" else record.tolist(),
        "master_seed": config.seed,
        "trajectory_seeds": [
            {"entropy": config.seed, "spawn_key": list(trajectory_seed(config.seed, r).spawn_key)}
            for r in range(config.reps)
        ],
        "wall_clock_s": time.time() - started,
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    echo(f"wrote {len(files)} trajectories and manifest to {out}")
    return EXIT_OK


def _load_run(traj_dir):
    out = Path(traj_dir)
    manifest_path = out / "manifest.json"
    if not out.is_dir() or not manifest_path.exists():
        raise FileNotFoundError(f"no run manifest found in {traj_dir!r}")
    manifest = json.loads(manifest_path.read_text())
    config = RunConfig.from_flat_text(manifest["config"])
    if config.config_hash() != manifest["config_hash"]:
        raise ValueError("manifest config hash mismatch; refusing to analyze")
    if not manifest["files"]:
        raise FileNotFoundError(f"manifest in {traj_dir!r} lists no trajectory files")
    return manifest, config


def cmd_analyze(args, echo=print):
    """Score a stored ensemble against its family's limits."""
    manifest, config = _load_run(args.traj_dir)
    for name in _HASH_FIELDS:
        override = getattr(args, name, None)
        if override is not None and override != getattr(config, name):
            raise ValueError(
                f"flag --{name}={override} conflicts with the run's config "
                f"({name}={getattr(config, name)}); refusing to analyze"
            )
    mv = config.mass_vector()
    summary0 = mv.summary()
    params, _ = config.limit_params()
    out = Path(args.traj_dir)
    trajectories = [
        read_trajectory_csv(out / name, summary0, manifest["t_max"], n_label=config.n)
        for name in manifest["files"]
    ]
    grid = config.rescaled_grid()
    paths = [analysis.scale_trajectory(traj, params, grid)[1] for traj in trajectories]
    if len(paths) < 2:
        raise ValueError("analysis needs at least two trajectories")
    summary = analysis.ensemble_stats(paths, params)
    z = np.vstack([p.Z for p in paths])

    reports = [analysis.test_fluid(summary, params, abs_tol=args.fluid_tol)]
    if summary.rep_count >= 500:
        reports.append(analysis.test_gaussian_fluctuations(summary, z, params))
    else:
        echo(f"skipping gaussian fluctuation test (needs >= 500 reps, have {summary.rep_count})")

    analysis.write_summary_csv(summary, params, out / "ensemble_summary.csv")
    _write_plot_data(summary, params, out)
    (out / "test_reports.json").write_text(
        json.dumps([r.to_dict() for r in reports], indent=2)
    )
    failed = [r for r in reports if not r.passed]
    for r in reports:
        echo(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  statistic={r.statistic:.6g}")
    echo(f"artifacts written to {out}")
    return EXIT_VERIFICATION if failed else EXIT_OK


def _write_plot_data(summary, params, out):
    fluid = analysis.fluid_limit(summary.grid, params)
    theory_var = analysis.fluct_variance(summary.grid, params)
    with open(out / "fluid_curve.csv", "w") as fh:
        fh.write("t,mean_scaled_K,fluid\n")
        for g in range(summary.grid.size):
            fh.write(f"{summary.grid[g]!r},{summary.mean_scaled_k[g]!r},{fluid[g]!r}\n")
    with open(out / "variance_curve.csv", "w") as fh:
        fh.write("t,var_Z,theory\n")
        for g in range(summary.grid.size):
            fh.write(f"{summary.grid[g]!r},{summary.var_z[g]!r},{theory_var[g]!r}\n")


def cmd_oracle(args, echo=print):
    """Cross-check engine, percolation and exact law on a small instance."""
    from .analysis import empirical_k_distribution, total_variation
    from .ensemble import sample_k_at

    config = build_config(args)
    mv = config.mass_vector()
    kappa = len(mv)
    t = args.t
    exact = exact_k_distribution(mv, t)
    engine_emp = empirical_k_distribution(sample_k_at(mv, t, args.reps, config.seed), kappa, t)
    perc_emp = empirical_k_distribution(
        percolation_k_samples(mv, t, args.reps, config.seed + 1), kappa, t
    )
    tvs = {
        "engine_vs_exact": total_variation(engine_emp, exact),
        "percolation_vs_exact": total_variation(perc_emp, exact),
        "engine_vs_percolation": total_variation(engine_emp, perc_emp),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "k_prob.csv", "w") as fh:
            fh.write("k,prob\n")
            for k in range(1, kappa + 1):
                fh.write(f"{k},{exact.prob(k)!r}\n")
        (out / "oracle_report.json").write_text(json.dumps({"t": t, "tv": tvs}, indent=2))
    echo(f"exact law at t={t}: " + ", ".join(f"P(K={k})={exact.prob(k):.5f}" for k in range(1, kappa + 1)))
    for name, tv in tvs.items():
        echo(f"TV {name}: {tv:.5f}")
    worst = max(tvs.values())
    if worst > args.tv_tol:
        echo(f"FAIL: worst TV {worst:.5f} exceeds {args.tv_tol}")
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_verify(args, echo=print):
    """Run the acceptance criteria and gate on their verdicts."""
    from . import acceptance

    profile = acceptance.QUICK if args.profile == "quick" else acceptance.FULL
    seed = args.seed if args.seed is not None else acceptance.DEFAULT_SEED
    reports = acceptance.run_all(profile=profile, master_seed=seed)
    failures = [r for r in reports if not r.passed]
    if failures:
        echo(f"{len(failures)} criterion(s) failed: " + ", ".join(r.name for r in failures))
        return EXIT_VERIFICATION
    echo("all acceptance criteria passed")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1; argparse defaults to 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE) from None


def _add_family_flags(p):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--family", choices=["er", "ger", "nr"])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, help="extra heavy components (ger)")
    p.add_argument("--theta", type=float, help="mass of each extra component (ger)")
    p.add_argument("--dist", choices=["pareto", "exponential", "pointmass"])
    p.add_argument("--a", type=float, help="Pareto shape (> 2)")
    p.add_argument("--lambda", dest="lam", type=float, help="exponential rate")
    p.add_argument("--w0", type=float, help="point-mass location")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def _add_run_flags(p):
    p.add_argument("--c", type=float, help="horizon constant in rescaled time, c < 1")
    p.add_argument("--grid", type=int, help="number of grid points in (0, c]")
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--record", choices=["full", "grid"])
    p.add_argument("--allow-critical", dest="allow_critical", action="store_const", const=True)


def make_parser():
    parser = _Parser(prog="mcoal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mcoal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[], help="write a mass vector and its summary")
    _add_family_flags(p)
    p.set_defaults(func=lambda args: cmd_generate(build_config(args)))

    p = sub.add_parser("simulate", help="run a reproducible trajectory ensemble")
    _add_family_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=lambda args: cmd_simulate(build_config(args)))

    p = sub.add_parser("analyze", help="score a stored ensemble against its limits")
    p.add_argument("traj_dir", help="directory with trajectories and manifest.json")
    _add_family_flags(p)
    _add_run_flags(p)
    p.add_argument("--fluid-tol", type=float, default=0.005, dest="fluid_tol")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="cross-check the engine against both oracles")
    _add_family_flags(p)
    p.add_argument("--t", type=float, default=0.3, help="unscaled evaluation time")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--tv-tol", type=float, default=0.01, dest="tv_tol")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="run the acceptance criteria suite")
    p.add_argument("--profile", choices=["quick", "full"], default="full")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry_point():
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
