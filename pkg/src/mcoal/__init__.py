"""mcoal: multiplicative-coalescent simulation and limit verification.

An exact event-driven simulator for the component masses of
multiplicative random graph processes, two independent oracles for
cross-validation, and a statistical harness that verifies the fluid
and Brownian fluctuation limits of the component count in the
sub-critical window.
"""

from .analysis import (
    EnsembleSummary,
    FluctuationPath,
    RiemannReport,
    TestReport,
    empirical_k_distribution,
    ensemble_stats,
    fluct_drift,
    fluct_variance,
    fluid_limit,
    martingale_suite,
    riemann_convergence,
    scale_trajectory,
    second_moment_bound_check,
    test_fluid,
    test_gaussian_fluctuations,
    total_variation,
)
from .engine import (
    CoalescentState,
    MartingalePath,
    Trajectory,
    WeightedSampler,
    martingale_path,
    propose_pair,
    simulate,
    total_rate,
)
from .ensemble import run_ensemble, sample_k_at, trajectory_seed
from .mass_vectors import (
    Exponential,
    FiniteSizeDiagnostics,
    LimitParams,
    MassSummary,
    MassVector,
    Pareto,
    PointMass,
    QuantileSpec,
    TabulatedInverse,
    generalized_er,
    limit_params_er,
    limit_params_general,
    quantile_masses,
    read_mass_csv,
    unit_masses,
    write_mass_csv,
)
from .oracles import (
    KDistribution,
    PartitionChain,
    build_partition_chain,
    exact_k_distribution,
    exact_mean_k,
    percolation_k_samples,
    percolation_sample,
)

__version__ = "0.1.0"
