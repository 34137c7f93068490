"""Hessian-informed HMC sampling library and benchmark harness."""

from .diagnostics import (
    ChainDiagnostics,
    CredibleBand,
    acceptance_rate,
    autocorrelation,
    correlation_time,
    credible_band,
    effective_samples,
    spatial_average,
)
from .linalg import (
    DimensionMismatch,
    NotPositiveDefinite,
    RepairFailed,
    SpdFactor,
    factorize,
    repair_to_pd,
    sample_gaussian,
    solve,
)
from .samplers import (
    ChainRecord,
    ConfigMismatch,
    FixedSpd,
    LocalHessian,
    PhaseState,
    SamplerConfig,
    ScaledIdentity,
    hamiltonian,
    hlocal_step,
    hmap_mass,
    hmc_step,
    leapfrog,
    mh_accept,
    mh_propose,
    run_chain,
)
from .targets import (
    GaussianTarget,
    LogNormalField,
    OutOfDomain,
    TargetModel,
    build_grid_covariance,
    gaussian_target,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
