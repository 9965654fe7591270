"""hypescape: escape-rate laboratory for Brownian motion on hyperbolic space.

The radial part of hyperbolic Brownian motion in dimension d drifts outward
at asymptotic speed (d - 1) / 2; the fluctuation around that linear escape is
governed by an integral test over boundary functions g.  This package
simulates the radial SDE with a positivity-preserving implicit scheme,
simulates the ambient process independently as a cross-check, classifies
boundary functions by the integral test, and measures envelope containment
statistics with exact counts and confidence intervals.
"""

from ._kernels import (
    BACKEND_NUMBA,
    BACKEND_NUMPY,
    ENV_FLAG,
    active_backend,
    available_backends,
    coth,
    set_backend,
)
from .ambient_hyperbolic import (
    HalfSpacePoint,
    KsReport,
    geodesic_distance,
    ks_crosscheck,
    simulate_ambient,
)
from .envelope_stats import (
    MODE_LOWER_CROSSING,
    MODE_TWO_SIDED,
    DriftEstimate,
    EnvelopeReport,
    LilReport,
    bm_kolmogorov_check,
    drift_limit,
    lil_statistic,
    lower_containment,
    upper_containment,
    wilson_interval,
)
from .errors import (
    AdmissibilityError,
    ConfigError,
    DomainError,
    EvaluationError,
    HypescapeError,
    RootFindError,
    WindowError,
)
from .grids import PRESETS, StepRule, TimeGrid, build_grid
from .kolmogorov_test import (
    IntegralVerdict,
    VERDICT_CONVERGENT,
    VERDICT_DIVERGENT,
    VERDICT_INCONCLUSIVE,
    classify,
    classify_shifted,
    integrand,
    partial_integral,
)
from .pathio import (
    read_paths,
    read_paths_bin,
    read_paths_csv,
    write_paths_bin,
    write_paths_csv,
)
from .rate_functions import (
    AdmissibilityReport,
    RateFunctionSpec,
    ShiftedRateFunction,
    Violation,
    check_admissibility,
    drift_coefficient,
    eval_g,
    rate_bounds,
    rate_lower,
    rate_upper,
    require_admissible,
)
from .sde_sim import (
    KIND_AMBIENT,
    KIND_BM1D,
    KIND_RADIAL,
    PairedPaths,
    Path,
    PathBundle,
    SimConfig,
    bm_from_increments,
    comparison_path,
    correction_integral,
    radial_from_increments,
    simulate_bm1d,
    simulate_radial,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "AdmissibilityReport",
    "BACKEND_NUMBA",
    "BACKEND_NUMPY",
    "ConfigError",
    "DomainError",
    "DriftEstimate",
    "ENV_FLAG",
    "EnvelopeReport",
    "EvaluationError",
    "HalfSpacePoint",
    "HypescapeError",
    "IntegralVerdict",
    "KIND_AMBIENT",
    "KIND_BM1D",
    "KIND_RADIAL",
    "KsReport",
    "LilReport",
    "MODE_LOWER_CROSSING",
    "MODE_TWO_SIDED",
    "PRESETS",
    "PairedPaths",
    "Path",
    "PathBundle",
    "RateFunctionSpec",
    "RootFindError",
    "ShiftedRateFunction",
    "SimConfig",
    "StepRule",
    "TimeGrid",
    "VERDICT_CONVERGENT",
    "VERDICT_DIVERGENT",
    "VERDICT_INCONCLUSIVE",
    "Violation",
    "WindowError",
    "active_backend",
    "available_backends",
    "bm_from_increments",
    "bm_kolmogorov_check",
    "build_grid",
    "check_admissibility",
    "classify",
    "classify_shifted",
    "comparison_path",
    "correction_integral",
    "coth",
    "drift_coefficient",
    "drift_limit",
    "eval_g",
    "geodesic_distance",
    "integrand",
    "ks_crosscheck",
    "lil_statistic",
    "lower_containment",
    "partial_integral",
    "radial_from_increments",
    "rate_bounds",
    "require_admissible",
    "rate_lower",
    "rate_upper",
    "read_paths",
    "read_paths_bin",
    "read_paths_csv",
    "simulate_ambient",
    "simulate_bm1d",
    "simulate_radial",
    "upper_containment",
    "wilson_interval",
    "write_paths_bin",
    "write_paths_csv",
]
