"""Envelope containment statistics over simulated bundles.

Given a boundary function g and dimension d, the envelopes

    upper(t) = (d - 1) t / 2 + sqrt(t) g(t)
    lower(t) = (d - 1) t / 2 - sqrt(t) g(t)

are checked against radial (or ambient-distance) bundles over a time window,
path by path.  The checks report exact counts with Wilson score intervals,
the first violation time per violating path, and optionally sharpen grid
decisions with a one-shot midpoint refinement: wherever a contained path
comes within 1% of the envelope, the driving Brownian increment is split by
a bridge variate and the envelope is re-tested at the interval midpoint
(exactly for Brownian paths, via one implicit half-step for radial ones).
Refinement can only turn containment into violation, never the reverse, and
its bridge variates are keyed by (seed, path, interval), so the outcome does
not depend on which intervals happen to be flagged.

bm_kolmogorov_check applies the same machinery to the driver itself, where
sqrt(t) g(t) is the two-sided envelope of a standard Brownian motion; its
lower_crossing mode counts paths that touch -sqrt(t) g(t), the event whose
recurrence characterizes the divergent regime of the integral test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import _kernels
from .errors import ConfigError, DomainError
from .grids import TimeGrid
from .rate_functions import RateFunctionSpec, drift_coefficient, eval_g, rate_bounds
from .rng import bridge_generator
from .sde_sim import KIND_AMBIENT, KIND_BM1D, KIND_RADIAL, PairedPaths, PathBundle

#: 97.5% normal quantile: Wilson intervals below are 95% two-sided.
DEFAULT_Z = float(ndtri(0.975))

#: Near-miss band for refinement, relative to the envelope magnitude.
_NEAR_REL = 0.01

MODE_TWO_SIDED = "two_sided"
MODE_LOWER_CROSSING = "lower_crossing"


def wilson_interval(successes: int, n: int, z: float = DEFAULT_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ConfigError("wilson_interval needs n >= 1")
    if not 0 <= successes <= n:
        raise ConfigError(f"successes {successes} outside [0, {n}]")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    lo = max(0.0, center - half)
    hi = min(1.0, center + half)
    # The bounds are exactly 0 and 1 at the degenerate counts; pin them so
    # rounding cannot push the interval off the point estimate.
    if successes == 0:
        lo = 0.0
    if successes == n:
        hi = 1.0
    return (lo, hi)


@dataclass(frozen=True)
class EnvelopeReport:
    """Containment (or crossing) statistics for one envelope over a window.

    n_contained counts the paths satisfying the mode's event: staying below
    the upper envelope, staying above the lower one, staying inside the
    two-sided band, or (lower_crossing mode) touching the lower boundary at
    least once.  first_violation_times lists, per non-conforming path (per
    crossing path in crossing mode), the earliest witnessed time.
    """

    kind: str
    window: tuple[float, float]
    n_paths: int
    n_contained: int
    ci: tuple[float, float]
    first_violation_times: tuple[float, ...]
    refined_checks: int = 0

    @property
    def fraction(self) -> float:
        return self.n_contained / self.n_paths

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "window": list(self.window),
            "n_paths": self.n_paths,
            "n_contained": self.n_contained,
            "fraction": self.fraction,
            "ci": list(self.ci),
            "first_violation_times": list(self.first_violation_times),
            "refined_checks": self.refined_checks,
        }


def _as_bundle(paths, kinds: tuple[str, ...]) -> PathBundle:
    if isinstance(paths, PairedPaths):
        bundle = paths.bm if kinds == (KIND_BM1D,) else paths.radial
    elif isinstance(paths, PathBundle):
        bundle = paths
    else:
        raise ConfigError(f"expected PathBundle or PairedPaths, got {type(paths)!r}")
    if bundle.kind not in kinds:
        raise ConfigError(f"bundle kind {bundle.kind!r} not usable here; need {kinds}")
    return bundle


def _window_slice(grid: TimeGrid, spec: RateFunctionSpec, t_start: float,
                  t_end: float | None) -> tuple[slice, np.ndarray]:
    if t_start < spec.t0:
        raise DomainError(f"window start {t_start} below the domain start {spec.t0}")
    end = grid.horizon if t_end is None else t_end
    win = grid.window(t_start, end)
    return win, grid.times[win]


def _bridge_midpoint(bundle: PathBundle, path_i: int, k: int) -> float:
    """Brownian value at the midpoint of grid interval k, bridged from the
    stored increment with a variate keyed by (seed, path, interval)."""
    h = bundle.grid.dts[k]
    xi = float(bridge_generator(bundle.seed, path_i, k).standard_normal())
    return 0.5 * float(bundle.increments[path_i, k]) + 0.5 * math.sqrt(h) * xi


def _refine(bundle: PathBundle, win: slice, hit_mid, conforms: np.ndarray,
            near: np.ndarray, first_times: np.ndarray,
            radial_coeff: float | None) -> int:
    """One midpoint re-test on every near-miss interval.

    near is boolean over (paths, window points); an interval between
    consecutive window points is flagged when either endpoint is flagged.
    Only paths with no grid-level hit (conforms True) are re-tested; a
    midpoint hit flips conforms to False and records the midpoint time.
    Intervals are visited in time order, so the recorded time is the
    earliest witnessed one.  Returns the number of midpoint evaluations.
    """
    if bundle.increments is None or bundle.seed is None:
        return 0
    times = bundle.grid.times
    k0 = win.start
    if near.shape[1] < 2:
        return 0
    flagged = (near[:, :-1] | near[:, 1:]) & conforms[:, None]
    n_checks = 0
    for path_i, j in zip(*np.nonzero(flagged)):
        path_i = int(path_i)
        if not conforms[path_i]:
            continue
        k = k0 + int(j)
        h = float(bundle.grid.dts[k])
        t_mid = float(times[k]) + 0.5 * h
        w1 = _bridge_midpoint(bundle, path_i, k)
        left = float(bundle.values[path_i, k])
        if radial_coeff is None:
            v_mid = left + w1
        else:
            v_mid = _kernels.implicit_step(left + w1, radial_coeff * 0.5 * h)
        n_checks += 1
        if hit_mid(v_mid, t_mid):
            conforms[path_i] = False
            first_times[path_i] = t_mid
    return n_checks


def _first_times_tuple(first_times: np.ndarray, flagged_paths: np.ndarray) -> tuple[float, ...]:
    return tuple(float(first_times[i]) for i in np.flatnonzero(flagged_paths))


def upper_containment(paths, spec: RateFunctionSpec, d: int, t_start: float, *,
                      t_end: float | None = None, refine: bool = True) -> EnvelopeReport:
    """Fraction of paths staying strictly below the upper envelope on the
    window [t_start, t_end]."""
    bundle = _as_bundle(paths, (KIND_RADIAL, KIND_AMBIENT))
    win, t_w = _window_slice(bundle.grid, spec, t_start, t_end)
    env = rate_bounds(spec, d, t_w)[0]
    V = bundle.values[:, win]
    hit = V >= env
    conforms = ~hit.any(axis=1)
    first_idx = np.argmax(hit, axis=1)
    first_times = np.full(bundle.n_paths, np.nan)
    first_times[~conforms] = t_w[first_idx[~conforms]]
    checks = 0
    if refine:
        near = ~hit & ((env - V) <= _NEAR_REL * np.abs(env))
        env_at = lambda t: rate_bounds(spec, d, t)[0]
        checks = _refine(bundle, win, lambda v, t: v >= env_at(t),
                         conforms, near, first_times, drift_coefficient(d))
    n_contained = int(conforms.sum())
    return EnvelopeReport(
        kind="radial_upper", window=(float(t_w[0]), float(t_w[-1])),
        n_paths=bundle.n_paths, n_contained=n_contained,
        ci=wilson_interval(n_contained, bundle.n_paths),
        first_violation_times=_first_times_tuple(first_times, ~conforms),
        refined_checks=checks)


def lower_containment(paths, spec: RateFunctionSpec, d: int, t_start: float, *,
                      t_end: float | None = None, refine: bool = True) -> EnvelopeReport:
    """Fraction of paths staying strictly above the lower envelope."""
    bundle = _as_bundle(paths, (KIND_RADIAL, KIND_AMBIENT))
    win, t_w = _window_slice(bundle.grid, spec, t_start, t_end)
    env = rate_bounds(spec, d, t_w)[1]
    V = bundle.values[:, win]
    hit = V <= env
    conforms = ~hit.any(axis=1)
    first_idx = np.argmax(hit, axis=1)
    first_times = np.full(bundle.n_paths, np.nan)
    first_times[~conforms] = t_w[first_idx[~conforms]]
    checks = 0
    if refine:
        near = ~hit & ((V - env) <= _NEAR_REL * np.abs(env))
        env_at = lambda t: rate_bounds(spec, d, t)[1]
        checks = _refine(bundle, win, lambda v, t: v <= env_at(t),
                         conforms, near, first_times, drift_coefficient(d))
    n_contained = int(conforms.sum())
    return EnvelopeReport(
        kind="radial_lower", window=(float(t_w[0]), float(t_w[-1])),
        n_paths=bundle.n_paths, n_contained=n_contained,
        ci=wilson_interval(n_contained, bundle.n_paths),
        first_violation_times=_first_times_tuple(first_times, ~conforms),
        refined_checks=checks)


def bm_kolmogorov_check(paths, spec: RateFunctionSpec, t_start: float, *,
                        mode: str = MODE_TWO_SIDED, t_end: float | None = None,
                        refine: bool = True) -> EnvelopeReport:
    """Envelope statistics for the driver itself against sqrt(t) g(t).

    two_sided: count paths with |B_t| < sqrt(t) g(t) throughout the window.
    lower_crossing: count paths with B_t <= -sqrt(t) g(t) at least once;
    in this mode n_contained is the number of paths that crossed and
    first_violation_times lists their first crossing times.
    """
    bundle = _as_bundle(paths, (KIND_BM1D,))
    if mode not in (MODE_TWO_SIDED, MODE_LOWER_CROSSING):
        raise ConfigError(f"unknown mode {mode!r}")
    win, t_w = _window_slice(bundle.grid, spec, t_start, t_end)
    env = np.sqrt(t_w) * np.asarray(eval_g(spec, t_w))
    V = bundle.values[:, win]
    checks = 0
    env_at = lambda t: math.sqrt(t) * float(eval_g(spec, t))
    if mode == MODE_TWO_SIDED:
        hit = np.abs(V) >= env
        conforms = ~hit.any(axis=1)
        first_idx = np.argmax(hit, axis=1)
        first_times = np.full(bundle.n_paths, np.nan)
        first_times[~conforms] = t_w[first_idx[~conforms]]
        if refine:
            near = ~hit & ((env - np.abs(V)) <= _NEAR_REL * env)
            checks = _refine(bundle, win, lambda v, t: abs(v) >= env_at(t),
                             conforms, near, first_times, None)
        n_contained = int(conforms.sum())
        flagged = ~conforms
        kind = "bm_two_sided"
    else:
        hit = V <= -env
        conforms = ~hit.any(axis=1)
        first_idx = np.argmax(hit, axis=1)
        first_times = np.full(bundle.n_paths, np.nan)
        first_times[~conforms] = t_w[first_idx[~conforms]]
        if refine:
            near = ~hit & ((V + env) <= _NEAR_REL * env)
            checks = _refine(bundle, win, lambda v, t: v <= -env_at(t),
                             conforms, near, first_times, None)
        crossed = ~conforms
        n_contained = int(crossed.sum())
        flagged = crossed
        kind = "bm_lower_crossing"
    return EnvelopeReport(
        kind=kind, window=(float(t_w[0]), float(t_w[-1])),
        n_paths=bundle.n_paths, n_contained=n_contained,
        ci=wilson_interval(n_contained, bundle.n_paths),
        first_violation_times=_first_times_tuple(first_times, flagged),
        refined_checks=checks)


@dataclass(frozen=True)
class DriftEstimate:
    """Terminal-slope statistics R_T / T across paths."""

    n_paths: int
    horizon: float
    mean: float
    stdev: float
    stderr: float
    ci: tuple[float, float]

    def to_dict(self) -> dict:
        return {"n_paths": self.n_paths, "horizon": self.horizon, "mean": self.mean,
                "stdev": self.stdev, "stderr": self.stderr, "ci": list(self.ci)}


def drift_limit(paths) -> DriftEstimate:
    """Estimate the long-run slope; converges to (d - 1) / 2 as T grows."""
    bundle = _as_bundle(paths, (KIND_RADIAL, KIND_AMBIENT))
    slopes = bundle.terminal / bundle.grid.horizon
    n = bundle.n_paths
    mean = float(np.mean(slopes))
    stdev = float(np.std(slopes, ddof=1)) if n > 1 else 0.0
    stderr = stdev / math.sqrt(n) if n > 1 else math.inf
    half = DEFAULT_Z * stderr
    return DriftEstimate(n_paths=n, horizon=bundle.grid.horizon, mean=mean,
                         stdev=stdev, stderr=stderr, ci=(mean - half, mean + half))


@dataclass(frozen=True)
class LilReport:
    """Per-path suprema of (R_t - (d-1)t/2) / sqrt(t log log t) on a window.

    As the window moves to infinity the supremum tends to sqrt(2) almost
    surely (the iterated-logarithm constant for the compensated radial
    process), recorded here as limit_constant for reference.
    """

    n_paths: int
    window: tuple[float, float]
    suprema: tuple[float, ...]
    quantiles: dict
    mean: float
    limit_constant: float

    def to_dict(self) -> dict:
        return {"n_paths": self.n_paths, "window": list(self.window),
                "quantiles": dict(self.quantiles), "mean": self.mean,
                "limit_constant": self.limit_constant,
                "suprema": list(self.suprema)}


def lil_statistic(paths, d: int, t_start: float, *,
                  t_end: float | None = None) -> LilReport:
    """Distribution of the normalized supremum over [t_start, t_end]."""
    bundle = _as_bundle(paths, (KIND_RADIAL, KIND_AMBIENT))
    if t_start < 16.0:
        raise DomainError(f"t_start must be >= 16 so log log t is positive, got {t_start}")
    end = bundle.grid.horizon if t_end is None else t_end
    win = bundle.grid.window(t_start, end)
    t_w = bundle.grid.times[win]
    a = drift_coefficient(d)
    norm = np.sqrt(t_w * np.log(np.log(t_w)))
    stats = np.max((bundle.values[:, win] - a * t_w) / norm, axis=1)
    qs = {f"q{p}": float(np.quantile(stats, p / 100.0)) for p in (10, 25, 50, 75, 90)}
    return LilReport(n_paths=bundle.n_paths,
                     window=(float(t_w[0]), float(t_w[-1])),
                     suprema=tuple(float(v) for v in stats),
                     quantiles=qs, mean=float(np.mean(stats)),
                     limit_constant=math.sqrt(2.0))
