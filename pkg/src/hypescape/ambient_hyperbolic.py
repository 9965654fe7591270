"""Hyperbolic Brownian motion in the half-space model, as an independent
cross-check on the radial scheme.

Points live in the upper half-space {x in R^d : x_d > 0} with metric
(dx_1^2 + ... + dx_d^2) / x_d^2 and base point o = (0, ..., 0, 1).  The
coordinate generator of hyperbolic Brownian motion gives the SDE

    dX_i = X_d dW_i                    (i < d)
    dX_d = X_d dW_d - ((d - 2) / 2) X_d dt

whose height admits the exact solution X_d(t) = exp(W_d(t) - ((d-1)/2) t).
The simulator therefore evolves Y = log X_d exactly per step and applies
Euler steps with midpoint height exp((Y_k + Y_{k+1}) / 2) to the horizontal
coordinates; only the horizontal part carries discretization error.

The geodesic distance to o of the simulated point is then a second route to
the radial process, sharing no code or randomness with the implicit scheme
in sde_sim, which is what makes the two-sample comparison in ks_crosscheck
meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .errors import ConfigError
from .grids import build_grid
from .rng import STAGE_AMBIENT, path_generator
from .sde_sim import KIND_AMBIENT, PathBundle, SimConfig

#: Steps buffered per chunk when drawing per-path increments.
_CHUNK_STEPS = 256


@dataclass(frozen=True)
class HalfSpacePoint:
    """A point of the half-space model; the last coordinate is the height."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        if len(coords) < 2:
            raise ConfigError("half-space points need at least 2 coordinates")
        if not all(math.isfinite(c) for c in coords):
            raise ConfigError("half-space coordinates must be finite")
        if not coords[-1] > 0:
            raise ConfigError(f"height must be positive, got {coords[-1]}")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def height(self) -> float:
        return self.coords[-1]

    @classmethod
    def origin(cls, d: int) -> "HalfSpacePoint":
        return cls((0.0,) * (d - 1) + (1.0,))


def geodesic_distance(p: HalfSpacePoint, q: HalfSpacePoint) -> float:
    """Hyperbolic distance acosh(1 + |p - q|^2 / (2 p_d q_d))."""
    if p.d != q.d:
        raise ConfigError(f"dimension mismatch: {p.d} vs {q.d}")
    diff = np.asarray(p.coords) - np.asarray(q.coords)
    sq = float(diff @ diff)
    return float(np.arccosh(1.0 + sq / (2.0 * p.height * q.height)))


def _distance_to_origin(horizontal_sq: np.ndarray, height: np.ndarray) -> np.ndarray:
    return np.arccosh(1.0 + (horizontal_sq + (height - 1.0) ** 2) / (2.0 * height))


def simulate_ambient(config: SimConfig, *, return_heights: bool = False):
    """Distance-to-origin paths of half-space Brownian motion from o.

    Uses the "ambient" stream family of config.seed (independent of the
    radial and bm1d families).  r_init must be 0: the walk starts at o.
    Returns a PathBundle of kind "ambient_distance"; with return_heights
    the log-height matrix (exact in law at grid times) comes along.
    """
    if config.r_init != 0.0:
        raise ConfigError("ambient simulation starts at the base point; r_init must be 0")
    grid = build_grid(config.horizon, config.step_rule)
    dts = grid.dts
    sqrt_dts = np.sqrt(dts)
    n = config.path_count
    d = config.d
    a = config.drift_coeff

    gens = [path_generator(config.seed, STAGE_AMBIENT, i) for i in range(n)]
    log_h = np.zeros(n)
    horiz = np.zeros((n, d - 1))
    dist = np.empty((n, grid.n_times))
    dist[:, 0] = 0.0
    heights = np.empty((n, grid.n_times)) if return_heights else None
    if heights is not None:
        heights[:, 0] = 0.0

    n_steps = dts.size
    buf = np.empty((n, min(_CHUNK_STEPS, n_steps), d))
    for k0 in range(0, n_steps, _CHUNK_STEPS):
        k1 = min(k0 + _CHUNK_STEPS, n_steps)
        width = k1 - k0
        for i in range(n):
            buf[i, :width] = gens[i].standard_normal((width, d))
        buf[:, :width] *= sqrt_dts[k0:k1, None]
        for k in range(k0, k1):
            dW = buf[:, k - k0, :]
            log_h_next = log_h + dW[:, d - 1] - a * dts[k]
            mid = np.exp(0.5 * (log_h + log_h_next))
            horiz += mid[:, None] * dW[:, : d - 1]
            log_h = log_h_next
            height = np.exp(log_h)
            hsq = np.einsum("ij,ij->i", horiz, horiz)
            dist[:, k + 1] = _distance_to_origin(hsq, height)
            if heights is not None:
                heights[:, k + 1] = log_h
    bundle = PathBundle(grid=grid, values=dist, kind=KIND_AMBIENT, seed=config.seed)
    if return_heights:
        return bundle, heights
    return bundle


@dataclass(frozen=True)
class KsReport:
    """Two-sample comparison of terminal radial vs ambient distances."""

    d: int
    t: float
    n_paths: int
    seed: int
    statistic: float
    p_value: float
    alpha: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "t": self.t,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
        }


def ks_crosscheck(d: int, t: float, n_paths: int, seed: int, *,
                  step_rule=None, alpha: float = 0.01) -> KsReport:
    """Kolmogorov-Smirnov test of radial terminal values against ambient
    geodesic distances at time t.

    The two samples draw from disjoint stream families of the same seed, so
    they are independent and the test is a genuine two-sample problem.  A
    small p-value flags disagreement between the implicit radial scheme and
    the half-space construction.
    """
    from .grids import PRESETS

    rule = step_rule if step_rule is not None else PRESETS["fine"]
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    config = SimConfig(d=d, horizon=t, path_count=n_paths, seed=seed, step_rule=rule)
    from .sde_sim import simulate_radial

    radial = simulate_radial(config).radial.terminal
    ambient = simulate_ambient(config).terminal
    res = ks_2samp(radial, ambient)
    stat = float(res.statistic)
    p = float(res.pvalue)
    return KsReport(d=d, t=float(t), n_paths=n_paths, seed=int(seed),
                    statistic=stat, p_value=p, alpha=alpha, reject=p < alpha)
