"""Time grids with geometric late-time growth.

Simulations here run to horizons of order 10^2..10^3 but the interesting
envelope statistics live on logarithmic time scales, so uniform grids are
wasteful.  The grid below is uniform with mesh dt_max up to t = 1 and then
grows geometrically, dt = rel * t, optionally capped by an absolute late-time
mesh.  Once the radial process is far from the origin the drift coefficient
is constant at machine precision, so large late steps cost no accuracy in law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, WindowError


@dataclass(frozen=True)
class StepRule:
    """Step-size policy: uniform mesh dt_max on [0, 1], then dt = rel * t,
    with dt never exceeding dt_max_late."""

    dt_max: float = 1e-3
    rel: float = 0.002
    dt_max_late: float = math.inf

    def __post_init__(self) -> None:
        if not (self.dt_max > 0 and math.isfinite(self.dt_max)):
            raise ConfigError(f"dt_max must be positive and finite, got {self.dt_max}")
        if not (0 < self.rel <= 0.1):
            raise ConfigError(f"rel must lie in (0, 0.1], got {self.rel}")
        if not self.dt_max_late > 0:
            raise ConfigError(f"dt_max_late must be positive, got {self.dt_max_late}")

    def refined(self, factor: float) -> "StepRule":
        """Return a rule with every cap divided by factor (for convergence
        studies)."""
        if factor <= 0:
            raise ConfigError("refinement factor must be positive")
        late = self.dt_max_late / factor if math.isfinite(self.dt_max_late) else math.inf
        return replace(self, dt_max=self.dt_max / factor, rel=self.rel / factor,
                       dt_max_late=late)


PRESETS: dict[str, StepRule] = {
    "fine": StepRule(dt_max=1e-3, rel=0.002),
    "medium": StepRule(dt_max=5e-3, rel=0.01),
    "coarse": StepRule(dt_max=2e-2, rel=0.05),
}


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing grid starting at 0.  Arrays are read-only."""

    times: np.ndarray
    dts: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.size < 2:
            raise ConfigError("a time grid needs at least two points")
        if times[0] != 0.0:
            raise ConfigError("time grids start at 0")
        dts = np.diff(times)
        if not np.all(dts > 0):
            raise ConfigError("grid times must be strictly increasing")
        times.setflags(write=False)
        dts.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "dts", dts)

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def window(self, t_start: float, t_end: float) -> slice:
        """Indices of grid points with t_start <= t <= t_end.

        Raises WindowError when the window captures no grid point.
        """
        if not t_end >= t_start:
            raise WindowError(f"empty window: [{t_start}, {t_end}]")
        i0 = int(np.searchsorted(self.times, t_start, side="left"))
        i1 = int(np.searchsorted(self.times, t_end, side="right"))
        if i0 >= i1:
            raise WindowError(
                f"window [{t_start}, {t_end}] contains no grid point "
                f"(grid spans [0, {self.horizon}])"
            )
        return slice(i0, i1)


def build_grid(horizon: float, rule: StepRule = StepRule()) -> TimeGrid:
    """Construct the grid for [0, horizon] under a step rule.

    Phase 1 covers [0, min(1, horizon)] uniformly with mesh <= dt_max.
    Phase 2 multiplies t by (1 + rel) per step, capped by dt_max_late, and
    the final step is clipped to land exactly on the horizon.
    """
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ConfigError(f"horizon must be positive and finite, got {horizon}")
    head_end = min(1.0, horizon)
    n_head = max(1, math.ceil(head_end / rule.dt_max - 1e-12))
    pts = list(np.linspace(0.0, head_end, n_head + 1))
    t = head_end
    while t < horizon:
        dt = min(rule.rel * t, rule.dt_max_late)
        t_next = t + dt
        if t_next >= horizon or t_next == t:
            t_next = horizon
        pts.append(t_next)
        t = t_next
    return TimeGrid(np.asarray(pts, dtype=np.float64))
