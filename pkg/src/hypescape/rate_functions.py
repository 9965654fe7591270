"""Boundary functions g and the escape-rate envelopes they generate.

A boundary function g lives on [t0, infinity), is positive, and is admissible
when sqrt(t) * g(t) is nondecreasing and g(t) / sqrt(t) stays bounded.  Each g
induces the envelope pair

    upper(t) = (d - 1) * t / 2 + sqrt(t) * g(t)
    lower(t) = (d - 1) * t / 2 - sqrt(t) * g(t)

for Brownian motion on the d-dimensional hyperbolic space; whether the radial
part eventually stays between them is decided by the integral test in
kolmogorov_test.

Built-in families:

    constant          g(t) = a                          (a > 0)
    sqrtloglog        g(t) = c * sqrt(log log t)        (c > 0)
    kolmogorov_erdos  g(t) = sqrt(2 log log t + a log log log t)
    custom            tabulated knots, log-log interpolated

The default t0 = 16 keeps log log t positive, so all built-ins are defined
and positive from t0 on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigError, DomainError, EvaluationError

FAMILY_CONSTANT = "constant"
FAMILY_SQRTLOGLOG = "sqrtloglog"
FAMILY_KOLMOGOROV_ERDOS = "kolmogorov_erdos"
FAMILY_CUSTOM = "custom"

FAMILIES = (FAMILY_CONSTANT, FAMILY_SQRTLOGLOG, FAMILY_KOLMOGOROV_ERDOS, FAMILY_CUSTOM)

DEFAULT_T0 = 16.0

#: Probes used by check_admissibility: geometric grid over [t0, ADMISSIBILITY_T_MAX]
ADMISSIBILITY_T_MAX = 1e12
ADMISSIBILITY_POINTS = 10_000
#: Relative slack before a decrease of sqrt(t) g(t) counts as a violation.
_MONOTONE_RTOL = 1e-12


@dataclass(frozen=True)
class RateFunctionSpec:
    """A boundary function: family name, parameter, domain start, and
    (for the custom family) tabulated knots."""

    family: str
    param: float = math.nan
    t0: float = DEFAULT_T0
    knots_t: tuple[float, ...] | None = None
    knots_g: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if not (math.isfinite(self.t0) and self.t0 > 1.0):
            raise ConfigError(f"t0 must be finite and > 1, got {self.t0}")
        if self.family == FAMILY_CUSTOM:
            if self.knots_t is None or self.knots_g is None:
                raise ConfigError("custom family requires knots_t and knots_g")
            kt = np.asarray(self.knots_t, dtype=np.float64)
            kg = np.asarray(self.knots_g, dtype=np.float64)
            if kt.ndim != 1 or kt.size < 2 or kt.shape != kg.shape:
                raise ConfigError("knots_t and knots_g must be 1-d, equal length, size >= 2")
            if not np.all(np.diff(kt) > 0):
                raise ConfigError("knots_t must be strictly increasing")
            if not np.all(kg > 0):
                raise ConfigError("knots_g must be positive")
            if kt[0] > self.t0:
                raise ConfigError(f"first knot {kt[0]} exceeds t0 {self.t0}")
            if kt[-1] <= self.t0:
                raise ConfigError(f"last knot {kt[-1]} must exceed t0 {self.t0}")
            object.__setattr__(self, "knots_t", tuple(float(v) for v in kt))
            object.__setattr__(self, "knots_g", tuple(float(v) for v in kg))
        else:
            if self.knots_t is not None or self.knots_g is not None:
                raise ConfigError("knots are only valid for the custom family")
            if not math.isfinite(self.param):
                raise ConfigError(f"family {self.family!r} needs a finite parameter")
            if self.family in (FAMILY_CONSTANT, FAMILY_SQRTLOGLOG) and not self.param > 0:
                raise ConfigError(f"family {self.family!r} needs param > 0, got {self.param}")
        try:
            g0 = float(eval_g(self, self.t0))
        except (DomainError, EvaluationError) as exc:
            raise ConfigError(f"boundary function unusable at t0={self.t0}: {exc}") from exc
        if not (math.isfinite(g0) and g0 > 0):
            raise ConfigError(
                f"boundary function must be positive and finite at t0={self.t0}, got {g0}"
            )

    # -- factories ---------------------------------------------------------

    @classmethod
    def constant(cls, a: float, t0: float = DEFAULT_T0) -> "RateFunctionSpec":
        return cls(FAMILY_CONSTANT, param=float(a), t0=float(t0))

    @classmethod
    def sqrt_loglog(cls, c: float, t0: float = DEFAULT_T0) -> "RateFunctionSpec":
        return cls(FAMILY_SQRTLOGLOG, param=float(c), t0=float(t0))

    @classmethod
    def kolmogorov_erdos(cls, a: float, t0: float = DEFAULT_T0) -> "RateFunctionSpec":
        return cls(FAMILY_KOLMOGOROV_ERDOS, param=float(a), t0=float(t0))

    @classmethod
    def custom(cls, knots_t: Sequence[float], knots_g: Sequence[float],
               t0: float = DEFAULT_T0) -> "RateFunctionSpec":
        return cls(FAMILY_CUSTOM, t0=float(t0),
                   knots_t=tuple(float(v) for v in knots_t),
                   knots_g=tuple(float(v) for v in knots_g))

    # -- bounds of usable domain -------------------------------------------

    @property
    def t_max(self) -> float:
        """Largest evaluable time (last knot for custom, else infinity)."""
        if self.family == FAMILY_CUSTOM:
            return self.knots_t[-1]  # type: ignore[index]
        return math.inf

    # -- serialization -------------------------------------------------------

    def to_config(self) -> dict:
        cfg: dict = {"family": self.family, "t0": self.t0}
        if self.family == FAMILY_CUSTOM:
            cfg["knots_t"] = list(self.knots_t)  # type: ignore[arg-type]
            cfg["knots_g"] = list(self.knots_g)  # type: ignore[arg-type]
        else:
            cfg["param"] = self.param
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "RateFunctionSpec":
        try:
            family = cfg["family"]
        except KeyError as exc:
            raise ConfigError("boundary function config needs a 'family' key") from exc
        unknown = set(cfg) - {"family", "param", "t0", "knots_t", "knots_g"}
        if unknown:
            raise ConfigError(f"unknown boundary function keys: {sorted(unknown)}")
        t0 = float(cfg.get("t0", DEFAULT_T0))
        if family == FAMILY_CUSTOM:
            if "knots_t" not in cfg or "knots_g" not in cfg:
                raise ConfigError("custom family config needs knots_t and knots_g")
            return cls.custom(cfg["knots_t"], cfg["knots_g"], t0=t0)
        if "param" not in cfg:
            raise ConfigError(f"family {family!r} config needs a 'param' key")
        return cls(family, param=float(cfg["param"]), t0=t0)


def _eval_array(spec: RateFunctionSpec, t: np.ndarray) -> np.ndarray:
    # one-ulp slack so that exp(log(t0)) round trips stay in range
    if np.any(t < spec.t0 * (1.0 - 1e-12)):
        bad = float(np.min(t))
        raise DomainError(f"t={bad} below domain start t0={spec.t0}")
    if spec.family == FAMILY_CONSTANT:
        return np.full_like(t, spec.param)
    if spec.family == FAMILY_SQRTLOGLOG:
        ll = np.log(np.log(t))
        if np.any(ll <= 0):
            raise DomainError("sqrtloglog needs log log t > 0; raise t0 above e^e")
        return spec.param * np.sqrt(ll)
    if spec.family == FAMILY_KOLMOGOROV_ERDOS:
        ll = np.log(np.log(t))
        if np.any(ll <= 0):
            raise DomainError("kolmogorov_erdos needs log log t > 0; raise t0 above e^e")
        inner = 2.0 * ll + spec.param * np.log(ll)
        if np.any(inner <= 0):
            raise EvaluationError("kolmogorov_erdos radicand nonpositive in range")
        return np.sqrt(inner)
    # custom: interpolate log g against log t, clamped to the knot range
    kt = np.asarray(spec.knots_t, dtype=np.float64)
    kg = np.asarray(spec.knots_g, dtype=np.float64)
    if np.any(t > kt[-1] * (1.0 + 1e-12)):
        raise EvaluationError(
            f"t={float(np.max(t))} beyond last tabulated knot {kt[-1]}"
        )
    return np.exp(np.interp(np.log(t), np.log(kt), np.log(kg)))


def eval_g(spec: RateFunctionSpec, t):
    """Evaluate g at scalar or array t (t >= t0 required)."""
    arr = np.asarray(t, dtype=np.float64)
    out = _eval_array(spec, np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


@dataclass(frozen=True)
class ShiftedRateFunction:
    """g(t) -+ n / sqrt(t): the boundary function seen from a ball of radius n.

    direction "minus" subtracts (outer envelope brought inward), "plus" adds.
    The minus variant is only defined where the result is positive;
    effective_t0() finds the first probe time from which that holds.
    """

    base: RateFunctionSpec
    n: float
    direction: str

    def __post_init__(self) -> None:
        if self.direction not in ("minus", "plus"):
            raise ConfigError(f"direction must be 'minus' or 'plus', got {self.direction!r}")
        if not (math.isfinite(self.n) and self.n > 0):
            raise ConfigError(f"shift n must be positive and finite, got {self.n}")

    def eval(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        g = _eval_array(self.base, arr)
        shift = self.n / np.sqrt(arr)
        out = g - shift if self.direction == "minus" else g + shift
        if self.direction == "minus" and np.any(out <= 0):
            raise EvaluationError(
                f"shifted boundary function nonpositive at t={float(arr[np.argmin(out)])}; "
                "start from effective_t0()"
            )
        if np.asarray(t).ndim == 0:
            return float(out[0])
        return out.reshape(np.asarray(t).shape)

    def effective_t0(self) -> float:
        """Smallest probe time from which the minus-shifted function is
        positive (t0 itself for the plus direction).

        Because sqrt(t) * g(t) is nondecreasing for admissible g, positivity
        of g - n / sqrt(t) from one time onward is equivalent to
        sqrt(t) * g(t) > n there, so probing by doubling is exact up to the
        probe resolution.
        """
        t = self.base.t0
        if self.direction == "plus":
            return t
        limit = min(self.base.t_max, 1e18)
        while t <= limit:
            if math.sqrt(t) * float(eval_g(self.base, t)) > self.n:
                return t
            t *= 2.0
        raise EvaluationError(
            f"sqrt(t) * g(t) never exceeds n={self.n} on the probe range; "
            "the minus-shifted function has no usable domain"
        )


def drift_coefficient(d: int) -> float:
    """Radial drift limit (d - 1) / 2 for dimension d >= 2."""
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 2:
        raise ConfigError(f"dimension must be an integer >= 2, got {d!r}")
    return (d - 1) / 2.0


def rate_bounds(spec: RateFunctionSpec, d: int, t):
    """(upper, lower) envelope pair at t.

    The sqrt(t) * g(t) term is evaluated once and reused, so
    upper - lower == 2 * sqrt(t) * g(t) up to one rounding of the outer sums.
    """
    a = drift_coefficient(d)
    arr = np.asarray(t, dtype=np.float64)
    one_d = np.atleast_1d(arr)
    s = np.sqrt(one_d) * _eval_array(spec, one_d)
    lin = a * one_d
    upper = lin + s
    lower = lin - s
    if arr.ndim == 0:
        return float(upper[0]), float(lower[0])
    return upper.reshape(arr.shape), lower.reshape(arr.shape)


def rate_upper(spec: RateFunctionSpec, d: int, t):
    """(d - 1) t / 2 + sqrt(t) g(t)."""
    return rate_bounds(spec, d, t)[0]


def rate_lower(spec: RateFunctionSpec, d: int, t):
    """(d - 1) t / 2 - sqrt(t) g(t)."""
    return rate_bounds(spec, d, t)[1]


@dataclass(frozen=True)
class Violation:
    """One admissibility violation: the check that failed, the probe pair
    (or point) that witnessed it, and the witnessed values."""

    check: str
    t_pair: tuple[float, float]
    values: tuple[float, float]

    def to_dict(self) -> dict:
        return {"check": self.check, "t_pair": list(self.t_pair),
                "values": list(self.values)}


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    violations: tuple[Violation, ...]
    probe_range: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "violations": [v.to_dict() for v in self.violations],
            "probe_range": list(self.probe_range),
        }


def check_admissibility(spec: RateFunctionSpec,
                        n_points: int = ADMISSIBILITY_POINTS) -> AdmissibilityReport:
    """Probe positivity, monotonicity of sqrt(t) g(t), and boundedness of
    g(t) / sqrt(t) on a geometric grid over [t0, 1e12].

    Each check reports its first violating probe pair.  Boundedness cannot be
    certified from finitely many probes; it is flagged when the ratio attains
    its maximum at the final probe while exceeding its starting value, the
    signature of growth toward the boundary.
    """
    hi = min(ADMISSIBILITY_T_MAX, spec.t_max)
    ts = np.geomspace(spec.t0, hi, n_points)
    ts[0] = spec.t0
    g = _eval_array(spec, ts)
    violations: list[Violation] = []

    nonpos = np.flatnonzero(~(g > 0))
    if nonpos.size:
        i = int(nonpos[0])
        violations.append(Violation("positivity", (float(ts[i]), float(ts[i])),
                                    (float(g[i]), float(g[i]))))

    v = np.sqrt(ts) * g
    drops = np.flatnonzero(v[1:] < v[:-1] * (1.0 - _MONOTONE_RTOL))
    if drops.size:
        i = int(drops[0])
        violations.append(Violation("sqrt_t_g_nondecreasing",
                                    (float(ts[i]), float(ts[i + 1])),
                                    (float(v[i]), float(v[i + 1]))))

    ratio = g / np.sqrt(ts)
    i_max = int(np.argmax(ratio))
    if i_max == ts.size - 1 and ratio[-1] > ratio[0] * (1.0 + _MONOTONE_RTOL):
        violations.append(Violation("g_over_sqrt_t_bounded",
                                    (float(ts[0]), float(ts[-1])),
                                    (float(ratio[0]), float(ratio[-1]))))

    return AdmissibilityReport(admissible=not violations,
                               violations=tuple(violations),
                               probe_range=(float(ts[0]), float(ts[-1])))


def require_admissible(spec: RateFunctionSpec) -> None:
    """Raise AdmissibilityError unless spec passes check_admissibility."""
    report = check_admissibility(spec)
    if not report.admissible:
        checks = ", ".join(v.check for v in report.violations)
        raise AdmissibilityError(
            f"boundary function failed admissibility checks: {checks}"
        )
