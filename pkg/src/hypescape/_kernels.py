"""Inner-loop kernels for the drift-implicit radial scheme.

Two interchangeable backends compute the same thing:

  * "numba": per-path scalar loops compiled with numba, parallel over paths;
  * "numpy": pure-numpy fallback, vectorized across paths with an active-set
    Newton iteration.

The backend is chosen at import time from the HYPESCAPE_KERNELS environment
variable ("numba" or "numpy"; default numba when importable) and can be
switched at runtime with set_backend().  Both backends execute the same
per-lane arithmetic in the same order, so results agree to the last bit up
to possible one-ulp differences in the platform's expm1/sinh.

The implicit step solves, for each path,

    x - b - q * coth(x) = 0,   x > 0,

where b = previous value + Brownian increment and q = drift_coeff * dt > 0.
F(x) = x - b - q coth(x) is increasing and concave with F(0+) = -inf, so the
positive root is unique; the solver runs safeguarded Newton inside an
adaptive bracket.  Two closed-form model roots seed the bracket:

    lo: coth(x) ~ 1/x   gives x0 = (b + sqrt(b^2 + 4q)) / 2, F(x0) <= 0;
        additionally F(b + q) <= 0 whenever b + q > 0, so lo = max(x0, b+q);
    hi: coth(x) < 1 + 1/x gives x1 = (b2 + sqrt(b2^2 + 4q)) / 2, b2 = b + q,
        with F(x1) >= 0.

The returned root is clamped to max(root, b + q).  Since coth >= 1, the true
root is >= b + q, and the clamp makes the per-step inequality

    R_{k+1} >= (R_k + dB_k) + q_k

hold exactly in floating point, with the right-hand side evaluated in that
association order.  Iterating it gives bitwise pathwise domination of the
comparison path built by the same accumulation (see sde_sim.comparison_path).
"""

from __future__ import annotations

import math
import os
import warnings

import numpy as np

from .errors import ConfigError, RootFindError

ENV_FLAG = "HYPESCAPE_KERNELS"
BACKEND_NUMBA = "numba"
BACKEND_NUMPY = "numpy"

MAX_NEWTON_ITERS = 100
#: Relative step-to-step tolerance for Newton termination.
_REL_TOL = 1e-15
#: Below this, coth uses the Laurent series 1/x + x/3 - x^3/45.
_COTH_SMALL = 0.01
#: Above this, coth(x) rounds to 1.0 in double precision.
_COTH_ONE = 19.0

# -- numba availability -------------------------------------------------------

try:
    # the TBB version probe warns harmlessly on machines with a stale TBB
    warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False


def available_backends() -> tuple[str, ...]:
    if _HAVE_NUMBA:
        return (BACKEND_NUMBA, BACKEND_NUMPY)
    return (BACKEND_NUMPY,)


def _initial_backend() -> str:
    env = os.environ.get(ENV_FLAG)
    if env is None:
        return BACKEND_NUMBA if _HAVE_NUMBA else BACKEND_NUMPY
    if env not in (BACKEND_NUMBA, BACKEND_NUMPY):
        raise ConfigError(
            f"{ENV_FLAG}={env!r} is not a backend; use "
            f"'{BACKEND_NUMBA}' or '{BACKEND_NUMPY}'"
        )
    if env == BACKEND_NUMBA and not _HAVE_NUMBA:
        raise ConfigError(f"{ENV_FLAG}=numba requested but numba is not importable")
    return env


_ACTIVE_BACKEND = _initial_backend()


def active_backend() -> str:
    return _ACTIVE_BACKEND


def set_backend(name: str) -> str:
    """Select the kernel backend at runtime; returns the previous one."""
    global _ACTIVE_BACKEND
    if name not in (BACKEND_NUMBA, BACKEND_NUMPY):
        raise ConfigError(f"unknown backend {name!r}")
    if name == BACKEND_NUMBA and not _HAVE_NUMBA:
        raise ConfigError("numba backend requested but numba is not importable")
    previous = _ACTIVE_BACKEND
    _ACTIVE_BACKEND = name
    return previous


# -- coth ---------------------------------------------------------------------


def coth(x):
    """Vectorized coth for x > 0, accurate across magnitudes.

    Series below 0.01, exact 1.0 above 19 (where coth - 1 < half an ulp),
    1 + 2 / expm1(2x) in between.
    """
    arr = np.asarray(x, dtype=np.float64)
    one_d = np.atleast_1d(arr)
    out = np.empty_like(one_d)
    small = one_d <= _COTH_SMALL
    big = one_d >= _COTH_ONE
    mid = ~(small | big)
    xs = one_d[small]
    out[small] = 1.0 / xs + xs / 3.0 - xs * xs * xs / 45.0
    out[big] = 1.0
    xm = one_d[mid]
    out[mid] = 1.0 + 2.0 / np.expm1(2.0 * xm)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


# -- numpy backend ------------------------------------------------------------


def _solve_step_numpy(b: np.ndarray, q: float,
                      max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized implicit step: roots of x - b - q coth(x) per lane.

    Returns (root, ok); lanes that fail to converge carry NaN and ok=False.
    """
    b2 = b + q
    # Positive roots of x^2 - v x - q, evaluated in the cancellation-free
    # branch: (v + sqrt(v^2+4q))/2 for v >= 0, 2q/(sqrt(v^2+4q) - v) below.
    disc = np.sqrt(b * b + 4.0 * q)
    x0 = np.where(b >= 0.0, 0.5 * (b + disc), 2.0 * q / (disc - b))
    lo = np.maximum(x0, b2)
    disc2 = np.sqrt(b2 * b2 + 4.0 * q)
    hi = np.where(b2 >= 0.0, 0.5 * (b2 + disc2), 2.0 * q / (disc2 - b2))

    root = np.full(b.shape, np.nan)
    ok = np.zeros(b.shape, dtype=bool)
    idx = np.arange(b.size)
    xa = hi.copy()
    loa = lo.copy()
    hia = hi.copy()
    ba = b.copy()

    for _ in range(max_iter):
        c = coth(xa)
        F = xa - ba - q * c
        pos = F > 0.0
        neg = F < 0.0
        hia = np.where(pos, xa, hia)
        loa = np.where(neg, xa, loa)
        zero = ~(pos | neg)
        s = np.sinh(np.minimum(xa, _COTH_ONE))
        fp = np.where(xa >= _COTH_ONE, 1.0, 1.0 + q / (s * s))
        xn = xa - F / fp
        outside = ~((loa < xn) & (xn < hia))
        xn = np.where(outside, 0.5 * (loa + hia), xn)
        done = zero | (np.abs(xn - xa) <= _REL_TOL * xa)
        xn = np.where(zero, xa, xn)
        if np.any(done):
            sel = idx[done]
            root[sel] = xn[done]
            ok[sel] = True
            keep = ~done
            if not np.any(keep):
                break
            idx = idx[keep]
            xa = xn[keep]
            loa = loa[keep]
            hia = hia[keep]
            ba = ba[keep]
        else:
            xa = xn

    np.maximum(root, b2, out=root, where=ok)
    return root, ok


def _radial_steps_numpy(r_init: float, a: float, dts: np.ndarray, dW: np.ndarray,
                        max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    n_paths, n_steps = dW.shape
    out = np.empty((n_paths, n_steps + 1))
    out[:, 0] = r_init
    fail = np.full(n_paths, -1, dtype=np.int64)
    alive = np.ones(n_paths, dtype=bool)
    x = np.full(n_paths, float(r_init))
    for k in range(n_steps):
        q = a * dts[k]
        ai = np.flatnonzero(alive)
        if ai.size == 0:
            out[:, k + 1] = np.nan
            continue
        col = np.full(n_paths, np.nan)
        b = x[ai] + dW[ai, k]
        root, ok = _solve_step_numpy(b, q, max_iter)
        col[ai] = root
        out[:, k + 1] = col
        x[ai] = root
        bad = ai[~ok]
        if bad.size:
            fail[bad] = k
            alive[bad] = False
    return out, fail


# -- numba backend ------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _coth_nb(x: float) -> float:
        if x <= _COTH_SMALL:
            return 1.0 / x + x / 3.0 - x * x * x / 45.0
        if x >= _COTH_ONE:
            return 1.0
        return 1.0 + 2.0 / math.expm1(2.0 * x)

    @njit(cache=True)
    def _solve_step_nb(b: float, q: float, max_iter: int):
        b2 = b + q
        # cancellation-free quadratic roots, as in the numpy backend
        disc = math.sqrt(b * b + 4.0 * q)
        x0 = 0.5 * (b + disc) if b >= 0.0 else 2.0 * q / (disc - b)
        lo = x0 if x0 > b2 else b2
        disc2 = math.sqrt(b2 * b2 + 4.0 * q)
        hi = 0.5 * (b2 + disc2) if b2 >= 0.0 else 2.0 * q / (disc2 - b2)
        x = hi
        for _ in range(max_iter):
            c = _coth_nb(x)
            F = x - b - q * c
            if F > 0.0:
                hi = x
            elif F < 0.0:
                lo = x
            else:
                return (x if x > b2 else b2), True
            if x >= _COTH_ONE:
                fp = 1.0
            else:
                s = math.sinh(x)
                fp = 1.0 + q / (s * s)
            xn = x - F / fp
            if not (lo < xn and xn < hi):
                xn = 0.5 * (lo + hi)
            if abs(xn - x) <= _REL_TOL * x:
                return (xn if xn > b2 else b2), True
            x = xn
        return x, False

    @njit(cache=True, parallel=True)
    def _radial_steps_nb(r_init: float, a: float, dts: np.ndarray, dW: np.ndarray,
                         out: np.ndarray, fail: np.ndarray, max_iter: int) -> None:
        n_paths, n_steps = dW.shape
        for i in prange(n_paths):
            x = r_init
            out[i, 0] = x
            for k in range(n_steps):
                b = x + dW[i, k]
                q = a * dts[k]
                root, converged = _solve_step_nb(b, q, max_iter)
                if not converged:
                    fail[i] = k
                    for j in range(k + 1, n_steps + 1):
                        out[i, j] = np.nan
                    break
                out[i, k + 1] = root
                x = root


# -- public dispatch ----------------------------------------------------------


def implicit_step(b, q: float, *, max_iter: int = MAX_NEWTON_ITERS):
    """Solve one implicit step for scalar or 1-d b (numpy path).

    Used by the envelope refinement; small inputs, so the vectorized
    solver is always adequate here.
    """
    if not q > 0:
        raise ConfigError(f"q must be positive, got {q}")
    arr = np.atleast_1d(np.asarray(b, dtype=np.float64))
    root, ok = _solve_step_numpy(arr, float(q), max_iter)
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        raise RootFindError(
            f"implicit step failed to converge in {max_iter} iterations "
            f"(lane {i}, b={arr[i]!r}, q={q!r})"
        )
    if np.asarray(b).ndim == 0:
        return float(root[0])
    return root.reshape(np.asarray(b).shape)


def radial_steps(r_init: float, drift_coeff: float, dts: np.ndarray,
                 increments: np.ndarray, *, max_iter: int = MAX_NEWTON_ITERS,
                 backend: str | None = None) -> np.ndarray:
    """Run the drift-implicit scheme for all paths.

    Parameters: starting radius, drift coefficient (d - 1) / 2, step sizes
    (n_steps,), Brownian increments (n_paths, n_steps).  Returns path values
    with shape (n_paths, n_steps + 1).  Raises RootFindError, with path and
    step context, if any lane fails to converge.
    """
    dts = np.ascontiguousarray(dts, dtype=np.float64)
    increments = np.ascontiguousarray(increments, dtype=np.float64)
    if increments.ndim != 2 or dts.ndim != 1 or increments.shape[1] != dts.size:
        raise ConfigError(
            f"shape mismatch: increments {increments.shape} vs dts {dts.shape}"
        )
    if not np.all(dts > 0):
        raise ConfigError("all step sizes must be positive")
    if not (r_init >= 0 and math.isfinite(r_init)):
        raise ConfigError(f"r_init must be finite and >= 0, got {r_init}")
    if not (drift_coeff > 0 and math.isfinite(drift_coeff)):
        raise ConfigError(f"drift_coeff must be finite and > 0, got {drift_coeff}")

    name = backend if backend is not None else _ACTIVE_BACKEND
    if name == BACKEND_NUMBA:
        if not _HAVE_NUMBA:
            raise ConfigError("numba backend requested but numba is not importable")
        n_paths, n_steps = increments.shape
        out = np.empty((n_paths, n_steps + 1))
        fail = np.full(n_paths, -1, dtype=np.int64)
        _radial_steps_nb(float(r_init), float(drift_coeff), dts, increments,
                         out, fail, max_iter)
    elif name == BACKEND_NUMPY:
        out, fail = _radial_steps_numpy(float(r_init), float(drift_coeff), dts,
                                        increments, max_iter)
    else:
        raise ConfigError(f"unknown backend {name!r}")

    if np.any(fail >= 0):
        i = int(np.flatnonzero(fail >= 0)[0])
        k = int(fail[i])
        t_k = float(dts[:k].sum())
        raise RootFindError(
            f"implicit step failed to converge in {max_iter} iterations: "
            f"path {i}, step {k}, t={t_k:.6g}, dt={float(dts[k]):.6g}, "
            f"previous value {float(out[i, k]):.6g}"
        )
    return out
