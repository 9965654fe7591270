"""Benchmark the radial stepper backends against each other.

Runs the same workload (paths x steps of the drift-implicit scheme) under
the numba backend and the pure-numpy fallback and reports wall times,
steps/second and the speedup.  The numba backend is warmed first so JIT
compilation is not billed to the measurement.

    python benchmarks/bench_kernels.py [--paths N] [--horizon T] [--preset P]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hypescape import PRESETS, available_backends, build_grid
from hypescape import _kernels
from hypescape.rng import STAGE_RADIAL, gaussian_increments


def _run(backend: str, r_init, a, dts, inc, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        _kernels.radial_steps(r_init, a, dts, inc, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=256)
    ap.add_argument("--horizon", type=float, default=50.0)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="fine")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    grid = build_grid(args.horizon, PRESETS[args.preset])
    inc = gaussian_increments(args.seed, STAGE_RADIAL, args.paths, grid.dts)
    a = 1.0  # d = 3
    n_steps = args.paths * grid.dts.size
    print(f"workload: {args.paths} paths x {grid.dts.size} steps "
          f"({n_steps:,} implicit solves), preset {args.preset}")

    backends = available_backends()
    if "numba" in backends:
        # warm the JIT outside the timed region
        _kernels.radial_steps(0.0, a, grid.dts[:4], inc[:2, :4], backend="numba")

    times = {}
    for backend in backends:
        times[backend] = _run(backend, 0.0, a, grid.dts, inc, args.repeats)

    ref = times.get("numpy")
    print(f"{'backend':<8} {'seconds':>10} {'steps/s':>14} {'speedup':>9}")
    for backend in backends:
        t = times[backend]
        speed = n_steps / t
        rel = f"{ref / t:6.2f}x" if ref else "-"
        print(f"{backend:<8} {t:>10.4f} {speed:>14,.0f} {rel:>9}")

    outs = [
        _kernels.radial_steps(0.0, a, grid.dts, inc, backend=b) for b in backends
    ]
    if len(outs) == 2:
        rel = np.max(np.abs(outs[0] - outs[1]) / np.maximum(np.abs(outs[0]), 1e-300))
        print(f"max relative backend difference: {rel:.3e}")


if __name__ == "__main__":
    main()
