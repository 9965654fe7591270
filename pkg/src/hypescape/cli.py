"""Command-line interface.

Subcommands mirror the library surface: simulate, classify, envelope, lil,
drift, crosscheck, and run (a config-driven pipeline that chains the stages
and writes a manifest with artifact checksums).  Every subcommand prints one
JSON document to stdout; failures print a JSON error record to stderr and
exit with 2 (invalid configuration or arguments), 3 (numerical failure) or
4 (I/O failure).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path as FsPath

from . import __version__, _kernels
from .ambient_hyperbolic import ks_crosscheck, simulate_ambient
from .envelope_stats import (
    MODE_LOWER_CROSSING,
    MODE_TWO_SIDED,
    bm_kolmogorov_check,
    drift_limit,
    lil_statistic,
    lower_containment,
    upper_containment,
)
from .errors import ConfigError, HypescapeError, RootFindError
from .grids import PRESETS, StepRule
from .kolmogorov_test import DEFAULT_T_MAX, classify, classify_shifted
from .pathio import read_paths, write_paths_bin, write_paths_csv
from .rate_functions import DEFAULT_T0, RateFunctionSpec
from .sde_sim import KIND_BM1D, SimConfig, simulate_bm1d, simulate_radial

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of printing usage + exiting itself."""

    def error(self, message: str):
        raise ConfigError(message)


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_json(path: FsPath, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="ascii")


def _sha256(path: FsPath) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _step_rule_from_args(args) -> StepRule:
    if args.preset is not None:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; have {sorted(PRESETS)}")
        rule = PRESETS[args.preset]
        if args.dt_max is not None or args.rel is not None or args.dt_max_late is not None:
            raise ConfigError("give either --preset or explicit step caps, not both")
        return rule
    kwargs = {}
    if args.dt_max is not None:
        kwargs["dt_max"] = args.dt_max
    if args.rel is not None:
        kwargs["rel"] = args.rel
    if args.dt_max_late is not None:
        kwargs["dt_max_late"] = args.dt_max_late
    return StepRule(**kwargs)


def _add_step_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="named step rule (overrides the explicit caps)")
    p.add_argument("--dt-max", type=float, default=None, help="uniform mesh up to t=1")
    p.add_argument("--rel", type=float, default=None, help="relative step cap dt <= rel*t")
    p.add_argument("--dt-max-late", type=float, default=None,
                   help="absolute cap on late steps (default unbounded)")


def _add_boundary_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True,
                   choices=["constant", "sqrtloglog", "kolmogorov_erdos", "custom"])
    p.add_argument("--param", type=float, default=None,
                   help="family parameter (a or c); not used by custom")
    p.add_argument("--t0", type=float, default=DEFAULT_T0)
    p.add_argument("--knots-t", type=str, default=None,
                   help="comma-separated knot times (custom family)")
    p.add_argument("--knots-g", type=str, default=None,
                   help="comma-separated knot values (custom family)")


def _boundary_from_args(args) -> RateFunctionSpec:
    cfg: dict = {"family": args.family, "t0": args.t0}
    if args.family == "custom":
        if not args.knots_t or not args.knots_g:
            raise ConfigError("custom family needs --knots-t and --knots-g")
        cfg["knots_t"] = [float(v) for v in args.knots_t.split(",")]
        cfg["knots_g"] = [float(v) for v in args.knots_g.split(",")]
    else:
        if args.param is None:
            raise ConfigError(f"family {args.family!r} needs --param")
        cfg["param"] = args.param
    return RateFunctionSpec.from_config(cfg)


def _out_dir(args) -> FsPath | None:
    if args.out_dir is None:
        return None
    p = FsPath(args.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _apply_threads(threads: int | None) -> None:
    if threads is None:
        return
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    if _kernels.active_backend() == _kernels.BACKEND_NUMBA:
        import numba

        try:
            numba.set_num_threads(threads)
        except ValueError as exc:
            raise ConfigError(f"cannot use {threads} threads: {exc}") from exc


# -- subcommand implementations -----------------------------------------------


def _cmd_simulate(args) -> dict:
    rule = _step_rule_from_args(args)
    config = SimConfig(d=args.d, horizon=args.horizon, r_init=args.r_init,
                       step_rule=rule, seed=args.seed if args.seed is not None else 0,
                       path_count=args.paths)
    if args.kind == "radial":
        bundle = simulate_radial(config).radial
    elif args.kind == "bm":
        bundle = simulate_bm1d(config)
    elif args.kind == "ambient":
        bundle = simulate_ambient(config)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown kind {args.kind!r}")
    summary = {
        "kind": bundle.kind,
        "d": config.d,
        "horizon": config.horizon,
        "r_init": config.r_init,
        "seed": config.seed,
        "n_paths": bundle.n_paths,
        "n_times": bundle.grid.n_times,
        "backend": _kernels.active_backend(),
        "terminal": [float(v) for v in bundle.terminal],
    }
    out = _out_dir(args)
    if out is not None:
        ext = "bin" if args.format == "bin" else "csv"
        paths_file = out / f"paths_{bundle.kind}.{ext}"
        if args.format == "bin":
            write_paths_bin(paths_file, bundle)
        else:
            write_paths_csv(paths_file, bundle)
        summary["paths_file"] = paths_file.name
        _write_json(out / "simulate_summary.json", summary)
    return summary


def _cmd_classify(args) -> dict:
    spec = _boundary_from_args(args)
    if args.shift is not None:
        verdict = classify_shifted(spec, args.shift, args.direction, t_max=args.t_max)
    else:
        verdict = classify(spec, t_max=args.t_max)
    record = verdict.to_dict()
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "classify.json", record)
    return record


def _cmd_envelope(args) -> dict:
    spec = _boundary_from_args(args)
    bundle = read_paths(args.paths_file)
    refine = not args.no_refine
    if args.mode == "upper":
        report = upper_containment(bundle, spec, args.d, args.t_start,
                                   t_end=args.t_end, refine=refine)
    elif args.mode == "lower":
        report = lower_containment(bundle, spec, args.d, args.t_start,
                                   t_end=args.t_end, refine=refine)
    elif args.mode == "bm-two-sided":
        report = bm_kolmogorov_check(bundle, spec, args.t_start, mode=MODE_TWO_SIDED,
                                     t_end=args.t_end, refine=refine)
    else:
        report = bm_kolmogorov_check(bundle, spec, args.t_start,
                                     mode=MODE_LOWER_CROSSING,
                                     t_end=args.t_end, refine=refine)
    record = report.to_dict()
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "envelope.json", record)
    return record


def _cmd_lil(args) -> dict:
    bundle = read_paths(args.paths_file)
    report = lil_statistic(bundle, args.d, args.t_start, t_end=args.t_end)
    record = report.to_dict()
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "lil.json", record)
    return record


def _cmd_drift(args) -> dict:
    bundle = read_paths(args.paths_file)
    record = drift_limit(bundle).to_dict()
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "drift.json", record)
    return record


def _cmd_crosscheck(args) -> dict:
    rule = _step_rule_from_args(args)
    report = ks_crosscheck(args.d, args.t, args.paths,
                           args.seed if args.seed is not None else 0,
                           step_rule=rule, alpha=args.alpha)
    record = report.to_dict()
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "crosscheck.json", record)
    return record


# -- run pipeline ---------------------------------------------------------------

_STAGES = ("simulate", "classify", "envelope", "lil", "drift", "crosscheck")


def _boundary_from_config(cfg: dict) -> RateFunctionSpec:
    return RateFunctionSpec.from_config(cfg)


def _rule_from_config(cfg: dict | str | None) -> StepRule:
    if cfg is None:
        return PRESETS["medium"]
    if isinstance(cfg, str):
        if cfg not in PRESETS:
            raise ConfigError(f"unknown preset {cfg!r}; have {sorted(PRESETS)}")
        return PRESETS[cfg]
    late = cfg.get("dt_max_late", math.inf)
    if isinstance(late, str):
        late = math.inf if late.lower() in ("inf", "infinity") else float(late)
    defaults = StepRule()
    return StepRule(dt_max=float(cfg.get("dt_max", defaults.dt_max)),
                    rel=float(cfg.get("rel", defaults.rel)),
                    dt_max_late=late)


def _cmd_run(args) -> tuple[dict, int]:
    t_begin = time.perf_counter()
    text = FsPath(args.config).read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - {"seed", "out_dir", "threads", "format", *_STAGES}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    seed = int(args.seed) if args.seed is not None else int(cfg.get("seed", 0))
    out_name = args.out_dir if args.out_dir is not None else cfg.get("out_dir")
    if out_name is None:
        raise ConfigError("run needs an out_dir (config key or --out-dir)")
    threads = args.threads if args.threads is not None else cfg.get("threads")
    _apply_threads(threads)
    fmt = cfg.get("format", "bin")
    if fmt not in ("bin", "csv"):
        raise ConfigError(f"format must be 'bin' or 'csv', got {fmt!r}")

    requested = [s for s in _STAGES if s in cfg]
    if not requested:
        raise ConfigError("no stages requested; add at least one stage block")
    for stage in ("envelope", "lil", "drift"):
        if stage in cfg and "simulate" not in cfg:
            raise ConfigError(f"stage {stage!r} needs the simulate stage")

    out = FsPath(out_name)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, FsPath] = {}
    timings: dict[str, float] = {}
    results: dict[str, dict] = {}
    paired = None

    if "simulate" in cfg:
        s = dict(cfg["simulate"])
        kind = s.pop("kind", "radial")
        rule = _rule_from_config(s.pop("step_rule", s.pop("preset", None)))
        config = SimConfig(d=int(s.pop("d")), horizon=float(s.pop("horizon")),
                           r_init=float(s.pop("r_init", 0.0)), step_rule=rule,
                           seed=seed, path_count=int(s.pop("paths")))
        if s:
            raise ConfigError(f"unknown simulate keys: {sorted(s)}")
        t0 = time.perf_counter()
        if kind == "radial":
            paired = simulate_radial(config)
            bundle = paired.radial
        elif kind == "bm":
            bundle = simulate_bm1d(config)
        elif kind == "ambient":
            bundle = simulate_ambient(config)
        else:
            raise ConfigError(f"unknown simulate kind {kind!r}")
        ext = "bin" if fmt == "bin" else "csv"
        paths_file = out / f"paths_{bundle.kind}.{ext}"
        if fmt == "bin":
            write_paths_bin(paths_file, bundle)
        else:
            write_paths_csv(paths_file, bundle)
        artifacts[f"paths_{bundle.kind}"] = paths_file
        results["simulate"] = {
            "kind": bundle.kind, "d": config.d, "horizon": config.horizon,
            "r_init": config.r_init, "seed": seed, "n_paths": bundle.n_paths,
            "n_times": bundle.grid.n_times, "backend": _kernels.active_backend(),
            "paths_file": paths_file.name,
            "terminal": [float(v) for v in bundle.terminal],
        }
        timings["simulate"] = time.perf_counter() - t0
        sim_bundle = bundle
        sim_config = config

    if "classify" in cfg:
        c = dict(cfg["classify"])
        shift = c.pop("shift", None)
        direction = c.pop("direction", "minus")
        t_max = float(c.pop("t_max", DEFAULT_T_MAX))
        spec = _boundary_from_config(c)
        t0 = time.perf_counter()
        if shift is not None:
            verdict = classify_shifted(spec, float(shift), direction, t_max=t_max)
        else:
            verdict = classify(spec, t_max=t_max)
        results["classify"] = verdict.to_dict()
        timings["classify"] = time.perf_counter() - t0

    if "envelope" in cfg:
        e = dict(cfg["envelope"])
        mode = str(e.pop("mode", "upper")).replace("-", "_")
        t_start = float(e.pop("t_start"))
        t_end = e.pop("t_end", None)
        t_end = float(t_end) if t_end is not None else None
        refine = bool(e.pop("refine", True))
        spec = _boundary_from_config(e)
        t0 = time.perf_counter()
        if mode in ("upper", "lower"):
            target = paired if paired is not None else sim_bundle
            fn = upper_containment if mode == "upper" else lower_containment
            report = fn(target, spec, sim_config.d, t_start, t_end=t_end,
                        refine=refine)
        elif mode in ("bm_two_sided", "bm_lower_crossing"):
            if paired is None:
                if sim_bundle.kind != KIND_BM1D:
                    raise ConfigError(f"mode {mode!r} needs bm paths")
                target = sim_bundle
            else:
                target = paired.bm
            report = bm_kolmogorov_check(target, spec, t_start,
                                         mode=mode.removeprefix("bm_"),
                                         t_end=t_end, refine=refine)
        else:
            raise ConfigError(f"unknown envelope mode {mode!r}")
        results["envelope"] = report.to_dict()
        timings["envelope"] = time.perf_counter() - t0

    if "lil" in cfg:
        lcfg = dict(cfg["lil"])
        t_start = float(lcfg.pop("t_start", 16.0))
        t_end = lcfg.pop("t_end", None)
        t_end = float(t_end) if t_end is not None else None
        if lcfg:
            raise ConfigError(f"unknown lil keys: {sorted(lcfg)}")
        if sim_bundle.kind == KIND_BM1D:
            raise ConfigError("lil stage needs radial or ambient paths")
        t0 = time.perf_counter()
        results["lil"] = lil_statistic(sim_bundle, sim_config.d, t_start,
                                       t_end=t_end).to_dict()
        timings["lil"] = time.perf_counter() - t0

    if "drift" in cfg:
        dcfg = dict(cfg["drift"])
        if dcfg:
            raise ConfigError(f"unknown drift keys: {sorted(dcfg)}")
        if sim_bundle.kind == KIND_BM1D:
            raise ConfigError("drift stage needs radial or ambient paths")
        t0 = time.perf_counter()
        results["drift"] = drift_limit(sim_bundle).to_dict()
        timings["drift"] = time.perf_counter() - t0

    if "crosscheck" in cfg:
        x = dict(cfg["crosscheck"])
        rule = _rule_from_config(x.pop("step_rule", x.pop("preset", "fine")))
        t0 = time.perf_counter()
        report = ks_crosscheck(int(x.pop("d")), float(x.pop("t")),
                               int(x.pop("paths")), seed, step_rule=rule,
                               alpha=float(x.pop("alpha", 0.01)))
        if x:
            raise ConfigError(f"unknown crosscheck keys: {sorted(x)}")
        results["crosscheck"] = report.to_dict()
        timings["crosscheck"] = time.perf_counter() - t0

    for name in requested:
        if name == "simulate":
            continue
        _write_json(out / f"{name}.json", results[name])
        artifacts[name] = out / f"{name}.json"
    if "simulate" in results:
        _write_json(out / "simulate_summary.json", results["simulate"])
        artifacts["simulate_summary"] = out / "simulate_summary.json"

    manifest = {
        "tool": "hypescape",
        "version": __version__,
        "seed": seed,
        "backend": _kernels.active_backend(),
        "threads": threads,
        "format": fmt,
        "stages": requested,
        "config": cfg,
        # Paths are relative to the output directory so the artifact table
        # is byte-identical wherever the run lands.
        "artifacts": {
            name: {"path": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size}
            for name, p in sorted(artifacts.items())
        },
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "total_s": round(time.perf_counter() - t_begin, 6),
    }
    _write_json(out / "run_manifest.json", manifest)
    return manifest, EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypescape",
                     description="Escape-rate laboratory for hyperbolic Brownian motion")
    parser.add_argument("--version", action="version", version=f"hypescape {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    # None means "not given": run falls back to the config file's seed, the
    # other commands fall back to 0.
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", type=str, default=None)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for the numba backend")

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate paths and write them out")
    p.add_argument("--kind", choices=["radial", "bm", "ambient"], default="radial")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--r-init", type=float, default=0.0)
    p.add_argument("--format", choices=["csv", "bin"], default="csv")
    _add_step_args(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("classify", parents=[common],
                       help="run the integral test on a boundary function")
    _add_boundary_args(p)
    p.add_argument("--shift", type=float, default=None,
                   help="classify g -+ shift/sqrt(t) instead of g")
    p.add_argument("--direction", choices=["minus", "plus"], default="minus")
    p.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("envelope", parents=[common],
                       help="containment statistics for stored paths")
    p.add_argument("--paths-file", required=True)
    p.add_argument("--mode", choices=["upper", "lower", "bm-two-sided",
                                      "bm-lower-crossing"], default="upper")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--t-start", type=float, required=True)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--no-refine", action="store_true")
    _add_boundary_args(p)
    p.set_defaults(fn=_cmd_envelope)

    p = sub.add_parser("lil", parents=[common],
                       help="normalized supremum statistics for stored paths")
    p.add_argument("--paths-file", required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--t-start", type=float, default=16.0)
    p.add_argument("--t-end", type=float, default=None)
    p.set_defaults(fn=_cmd_lil)

    p = sub.add_parser("drift", parents=[common],
                       help="terminal slope statistics for stored paths")
    p.add_argument("--paths-file", required=True)
    p.set_defaults(fn=_cmd_drift)

    p = sub.add_parser("crosscheck", parents=[common],
                       help="KS comparison of radial vs ambient simulators")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.01)
    _add_step_args(p)
    p.set_defaults(fn=_cmd_crosscheck)

    p = sub.add_parser("run", parents=[common],
                       help="execute a JSON-configured pipeline")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            manifest, code = _cmd_run(args)
            _emit(manifest)
            return code
        _apply_threads(args.threads)
        record = args.fn(args)
        _emit(record)
        return EXIT_OK
    except RootFindError as exc:
        _fail(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    except (ConfigError, HypescapeError) as exc:
        _fail(exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except OSError as exc:
        _fail(exc, EXIT_IO)
        return EXIT_IO


def _fail(exc: Exception, code: int) -> None:
    sys.stderr.write(json.dumps({
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }, sort_keys=True) + "\n")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
