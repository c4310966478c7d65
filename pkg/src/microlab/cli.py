"""Command-line front end.

Nine subcommands tie the library into reproducible experiments: energy,
construct, limit-energy, recover, minimize, sweep, fit, sandwich, cover.
Inputs come from a JSON config (strictly validated, unknown keys rejected)
plus flags that mirror the config keys; every run writes its artifacts and a
manifest (config hash, versions, timings) into the output directory.  Data
files are CSV/JSON with fixed float formatting so identical config + seed
reproduces identical bytes; figures are rendered alongside unless --no-plot.
Failures exit nonzero with a one-line JSON error on stderr.
"""

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time
from typing import List, Optional

import numpy as np
import scipy

from . import __version__
from .constructions import (
    GEOMETRY_PINCH,
    GEOMETRY_SPLIT,
    branching_profile,
    constant_profile,
    example_sequence,
    recovery_sequence,
)
from .covering import cover_to_dict, verify_cover, whitney_cover
from .energy import EnergyParams, energy_analytic, energy_grid
from .grids import GridField, read_field, write_field
from .limits import limit_energy, sbv_from_dict, validate
from .minimizer import MinimizeOptions, minimize
from .profiles import profile_from_dict, profile_sample, profile_to_dict
from .scaling import (
    CONSTRUCTION_BRANCHING,
    CONSTRUCTION_CONSTANT,
    fit_exponent,
    read_sweep_csv,
    sandwich_check,
    sweep,
    write_sweep_csv,
)

# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

_SCHEMA = {
    "params": {"p", "theta", "epsilon", "sigma"},
    "grid": {"nx", "ny"},
    "sweep": {"epsilons", "log_range"},
    "minimize": {"nx", "ny", "delta_schedule", "max_iter", "tol", "armijo",
                 "shrink", "grow", "max_backtracks", "seed",
                 "exact_headroom"},
    "output": None,  # plain string
}


def validate_config(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    for key, val in doc.items():
        if key not in _SCHEMA:
            raise ValueError(f"unknown config key: {key}")
        if key == "output":
            if not isinstance(val, str):
                raise ValueError("config key 'output' must be a string")
            continue
        if not isinstance(val, dict):
            raise ValueError(f"config section {key!r} must be an object")
        for sub in val:
            if sub not in _SCHEMA[key]:
                raise ValueError(f"unknown config key: {key}.{sub}")
    return doc


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return validate_config(json.load(fh))


def _first(*vals):
    for v in vals:
        if v is not None:
            return v
    return None


def resolve_params(cfg: dict, args, default_p=2.0,
                   default_theta=0.25) -> EnergyParams:
    sec = cfg.get("params", {})
    p = float(_first(getattr(args, "p", None), sec.get("p"), default_p))
    theta = float(_first(getattr(args, "theta", None), sec.get("theta"),
                         default_theta))
    eps = _first(getattr(args, "epsilon", None), sec.get("epsilon"))
    sigma = _first(getattr(args, "sigma", None), sec.get("sigma"))
    if eps is None and sigma is None:
        raise ValueError("params need epsilon (unrescaled) or sigma (rescaled)")
    if eps is not None:
        prm = EnergyParams.unrescaled(p, theta, float(eps))
        if sigma is not None and not math.isclose(prm.sigma, float(sigma),
                                                  rel_tol=1e-9):
            raise ValueError("epsilon and sigma disagree: need epsilon = "
                             "sigma * theta^p")
        return prm
    return EnergyParams.rescaled(p, theta, float(sigma))


def resolve_threads(args) -> int:
    n = getattr(args, "threads", None)
    if n is None:
        env = os.environ.get("MICROLAB_THREADS")
        n = int(env) if env else 0
    if n == 0:
        n = os.cpu_count() or 1
    if n < 1:
        raise ValueError("--threads must be >= 0")
    return n


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def _outdir(cfg: dict, args) -> str:
    out = _first(getattr(args, "out", None), cfg.get("output"), "out")
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True))
        fh.write("\n")


def _write_manifest(outdir: str, command: str, effective: dict,
                    artifacts: List[str], t0: float) -> None:
    canon = json.dumps(effective, sort_keys=True).encode()
    _write_json(os.path.join(outdir, "manifest.json"), {
        "command": command,
        "config": effective,
        "config_hash": hashlib.sha256(canon).hexdigest(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "microlab": __version__,
        },
        "artifacts": sorted(artifacts),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    })


def _fmt(x: float) -> str:
    return "%.17g" % x


def _plot_profile(profile, path: str) -> None:
    from .reports import plot_field
    vals = profile_sample(profile, *np.meshgrid(np.linspace(0, 1, 257),
                                                np.linspace(0, 1, 257)))
    plot_field(GridField(257, 257, vals, None), path)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_energy(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    params = resolve_params(cfg, args)
    out = _outdir(cfg, args)
    if (args.field is None) == (args.profile is None):
        raise ValueError("energy needs exactly one of --field / --profile")
    artifacts = ["energy.json"]
    if args.field is not None:
        field = read_field(args.field)
        bd = energy_grid(field, params)
        source = {"kind": "grid", "path": args.field,
                  "nx": field.nx, "ny": field.ny}
        if not args.no_plot:
            from .reports import plot_field
            plot_field(field, os.path.join(out, "field.png"))
            artifacts.append("field.png")
    else:
        with open(args.profile) as fh:
            profile = profile_from_dict(json.load(fh))
        bd = energy_analytic(profile, params)
        source = {"kind": "profile", "path": args.profile}
        if not args.no_plot:
            _plot_profile(profile, os.path.join(out, "field.png"))
            artifacts.append("field.png")
    _write_json(os.path.join(out, "energy.json"),
                {"params": params.to_dict(), "source": source,
                 "breakdown": bd.to_dict()})
    _write_manifest(out, "energy", {"params": params.to_dict(),
                                    "source": source, "seed": args.seed},
                    artifacts, t0)
    return 0


def cmd_construct(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    artifacts = ["profile.json"]
    meta = {"kind": args.kind}
    if args.kind == "constant":
        profile = constant_profile()
    elif args.kind == "branching":
        params = resolve_params(cfg, args)
        profile, spec = branching_profile(params, ratio=args.ratio,
                                          geometry=args.geometry)
        _write_json(os.path.join(out, "assembly.json"), spec.to_dict())
        artifacts.append("assembly.json")
        meta.update(params=params.to_dict(), ratio=spec.ratio,
                    base_periods=spec.base_periods, depth=spec.depth)
    elif args.kind == "example":
        theta = float(_first(args.theta, cfg.get("params", {}).get("theta"),
                             0.25))
        p = float(_first(args.p, cfg.get("params", {}).get("p"), 2.0))
        profile = example_sequence(theta, args.alpha, p)
        meta.update(theta=theta, alpha=args.alpha, p=p)
    elif args.kind == "recovery":
        if args.limit is None:
            raise ValueError("construct recovery needs --limit FILE")
        with open(args.limit) as fh:
            u = sbv_from_dict(json.load(fh))
        theta = float(_first(args.theta, cfg.get("params", {}).get("theta")))
        profile = recovery_sequence(u, theta)
        meta.update(theta=theta, limit=args.limit)
    else:
        raise ValueError(f"unknown construct kind {args.kind!r}")
    _write_json(os.path.join(out, "profile.json"), profile_to_dict(profile))
    if not args.no_plot:
        _plot_profile(profile, os.path.join(out, "profile.png"))
        artifacts.append("profile.png")
    _write_manifest(out, "construct", {**meta, "seed": args.seed},
                    artifacts, t0)
    return 0


def cmd_limit_energy(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    with open(args.limit) as fh:
        u = sbv_from_dict(json.load(fh))
    report = validate(u)
    _write_json(os.path.join(out, "limit_report.json"), report.to_dict())
    if not report.passed:
        _write_manifest(out, "limit-energy", {"limit": args.limit},
                        ["limit_report.json"], t0)
        raise ValueError("; ".join(report.issues))
    bd = limit_energy(u)
    _write_json(os.path.join(out, "limit_energy.json"),
                {"p": u.p, "sigma": u.sigma, "breakdown": bd.to_dict()})
    _write_manifest(out, "limit-energy",
                    {"limit": args.limit, "p": u.p, "sigma": u.sigma},
                    ["limit_report.json", "limit_energy.json"], t0)
    return 0


def cmd_recover(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    with open(args.limit) as fh:
        u = sbv_from_dict(json.load(fh))
    theta = float(_first(args.theta, cfg.get("params", {}).get("theta")))
    profile = recovery_sequence(u, theta)
    params = EnergyParams.rescaled(u.p, theta, u.sigma)
    bd = energy_analytic(profile, params)
    limit_bd = limit_energy(u)
    artifacts = ["profile.json", "recovery.json"]
    _write_json(os.path.join(out, "profile.json"), profile_to_dict(profile))
    _write_json(os.path.join(out, "recovery.json"), {
        "theta": theta,
        "params": params.to_dict(),
        "recovered": bd.to_dict(),
        "limit": limit_bd.to_dict(),
        "deviation": bd.total - limit_bd.total,
    })
    if not args.no_plot:
        _plot_profile(profile, os.path.join(out, "profile.png"))
        artifacts.append("profile.png")
    _write_manifest(out, "recover", {"limit": args.limit, "theta": theta},
                    artifacts, t0)
    return 0


def _minimize_options(cfg: dict, args) -> MinimizeOptions:
    grid = cfg.get("grid", {})
    sec = dict(cfg.get("minimize", {}))
    sec.setdefault("nx", grid.get("nx", 64))
    sec.setdefault("ny", grid.get("ny", 64))
    sec.setdefault("seed", args.seed)
    if getattr(args, "nx", None) is not None:
        sec["nx"] = args.nx
    if getattr(args, "ny", None) is not None:
        sec["ny"] = args.ny
    if "delta_schedule" in sec:
        sec["delta_schedule"] = tuple(sec["delta_schedule"])
    return MinimizeOptions(**sec)


def cmd_minimize(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    params = resolve_params(cfg, args)
    opts = _minimize_options(cfg, args)
    out = _outdir(cfg, args)
    result = minimize(params, opts, args.init)
    write_field(result.field, os.path.join(out, "field.mfield"))
    with open(os.path.join(out, "trace.csv"), "w") as fh:
        fh.write("iter,delta_s,energy_smooth,energy_exact\n")
        for it, d, es, ee in result.trace:
            fh.write(f"{it},{_fmt(d)},{_fmt(es)},{_fmt(ee)}\n")
    _write_json(os.path.join(out, "result.json"), {
        "params": params.to_dict(),
        "options": opts.to_dict(),
        "init": args.init if isinstance(args.init, str) else "given",
        "status": result.status,
        "exact_energy": result.exact_energy,
        "iterations": result.trace[-1][0],
    })
    artifacts = ["field.mfield", "trace.csv", "result.json"]
    if not args.no_plot:
        from .reports import plot_field, plot_trace
        plot_field(result.field, os.path.join(out, "field.png"))
        plot_trace(result.trace, os.path.join(out, "trace.png"))
        artifacts += ["field.png", "trace.png"]
    _write_manifest(out, "minimize",
                    {"params": params.to_dict(), "options": opts.to_dict(),
                     "init": args.init, "seed": args.seed}, artifacts, t0)
    return 0


def _eps_list(cfg: dict, args, p: float, theta: float) -> List[float]:
    sec = cfg.get("sweep", {})
    if args.epsilons is not None:
        eps = [float(tok) for tok in args.epsilons.split(",")]
    elif args.log_range is not None:
        lo, hi, n = args.log_range
        eps = list(np.geomspace(float(lo), float(hi), int(n)))
    elif "epsilons" in sec:
        eps = [float(e) for e in sec["epsilons"]]
    elif "log_range" in sec:
        lo, hi, n = sec["log_range"]
        eps = list(np.geomspace(float(lo), float(hi), int(n)))
    else:
        scale = theta ** p
        eps = list(np.geomspace(scale * 1e-5, scale * 1e-1, 9))
    return sorted(eps)


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    sec = cfg.get("params", {})
    p = float(_first(args.p, sec.get("p"), 2.0))
    theta = float(_first(args.theta, sec.get("theta"), 0.25))
    out = _outdir(cfg, args)
    eps = _eps_list(cfg, args, p, theta)
    constructions = set(args.constructions.split(","))
    threads = resolve_threads(args)
    records = sweep(p, theta, eps, constructions,
                    refine_with_minimizer=args.refine, threads=threads)
    write_sweep_csv(records, os.path.join(out, "sweep.csv"))
    failures = [{"epsilon": r.epsilon, "construction": r.construction,
                 "error": r.error} for r in records if r.error]
    _write_json(os.path.join(out, "sweep.json"), {
        "p": p, "theta": theta, "epsilons": eps,
        "constructions": sorted(constructions),
        "rows": sum(1 for r in records if r.breakdown is not None),
        "failures": failures,
    })
    artifacts = ["sweep.csv", "sweep.json"]
    if not args.no_plot:
        from .reports import plot_sweep
        plot_sweep(records, os.path.join(out, "sweep.png"))
        artifacts.append("sweep.png")
    _write_manifest(out, "sweep",
                    {"p": p, "theta": theta, "epsilons": eps,
                     "constructions": sorted(constructions),
                     "refine": args.refine, "seed": args.seed},
                    artifacts, t0)
    return 0


def _records_from(args, cfg):
    path = args.csv
    if path is None:
        path = os.path.join(_outdir(cfg, args), "sweep.csv")
    if not os.path.exists(path):
        raise ValueError(f"sweep CSV not found: {path}")
    return path, read_sweep_csv(path)


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    path, records = _records_from(args, cfg)
    slope, intercept, residual = fit_exponent(records)
    _write_json(os.path.join(out, "fit.json"), {
        "csv": path, "slope": slope, "intercept": intercept,
        "residual": residual,
    })
    artifacts = ["fit.json"]
    if not args.no_plot:
        from .reports import plot_fit
        plot_fit(records, slope, intercept, os.path.join(out, "fit.png"))
        artifacts.append("fit.png")
    _write_manifest(out, "fit", {"csv": path}, artifacts, t0)
    return 0


def cmd_sandwich(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    path, records = _records_from(args, cfg)
    report = sandwich_check(records)
    _write_json(os.path.join(out, "sandwich.json"),
                {"csv": path, **report.to_dict()})
    artifacts = ["sandwich.json"]
    if not args.no_plot:
        from .reports import plot_sandwich
        plot_sandwich(report, os.path.join(out, "sandwich.png"))
        artifacts.append("sandwich.png")
    _write_manifest(out, "sandwich", {"csv": path}, artifacts, t0)
    return 0


_DOMAINS = {
    "unit": [(0.0, 0.0, 1.0, 1.0)],
    "l-shape": [(0.0, 0.0, 1.0, 0.5), (0.0, 0.5, 0.5, 1.0)],
    "slab": [(0.0, 0.0, 1.0, 0.01)],
}


def cmd_cover(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(cfg, args)
    if args.omega is not None:
        with open(args.omega) as fh:
            rects = [tuple(r) for r in json.load(fh)]
    else:
        rects = _DOMAINS[args.domain]
    cover = whitney_cover(rects, args.delta, args.min_side)
    report = verify_cover(cover, samples=args.samples, seed=args.seed)
    doc = cover_to_dict(cover, report)
    doc["report"] = report.to_dict()
    _write_json(os.path.join(out, "cover.json"), doc)
    artifacts = ["cover.json"]
    if not args.no_plot:
        from .reports import plot_cover
        plot_cover(cover, os.path.join(out, "cover.png"))
        artifacts.append("cover.png")
    _write_manifest(out, "cover",
                    {"omega": [list(r) for r in rects], "delta": args.delta,
                     "min_side": args.min_side, "samples": args.samples,
                     "seed": args.seed}, artifacts, t0)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads; 0 = auto "
                             "(falls back to MICROLAB_THREADS)")
    common.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")

    pp = argparse.ArgumentParser(add_help=False)
    pp.add_argument("--p", type=float)
    pp.add_argument("--theta", type=float)
    pp.add_argument("--epsilon", type=float)
    pp.add_argument("--sigma", type=float)

    parser = argparse.ArgumentParser(
        prog="microlab",
        description="numerical laboratory for a singularly perturbed "
                    "two-well energy and its small-volume-fraction limit")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("energy", parents=[common, pp],
                       help="evaluate the energy of a stored field or profile")
    s.add_argument("--field", help="MICROFIELD file")
    s.add_argument("--profile", help="profile JSON file")
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("construct", parents=[common, pp],
                       help="emit a competitor profile as JSON")
    s.add_argument("kind",
                   choices=["constant", "branching", "example", "recovery"])
    s.add_argument("--ratio", type=float, help="branching column ratio")
    s.add_argument("--geometry",
                   choices=[GEOMETRY_SPLIT, GEOMETRY_PINCH])
    s.add_argument("--alpha", type=float, default=0.9,
                   help="diagonal exponent for the example family")
    s.add_argument("--limit", help="limit-object JSON (recovery)")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("limit-energy", parents=[common],
                       help="validate a limit object and integrate its energy")
    s.add_argument("--limit", required=True)
    s.set_defaults(func=cmd_limit_energy)

    s = sub.add_parser("recover", parents=[common],
                       help="build the finite-theta recovery of a limit object")
    s.add_argument("--limit", required=True)
    s.add_argument("--theta", type=float)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("minimize", parents=[common, pp],
                       help="run the smoothed-energy descent")
    s.add_argument("--init", default="constant",
                   choices=["constant", "branching", "random"])
    s.add_argument("--nx", type=int)
    s.add_argument("--ny", type=int)
    s.set_defaults(func=cmd_minimize)

    s = sub.add_parser("sweep", parents=[common, pp],
                       help="evaluate constructions over an epsilon range")
    s.add_argument("--epsilons", help="comma-separated epsilon list")
    s.add_argument("--log-range", nargs=3, metavar=("LO", "HI", "N"),
                   help="log-spaced epsilon range")
    s.add_argument("--constructions",
                   default=f"{CONSTRUCTION_CONSTANT},{CONSTRUCTION_BRANCHING}")
    s.add_argument("--refine", action="store_true",
                   help="also run the grid minimizer per point")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", parents=[common],
                       help="fit the scaling exponent from a sweep CSV")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("sandwich", parents=[common],
                       help="check the scaling-envelope band on a sweep CSV")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_sandwich)

    s = sub.add_parser("cover", parents=[common],
                       help="build and verify a Whitney square cover")
    s.add_argument("--domain", choices=sorted(_DOMAINS), default="unit")
    s.add_argument("--omega", help="JSON file with [x0,y0,x1,y1] rectangles")
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--min-side", type=float, default=None)
    s.add_argument("--samples", type=int, default=10000)
    s.set_defaults(func=cmd_cover)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__,
                                     "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
