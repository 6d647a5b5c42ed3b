"""Command-line front end: check, compute, verify, simulate, export-iterates.

Exit codes: 0 success, 1 a check or the convergence target failed, 2 bad
configuration or file mismatch, 3 hard numerical failure (fold, escape, or a
non-trapping box).
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .assumptions import run_assumption_checks
from .geometry import GridError, make_grid
from .io import (
    ConfigError,
    RunConfig,
    load_config,
    load_manifold_csv,
    save_manifold_csv,
    save_trajectory_csv,
    validate_config,
    write_json,
)
from .maps import KolmogorovMap, MapDomainError, make_map
from .simplex import EscapeError, attract_trajectory, compute_cs, verify_cs
from .transform import TransformError

__all__ = ["main"]


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "resolution", None) is not None:
        cfg = replace(cfg, resolution=args.resolution)
    if getattr(args, "tolerance", None) is not None:
        cfg = replace(cfg, tolerance=args.tolerance)
    if getattr(args, "max_iter", None) is not None:
        cfg = replace(cfg, max_iter=args.max_iter)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    out = getattr(args, "out", None) or os.environ.get("CSIMPLEX_OUT") or cfg.output
    cfg = replace(cfg, output=out)
    validate_config(cfg)
    return cfg


def _resolve_map(cfg: RunConfig) -> KolmogorovMap:
    try:
        kmap = make_map(cfg.map_name, cfg.map_params)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.declared_dim is not None and cfg.declared_dim != kmap.dim:
        raise ConfigError(
            f"map.dim = {cfg.declared_dim} but '{kmap.name}' has dimension {kmap.dim}"
        )
    if kmap.dim > cfg.dim_cap:
        raise ConfigError(f"map dimension {kmap.dim} exceeds the cap {cfg.dim_cap}")
    return kmap


def _run_checks(kmap: KolmogorovMap, cfg: RunConfig):
    return run_assumption_checks(
        kmap,
        resolution=cfg.check_resolution,
        kappa_max=cfg.kappa_max,
        margin=cfg.safety_margin,
        eps_tol=cfg.eps_tol,
    )


def cmd_check(args) -> int:
    cfg = _resolve_config(args)
    kmap = _resolve_map(cfg)
    report = _run_checks(kmap, cfg)
    payload = report.to_dict()
    payload["config"] = cfg.echo()
    write_json(os.path.join(cfg.output, "assumptions.json"), payload)
    print(f"as2 (unit axis fixed points): {'ok' if report.as2_ok else 'FAIL'}"
          f" (max deviation {report.as2_max_deviation:.3e})")
    print(f"as3 (competitive feedback):   {report.as3_mode}")
    print(f"as4 (spectral margin):        {'ok' if report.as4_ok else 'FAIL'}"
          f" (max rho {report.as4_max_rho:.6f} at {report.as4_argmax})")
    print(f"kappa = {report.kappa}, epsilon = {report.epsilon}")
    return 0 if report.passed else 1


def _compute(args, dump_iterates: bool) -> int:
    cfg = _resolve_config(args)
    kmap = _resolve_map(cfg)
    report = _run_checks(kmap, cfg)
    write_json(os.path.join(cfg.output, "assumptions.json"),
               {**report.to_dict(), "config": cfg.echo()})
    if not report.passed:
        print("assumption checks failed; not computing", file=sys.stderr)
        return 1
    grid = make_grid(kmap.dim, cfg.resolution)

    on_iteration = None
    if dump_iterates:
        itdir = os.path.join(cfg.output, "iterates")

        def on_iteration(n, lower, upper):
            save_manifold_csv(os.path.join(itdir, f"lower_{n:05d}.csv"), lower)
            save_manifold_csv(os.path.join(itdir, f"upper_{n:05d}.csv"), upper)

    result = compute_cs(
        kmap,
        grid,
        report.kappa,
        report.epsilon,
        tolerance=cfg.tolerance,
        max_iter=cfg.max_iter,
        on_iteration=on_iteration,
    )
    payload = result.to_dict()
    payload["config"] = cfg.echo()
    write_json(os.path.join(cfg.output, "convergence.json"), payload)
    if result.sigma is not None:
        save_manifold_csv(os.path.join(cfg.output, "sigma.csv"), result.sigma)
    else:
        save_manifold_csv(os.path.join(cfg.output, "lower_partial.csv"), result.lower)
        save_manifold_csv(os.path.join(cfg.output, "upper_partial.csv"), result.upper)
    print(f"termination: {result.termination} after {result.iterations} iterations, "
          f"gap {result.final_gap:.3e}, certified radial error {result.certified_error:.3e}")
    if result.termination == "converged":
        return 0
    if result.termination == "fold_error":
        print(f"fold: {result.fold_message}", file=sys.stderr)
        return 3
    return 1


def cmd_compute(args) -> int:
    return _compute(args, dump_iterates=False)


def cmd_export_iterates(args) -> int:
    return _compute(args, dump_iterates=True)


def cmd_verify(args) -> int:
    cfg = _resolve_config(args)
    kmap = _resolve_map(cfg)
    report = _run_checks(kmap, cfg)
    if report.kappa is None:
        print("assumption checks failed; nothing to verify against", file=sys.stderr)
        return 1
    grid = make_grid(kmap.dim, cfg.resolution)
    sigma_path = args.sigma or os.path.join(cfg.output, "sigma.csv")
    sigma = load_manifold_csv(sigma_path, grid, provenance="loaded")
    result = verify_cs(
        kmap,
        sigma,
        report.kappa,
        sample_count=cfg.sample_count,
        horizon=cfg.horizon,
        seed=cfg.seed,
        attraction_tol=cfg.attraction_tol,
    )
    ok = result.passed(
        fixed_point_max=cfg.fixed_point_max,
        invariance_max=cfg.invariance_max,
        attraction_min=cfg.attraction_min,
    )
    payload = result.to_dict()
    payload["passed"] = ok
    payload["config"] = cfg.echo()
    write_json(os.path.join(cfg.output, "verification.json"), payload)
    print(f"invariance residual {result.invariance_residual:.3e}, "
          f"unordered violations {result.unorder_violations}, "
          f"harnack violations {result.harnack_samples}, "
          f"retrotone violations {result.retrotone_samples}, "
          f"attraction {result.attraction_stats}")
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    kmap = _resolve_map(cfg)
    try:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    except ValueError as exc:
        raise ConfigError(f"cannot parse --x0 '{args.x0}'") from exc
    if x0.shape != (kmap.dim,):
        raise ConfigError(f"--x0 needs {kmap.dim} coordinates")
    grid = make_grid(kmap.dim, cfg.resolution)
    sigma_path = args.sigma or os.path.join(cfg.output, "sigma.csv")
    sigma = load_manifold_csv(sigma_path, grid, provenance="loaded")
    steps = args.steps if args.steps is not None else cfg.horizon
    traj, dists = attract_trajectory(kmap, sigma, x0, steps)
    save_trajectory_csv(os.path.join(cfg.output, "trajectory.csv"), traj, dists)
    print(f"simulated {steps} steps; final distance to the surface {dists[-1]:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csimplex",
        description="Compute and verify carrying simplices of competitive Kolmogorov maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, resolution=False, solver=False, seed=False):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides config and CSIMPLEX_OUT)")
        if resolution:
            p.add_argument("--resolution", type=int, help="grid resolution override")
        if solver:
            p.add_argument("--tolerance", type=float, help="radial gap tolerance override")
            p.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap override")
        if seed:
            p.add_argument("--seed", type=int, help="seed override for sampling batteries")

    p = sub.add_parser("check", help="certify the structural assumptions")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compute", help="run the two-sided iteration to the carrying simplex")
    common(p, resolution=True, solver=True)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("export-iterates", help="compute while dumping every iterate to CSV")
    common(p, resolution=True, solver=True)
    p.set_defaults(func=cmd_export_iterates)

    p = sub.add_parser("verify", help="run the property battery against a stored surface")
    common(p, resolution=True, seed=True)
    p.add_argument("--sigma", help="surface CSV (default: <out>/sigma.csv)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="iterate a seed point and log its distance to the surface")
    common(p, resolution=True)
    p.add_argument("--x0", required=True, help="comma-separated start point")
    p.add_argument("--steps", type=int, help="number of steps (default: verify.horizon)")
    p.add_argument("--sigma", help="surface CSV (default: <out>/sigma.csv)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GridError as exc:
        print(f"grid error: {exc}", file=sys.stderr)
        return 2
    except (TransformError, EscapeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except MapDomainError as exc:
        print(f"map domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
