"""Command-line entry point: ``starflow <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 admissibility error,
4 numerical failure, 5 failed check.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .curvfun import CurvatureFunctionSpec
from .flow import AdmissibilityError, FlowConfig, NumericalFailure, run
from .functionals import (
    NotKConvex,
    af_ratio,
    minkowski_residual,
    parallel_volume_oracle,
    quermassintegrals,
    steiner_polynomial,
    variational_check,
)
from .geometry import NotStarshaped, shape_from_radial
from .identities import curvfun_suite
from .io import MeshExportError, export_mesh, write_manifest, write_timeseries
from .shapes import InitialAdmissibilityError, ShapeDescriptor, init_shape
from .sphere_grid import build_grid

EXIT_OK, EXIT_CONFIG, EXIT_ADMISSIBILITY, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4, 5

log = logging.getLogger("starflow")


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, default=float))


def _initial(cfg: RunConfig, cone_k: int | None):
    grid = cfg.build_grid()
    allow = cfg.allow_inadmissible and cfg.mode == "parallel"
    rho, report = init_shape(cfg.shape, grid, cone_k, allow_inadmissible=allow)
    return grid, rho, report


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.out or "starflow-out")
    out.mkdir(parents=True, exist_ok=True)
    grid, rho0, report = _initial(cfg, cfg.k)
    fcfg = cfg.flow_config()
    manifest = {"admissibility": report.to_dict() if report else None}
    try:
        result = run(rho0, grid, fcfg)
    except NumericalFailure as exc:
        write_manifest(out / "manifest.json", cfg.to_dict(), status="numerical_failure", error=str(exc),
                       last_good_t=exc.state.t if exc.state is not None else None, **manifest)
        raise
    write_timeseries(result.records, out / "timeseries.csv", grid.dim)
    mesh_name = "final.obj" if grid.dim == 2 else "final.csv"
    export_mesh(result.final.geom, out / mesh_name)
    checks = {
        "monitor_violations": [
            {"t": v.t, "step": v.step, "name": v.name, "amount": v.amount} for v in result.violations
        ]
    }
    failed = bool(result.violations)
    if cfg.check_enabled("variational") and len(result.snapshots) >= 3:
        errs = {str(k): variational_check(result, k) for k in range(grid.dim + 1)}
        checks["variational"] = errs
        failed |= any(e > 1e-3 for e in errs.values())
    if cfg.check_enabled("af") and cfg.mode != "parallel":
        ratios = [r.af_ratio for r in result.records]
        checks["af_min"] = float(np.nanmin(ratios)) if ratios else None
        failed |= bool(ratios) and checks["af_min"] < 1 - 1e-6
    summary = {
        "status": "check_failed" if failed else "ok",
        "t_final": result.final.t,
        "converged": result.converged,
        "steps": len(result.steps),
        "rejected_steps": result.rejected_steps,
        "min_margin": result.min_margin,
        "wall_time": result.wall_time,
        "checks": checks,
    }
    write_manifest(out / "manifest.json", cfg.to_dict(), **manifest, **summary)
    _emit({k: summary[k] for k in ("status", "t_final", "converged", "steps")})
    return EXIT_CHECK if failed else EXIT_OK


def cmd_check_steiner(args) -> int:
    cfg = load_config(args.config)
    grid, rho, _ = _initial(cfg, None)
    geom = shape_from_radial(rho, grid)
    W = quermassintegrals(geom)
    poly = steiner_polynomial(W, args.eps)
    mc, err = parallel_volume_oracle(geom, args.eps, samples=args.samples, seed=args.seed)
    tol = max(3 * err, 1e-2 * abs(mc))
    ok = abs(poly - mc) <= tol
    _emit({"eps": args.eps, "steiner": poly, "monte_carlo": mc, "stderr": err, "tolerance": tol, "passed": ok})
    return EXIT_OK if ok else EXIT_CHECK


def cmd_check_af(args) -> int:
    cfg = load_config(args.config)
    grid, rho, _ = _initial(cfg, None)
    geom = shape_from_radial(rho, grid)
    ratio = af_ratio(geom, args.k)
    ok = ratio >= 1 - 1e-6
    _emit({"k": args.k, "af_ratio": ratio, "passed": ok})
    return EXIT_OK if ok else EXIT_CHECK


def _geometry_identities(n: int) -> list[tuple[str, float, float]]:
    out = []
    if n == 1:
        grid = build_grid(1, 256)
        desc = ShapeDescriptor.ellipsoid(2.0, 1.0)
        tol = 1e-8
    else:
        grid = build_grid(2, (48, 96))
        desc = ShapeDescriptor.ellipsoid(1.5, 1.0, 0.8)
        tol = 1e-4
    geom = shape_from_radial(init_shape(desc, grid)[0], grid)
    for k in range(1, n + 1):
        out.append((f"minkowski[n={n},k={k}]", minkowski_residual(geom, k), tol))
    # variational identity along a short parallel flow of a circle/sphere; on the
    # circle every I_k is at most quadratic in t so centered differences are exact,
    # on the sphere the volume is cubic and carries an O(cadence^2) truncation error
    small = build_grid(1, 64) if n == 1 else build_grid(2, (16, 32))
    fs = CurvatureFunctionSpec("quotient", 1, n)
    res = run(np.ones(small.shape), small, FlowConfig("parallel", fs, t_end=0.1, cadence=0.01))
    for k in range(n + 1):
        out.append((f"variational_parallel[n={n},k={k}]", variational_check(res, k), 1e-6 if n == 1 else 1e-3))
    return out


def cmd_check_identities(args) -> int:
    dims = (args.dim,) if args.dim else (1, 2)
    rows = [(r.name, r.error, r.tol) for r in curvfun_suite(samples=args.samples, seed=args.seed)]
    for n in dims:
        rows += _geometry_identities(n)
    failed = [name for name, err, tol in rows if not err <= tol]
    for name, err, tol in rows:
        print(f"{'PASS' if err <= tol else 'FAIL'} {name}: {err:.3e} (tol {tol:.0e})")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_export_mesh(args) -> int:
    cfg = load_config(args.config)
    grid, rho, _ = _initial(cfg, None)
    export_mesh(shape_from_radial(rho, grid), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="starflow", description="Curvature flows of starshaped radial graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a flow and write time series, mesh and manifest")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check-steiner", help="compare the Steiner polynomial with a Monte-Carlo parallel volume")
    s.add_argument("--config", required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_check_steiner)

    s = sub.add_parser("check-af", help="evaluate the Alexandrov-Fenchel ratio of the initial shape")
    s.add_argument("--config", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_check_af)

    s = sub.add_parser("check-identities", help="run the algebraic and integral identity suites")
    s.add_argument("--dim", type=int, choices=(1, 2))
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_check_identities)

    s = sub.add_parser("export-mesh", help="write the initial shape as OBJ (dim 2) or x,y CSV (dim 1)")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_mesh)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InitialAdmissibilityError, AdmissibilityError, NotKConvex, NotStarshaped) as exc:
        print(f"admissibility error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except (NumericalFailure, MeshExportError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
