"""Command-line front end.

    conjugen solve --n 3 --f "phi1" --grid "1:2:9,1:2:9,1:2:9" --out run.json
    conjugen verify run.json
    conjugen hypersurface run.json
    conjugen oracle --n 3 --f "phi1 + 2*phi2" --grid "1:2:5,1:2:5,1:2:5"

Exit codes: 0 success, 1 tolerance breach (artifacts are still written),
2 configuration or artifact error, 3 no grid cell could be solved.
"""

from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, artifacts
from .expr import ExprError, HoloExpr, evaluate, parse
from .field import ConjugateReport, GridTooSmall, integrate_h, verify_conjugate
from .grid import GridError, GridSpec
from .hypersurface import on_surface_check
from .nullrep import GeneralQuadratic, make_backend
from .solver import (
    DEFAULT_RNG_SEED,
    AnchorFailure,
    BranchGrid,
    CellFailure,
    SingularJacobian,
    SolveConfig,
    SolveResult,
    continue_over_grid,
    linear_f_oracle,
)

log = logging.getLogger("conjugen")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_ANCHOR = 0, 1, 2, 3
THREADS_ENV = "CONJUGEN_THREADS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    conjugacy: float = 5e-2  # relative norm mismatch, orthogonality, curl asymmetry
    null: float = 1e-10  # relative null residual
    loop: float = 1e-2  # relative edge loop residual
    fail_cap: float = 0.01  # admissible fraction of failed cells

    def check(self, report: ConjugateReport) -> dict[str, bool]:
        rel = report.relative()
        return {
            "max_norm_mismatch": rel["max_norm_mismatch"] <= self.conjugacy,
            "max_orthogonality": rel["max_orthogonality"] <= self.conjugacy,
            "max_null_residual": rel["max_null_residual"] <= self.null,
            "max_curl_asymmetry": rel["max_curl_asymmetry"] <= self.conjugacy,
            "max_loop_residual": rel["max_loop_residual"] <= self.loop,
        }


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: int
    backend: str
    f_source: str
    grid: GridSpec
    solve: SolveConfig
    tolerances: Tolerances = Tolerances()
    out: Optional[Path] = None
    csv: Optional[Path] = None
    plotdata: Optional[Path] = None
    threads: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"n must be ≥ 3 (got {self.n})")
        if self.backend == "trilinear5" and self.n != 5:
            raise ConfigError("the trilinear5 backend requires n = 5")
        if self.grid.ndim != self.n:
            raise ConfigError(f"grid has {self.grid.ndim} axes but n = {self.n}")
        if self.command in ("solve", "verify") and min(self.grid.shape) < 3:
            raise ConfigError("verification needs at least 3 grid points per axis")

    @property
    def backend_obj(self):
        return make_backend(self.n, self.backend)

    def expr(self) -> HoloExpr:
        return parse(self.f_source, self.backend_obj.k)

    def manifest(self) -> dict:
        solve = asdict(self.solve)
        if solve["seed_phi"] is not None:
            solve["seed_phi"] = [[z.real, z.imag] for z in self.solve.seed_phi]
        return {
            "tool": "conjugen",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "command": self.command,
            "n": self.n,
            "backend": self.backend,
            "f": self.f_source,
            "grid": self.grid.to_text(),
            "rng_seed": self.solve.rng_seed,
            "solve_config": solve,
            "tolerances": asdict(self.tolerances),
        }


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}")
    return value


def _complex_list(text: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(part.strip().replace("i", "j")) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad complex list {text!r}") from None


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="dimension of R^n (>= 3)")
    p.add_argument("--backend", choices=("general", "trilinear5"), default="general")
    p.add_argument("--f", dest="f_source", required=True, help='generating function, e.g. "phi1^2 - phi2"')
    p.add_argument("--grid", required=True, help='per-axis "min:max:count", comma separated')
    p.add_argument("--tol-residual", type=float, default=SolveConfig.tol_residual)
    p.add_argument("--max-iters", type=int, default=SolveConfig.max_iters)
    p.add_argument("--rng-seed", type=lambda s: int(s, 0), default=DEFAULT_RNG_SEED)
    p.add_argument("--seed-phi", type=_complex_list, default=None,
                   help="start Newton at the first cell from this phi, e.g. '1,0.5+1i'")


def _add_tolerance_args(p: argparse.ArgumentParser, defaults: bool = True) -> None:
    d = Tolerances()
    p.add_argument("--tol-conjugacy", type=float, default=d.conjugacy if defaults else None)
    p.add_argument("--tol-null", type=float, default=d.null if defaults else None)
    p.add_argument("--tol-loop", type=float, default=d.loop if defaults else None)
    p.add_argument("--fail-cap", type=float, default=d.fail_cap if defaults else None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conjugen", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve on a grid, integrate h and verify conjugacy")
    _add_problem_args(p)
    _add_tolerance_args(p)
    p.add_argument("--out", type=Path, default=Path("conjugen_run.json"), help="JSON artifact path")
    p.add_argument("--csv", type=Path, default=None, help="also write one row per cell")
    p.add_argument("--plotdata", type=Path, default=None, help="also write x1 x2 f g columns")

    p = sub.add_parser("verify", help="recompute the conjugacy report from a stored artifact")
    p.add_argument("artifact", type=Path)
    _add_tolerance_args(p, defaults=False)

    p = sub.add_parser("hypersurface", help="check solved phi against the M3 / M4 defining functions")
    p.add_argument("artifact", type=Path)
    p.add_argument("--tol", type=float, default=1e-9, help="bound on the normalized residual")

    p = sub.add_parser("oracle", help="compare Newton against the direct solve for linear F")
    _add_problem_args(p)
    p.add_argument("--tol", type=float, default=1e-10)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    try:
        grid = GridSpec.parse(args.grid)
        solve = SolveConfig(
            tol_residual=args.tol_residual,
            max_iters=args.max_iters,
            rng_seed=args.rng_seed,
            seed_phi=args.seed_phi,
        )
    except (GridError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    tolerances = Tolerances()
    if args.command == "solve":
        tolerances = Tolerances(args.tol_conjugacy, args.tol_null, args.tol_loop, args.fail_cap)
    config = RunConfig(
        command=args.command,
        n=args.n,
        backend=args.backend,
        f_source=args.f_source,
        grid=grid,
        solve=solve,
        tolerances=tolerances,
        out=getattr(args, "out", None),
        csv=getattr(args, "csv", None),
        plotdata=getattr(args, "plotdata", None),
        threads=_threads_from_env(),
    )
    try:
        config.expr()
    except ExprError as exc:
        raise ConfigError(f"cannot parse F: {exc}") from None
    if config.solve.seed_phi is not None and len(config.solve.seed_phi) != config.backend_obj.k:
        raise ConfigError(f"--seed-phi needs {config.backend_obj.k} components")
    return config


def format_report(report: ConjugateReport) -> list[str]:
    rel = report.relative()
    return [f"{name:<20s} {getattr(report, name):.12e}  relative {rel[name]:.6e}"
            for name in ConjugateReport.FIELDS]


def report_block(report: ConjugateReport, tol: Tolerances, n_failed: int, n_cells: int, n_unreached: int) -> dict:
    checks = tol.check(report)
    fraction = n_failed / n_cells
    return {
        "fields": report.to_dict(),
        "relative": report.relative(),
        "checks": checks,
        "failed_cells": n_failed,
        "failed_fraction": fraction,
        "unreached_cells": n_unreached,
        "within_tolerance": all(checks.values()) and fraction <= tol.fail_cap,
    }


def run_solve(config: RunConfig) -> int:
    backend = config.backend_obj
    F = config.expr()
    try:
        branch = continue_over_grid(F, backend, config.grid, config.solve, threads=config.threads)
    except AnchorFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANCHOR
    fg = integrate_h(branch)
    manifest = config.manifest()
    manifest["base_cell"] = list(fg.base_cell)
    report = verify_conjugate(fg)
    block = report_block(report, config.tolerances, len(branch.failed), config.grid.size, len(fg.unreached))
    data = artifacts.artifact_dict(manifest, branch, fg, block)

    if config.out is not None:
        artifacts.write_json(config.out, data)
    if config.csv is not None:
        artifacts.write_csv(config.csv, data)
    if config.plotdata is not None:
        artifacts.write_plotdata(config.plotdata, data)

    print(f"cells {config.grid.size}, failed {block['failed_cells']}, unreached {block['unreached_cells']}")
    for line in format_report(report):
        print(line)
    if config.out is not None:
        print(f"artifact written to {config.out}")
    return EXIT_OK if block["within_tolerance"] else EXIT_TOLERANCE


def _tolerances_for(args: argparse.Namespace, manifest: dict) -> Tolerances:
    stored = {**asdict(Tolerances()), **manifest.get("tolerances", {})}
    overrides = {
        "conjugacy": args.tol_conjugacy,
        "null": args.tol_null,
        "loop": args.tol_loop,
        "fail_cap": args.fail_cap,
    }
    return Tolerances(**{k: (v if overrides[k] is None else overrides[k]) for k, v in stored.items()})


def run_verify(args: argparse.Namespace) -> int:
    try:
        data = artifacts.load(args.artifact)
        fg = artifacts.field_from(data)
        tol = _tolerances_for(args, data["manifest"])
        report = verify_conjugate(fg)
    except (artifacts.ArtifactError, GridTooSmall, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    n_failed = fg.n_failed
    unreached = int((fg.solved_mask & ~np.isfinite(fg.h)).sum())
    block = report_block(report, tol, n_failed, fg.grid.size, unreached)
    for line in format_report(report):
        print(line)
    return EXIT_OK if block["within_tolerance"] else EXIT_TOLERANCE


def _branch_from(data: dict) -> BranchGrid:
    manifest = data["manifest"]
    try:
        n, backend_name, source = int(manifest["n"]), manifest["backend"], manifest["f"]
    except (KeyError, TypeError, ValueError):
        raise artifacts.ArtifactError("manifest lacks n / backend / f") from None
    backend = make_backend(n, backend_name)
    grid = artifacts.grid_from(data)
    branch = BranchGrid(grid, backend, parse(source, backend.k), SolveConfig())
    records = {tuple(rec["index"]): rec for rec in data["cells"]}
    for index, phi in artifacts.phi_from(data, backend.k).items():
        rec = records[index]
        if phi is None:
            branch.cells[index] = CellFailure(rec.get("status", "failed"), rec.get("error", ""))
        else:
            branch.cells[index] = SolveResult(phi, rec.get("residual"), rec.get("iters"), grid.point(index))
    return branch


def run_hypersurface(args: argparse.Namespace) -> int:
    try:
        data = artifacts.load(args.artifact)
        manifest = data["manifest"]
        n = int(manifest.get("n", 0))
        if n not in (3, 4) or manifest.get("backend") != "general":
            print(f"error: defining functions are only available for the general backend "
                  f"with n = 3 or 4 (artifact has n = {n}, backend {manifest.get('backend')})",
                  file=sys.stderr)
            return EXIT_CONFIG
        branch = _branch_from(data)
    except (artifacts.ArtifactError, ExprError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rep = on_surface_check(branch)
    if rep.checked == 0:
        print("no solved cells to check")
        return EXIT_TOLERANCE
    name = "M3" if n == 3 else "M4"
    for eq, (raw, rel) in enumerate(zip(rep.max_raw, rep.max_normalized), start=1):
        print(f"{name} equation {eq}: max normalized {rel:.6e}  max raw {raw:.6e}")
    print(f"worst cell {list(rep.worst_cell)} of {rep.checked} checked")
    return EXIT_OK if max(rep.max_normalized) <= args.tol else EXIT_TOLERANCE


def _linear_coefficients(F: HoloExpr) -> Optional[np.ndarray]:
    """Gradient of F if F is affine (checked at fixed probe points), else None."""
    probes = [np.zeros(F.arity), np.full(F.arity, 0.5 + 0.25j), np.linspace(-1, 1, F.arity) * 1j]
    results = [evaluate(F, p) for p in probes]
    a = results[0].grad
    for r in results:
        if np.any(r.hess != 0) or not np.allclose(r.grad, a, rtol=0, atol=1e-14):
            return None
    return a


def run_oracle(config: RunConfig, tol: float) -> int:
    backend = config.backend_obj
    if not isinstance(backend, GeneralQuadratic):
        print("error: the linear oracle exists for the general backend only", file=sys.stderr)
        return EXIT_CONFIG
    F = config.expr()
    a = _linear_coefficients(F)
    if a is None:
        print("error: the oracle needs F linear in phi (constant gradient)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        branch = continue_over_grid(F, backend, config.grid, config.solve, threads=config.threads)
    except AnchorFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANCHOR
    worst, worst_cell, compared, singular = 0.0, None, 0, 0
    for index in branch.solved:
        res = branch.result(index)
        try:
            expected = linear_f_oracle(a, backend, res.point)
        except SingularJacobian:
            singular += 1
            continue
        dev = float(np.max(np.abs(res.phi - expected)))
        compared += 1
        if dev > worst:
            worst, worst_cell = dev, index
    print(f"compared {compared} cells, {len(branch.failed)} failed, {singular} singular for the oracle")
    print(f"max |phi_newton - phi_oracle| {worst:.6e}" + (f" at {list(worst_cell)}" if worst_cell else ""))
    return EXIT_OK if worst <= tol else EXIT_TOLERANCE


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return run_verify(args)
        if args.command == "hypersurface":
            return run_hypersurface(args)
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "solve":
        return run_solve(config)
    return run_oracle(config, args.tol)


if __name__ == "__main__":
    sys.exit(main())
