"""Damped Newton solution of ``grad F(phi) = X(phi, x)`` with grid continuation."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import linalg
from .expr import EvalDomainError, HoloExpr, evaluate
from .grid import GridSpec
from .nullrep import Backend, GeneralQuadratic

log = logging.getLogger(__name__)

DEFAULT_RNG_SEED = 0xC0FFEE


class SolverError(ArithmeticError):
    pass


class SingularJacobian(SolverError):
    def __init__(self, point, pivot_ratio: float):
        super().__init__(
            f"singular Newton Jacobian at x={np.round(point, 12).tolist()} "
            f"(pivot ratio {pivot_ratio:.3g})"
        )
        self.point = point
        self.pivot_ratio = pivot_ratio


class NoConvergence(SolverError):
    def __init__(self, best: "SolveResult"):
        super().__init__(
            f"no convergence after {best.iterations} iterations "
            f"(best residual {best.residual_norm:.3e})"
        )
        self.best = best


class AnchorFailure(SolverError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    tol_residual: float = 1e-12
    max_iters: int = 50
    damping: float = 0.5
    max_halvings: int = 20
    seed_phi: Optional[tuple[complex, ...]] = None
    rng_seed: int = DEFAULT_RNG_SEED
    retries: int = 8
    max_pivot_ratio: float = 1e14

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.seed_phi is not None:
            object.__setattr__(self, "seed_phi", tuple(complex(p) for p in self.seed_phi))


@dataclass(frozen=True)
class SolveResult:
    phi: np.ndarray
    residual_norm: float
    iterations: int
    point: np.ndarray


@dataclass(frozen=True)
class CellFailure:
    kind: str  # exception class name
    message: str


def system_residual(F: HoloExpr, backend: Backend, phi, x) -> np.ndarray:
    """F_i(phi) - X_i(phi, x)."""
    return evaluate(F, phi).grad - backend.x_system(phi, x)


def _residual_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r)))


def _newton(F: HoloExpr, backend: Backend, x: np.ndarray, phi0, config: SolveConfig) -> SolveResult:
    phi = np.array(phi0, dtype=complex)
    ev = evaluate(F, phi)
    r = ev.grad - backend.x_system(phi, x)
    norm = _residual_norm(r)
    best_phi, best_norm = phi, norm
    iters = 0
    while not norm <= config.tol_residual:
        if iters == config.max_iters:
            raise NoConvergence(SolveResult(best_phi, best_norm, iters, x))
        jac = ev.hess - backend.x_system_jacobian(phi, x)
        lu, perm, ratio = linalg.lu_factor(jac)
        if not ratio <= config.max_pivot_ratio:
            raise SingularJacobian(x, ratio)
        step = linalg.lu_solve(lu, perm, -r)

        lam = 1.0
        for halving in range(config.max_halvings + 1):
            trial = phi + lam * step
            try:
                trial_ev = evaluate(F, trial)
            except EvalDomainError:
                if halving == config.max_halvings:
                    raise
                lam *= config.damping
                continue
            trial_r = trial_ev.grad - backend.x_system(trial, x)
            trial_norm = _residual_norm(trial_r)
            if trial_norm < norm:
                break
            lam *= config.damping
        # after the last halving the step is taken regardless
        phi, ev, r, norm = trial, trial_ev, trial_r, trial_norm
        iters += 1
        if norm < best_norm:
            best_phi, best_norm = phi, norm
    return SolveResult(phi, norm, iters, x)


def default_seeds(k: int, config: SolveConfig) -> list[np.ndarray]:
    """All-ones seed followed by ``config.retries`` reproducible perturbations of it."""
    rng = np.random.default_rng(config.rng_seed)
    seeds = [np.ones(k, complex)]
    for _ in range(config.retries):
        radius = np.sqrt(rng.uniform(0.0, 1.0, k))
        angle = rng.uniform(0.0, 2 * np.pi, k)
        seeds.append(1.0 + radius * np.exp(1j * angle))
    return seeds


def newton_solve(F: HoloExpr, backend: Backend, point, config: SolveConfig = SolveConfig()) -> SolveResult:
    """Solve ``grad F(phi) = X(phi, point)`` for phi.

    With ``config.seed_phi`` set, Newton starts there only; otherwise the
    default seeds are tried in order and the last failure is re-raised.
    """
    if F.arity != backend.k:
        raise ValueError(f"F has arity {F.arity}, backend needs {backend.k}")
    x = np.asarray(point, dtype=float)
    if x.shape != (backend.n,):
        raise ValueError(f"point must have {backend.n} coordinates")
    if config.seed_phi is not None:
        return _newton(F, backend, x, config.seed_phi, config)
    error: Exception | None = None
    for seed in default_seeds(backend.k, config):
        try:
            return _newton(F, backend, x, seed, config)
        except (SolverError, EvalDomainError) as exc:
            error = exc
    raise error


def linear_f_oracle(a, backend: GeneralQuadratic, point, max_pivot_ratio: float = 1e14) -> np.ndarray:
    """Direct solve of the system for ``F = sum_j a_j phi_j``.

    X is linear in phi for the quadratic backend, so the system is
    ``J(x) phi = a``. Uses LAPACK rather than :mod:`conjugen.linalg`.
    """
    if not isinstance(backend, GeneralQuadratic):
        raise TypeError("linear_f_oracle needs the general quadratic backend")
    a = np.asarray(a, dtype=complex)
    x = np.asarray(point, dtype=float)
    jac = backend.x_system_jacobian(np.zeros(backend.k), x)
    cond = np.linalg.cond(jac)
    if not cond <= max_pivot_ratio:
        raise SingularJacobian(x, cond)
    return np.linalg.solve(jac, a)


@dataclass
class BranchGrid:
    grid: GridSpec
    backend: Backend
    expr: HoloExpr
    config: SolveConfig
    cells: dict[tuple[int, ...], SolveResult | CellFailure] = field(default_factory=dict)

    def result(self, index) -> SolveResult | CellFailure:
        return self.cells[tuple(index)]

    def is_solved(self, index) -> bool:
        return isinstance(self.cells.get(tuple(index)), SolveResult)

    @property
    def solved(self) -> list[tuple[int, ...]]:
        return [i for i in self.grid.indices() if self.is_solved(i)]

    @property
    def failed(self) -> list[tuple[int, ...]]:
        return [i for i in self.grid.indices() if not self.is_solved(i)]

    def phi_array(self) -> np.ndarray:
        """phi per cell, shape ``grid.shape + (k,)``; NaN where the cell failed."""
        out = np.full(self.grid.shape + (self.backend.k,), np.nan + 0j)
        for index, res in self.cells.items():
            if isinstance(res, SolveResult):
                out[index] = res.phi
        return out


def _line_seed(branch: BranchGrid, index: tuple[int, ...]):
    """phi to start Newton from at ``index``, or None to use the default seeds.

    The cell's line runs along its last nonzero axis; the nearest solved
    cell before it on that line wins, otherwise the line origin's own seed
    is reused. Seeds therefore only come from cells that precede ``index``
    in row-major order and lie in the same last-axis row or in the
    sub-grid of row starts.
    """
    nonzero = [a for a, i in enumerate(index) if i != 0]
    if not nonzero:
        return None
    axis = nonzero[-1]
    probe = list(index)
    for m in range(index[axis] - 1, -1, -1):
        probe[axis] = m
        res = branch.cells.get(tuple(probe))
        if isinstance(res, SolveResult):
            return res.phi
    probe[axis] = 0
    return _line_seed(branch, tuple(probe))


def _solve_cell(branch: BranchGrid, index: tuple[int, ...]) -> SolveResult | CellFailure:
    seed = _line_seed(branch, index)
    config = branch.config
    if seed is not None:
        config = replace(config, seed_phi=tuple(seed))
    try:
        return newton_solve(branch.expr, branch.backend, branch.grid.point(index), config)
    except (SolverError, EvalDomainError) as exc:
        return CellFailure(type(exc).__name__, str(exc))


def continue_over_grid(
    F: HoloExpr,
    backend: Backend,
    grid: GridSpec,
    config: SolveConfig = SolveConfig(),
    threads: int = 1,
) -> BranchGrid:
    """Solve every grid cell, seeding each from its predecessor on the sweep.

    Rows along the last axis depend only on their first cell, so with
    ``threads > 1`` the row starts are solved first and the rows are then
    finished concurrently; the result is identical to the sequential sweep.
    """
    if grid.ndim != backend.n:
        raise ValueError(f"grid has {grid.ndim} axes, backend needs {backend.n}")
    branch = BranchGrid(grid, backend, F, config)
    if threads <= 1:
        for index in grid.indices():
            branch.cells[index] = _solve_cell(branch, index)
    else:
        for head in np.ndindex(*grid.shape[:-1]):
            branch.cells[head + (0,)] = _solve_cell(branch, head + (0,))

        def finish_row(head):
            for j in range(1, grid.shape[-1]):
                index = head + (j,)
                # cells of other rows are never consulted, so writing
                # straight into the shared dict is safe
                branch.cells[index] = _solve_cell(branch, index)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(finish_row, np.ndindex(*grid.shape[:-1])))
        branch.cells = {index: branch.cells[index] for index in grid.indices()}

    n_failed = sum(not isinstance(r, SolveResult) for r in branch.cells.values())
    if n_failed == grid.size:
        first = branch.cells[next(iter(grid.indices()))]
        raise AnchorFailure(f"no grid cell solved; first cell: {first.message}")
    if n_failed:
        log.info("%d of %d cells failed to solve", n_failed, grid.size)
    return branch
