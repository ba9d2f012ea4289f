"""Reconstruct h from the solved gradient field and check conjugacy of (Re h, Im h)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .grid import GridSpec
from .solver import BranchGrid, SolveResult


class DisconnectedCell(ValueError):
    pass


class GridTooSmall(ValueError):
    pass


@dataclass
class FieldGrid:
    """Gradient and potential sampled on a grid.

    ``grad_h`` has shape ``grid.shape + (n,)`` and ``h`` has ``grid.shape``;
    both are NaN where unknown (failed solve, or not reached from the base).
    """

    grid: GridSpec
    grad_h: np.ndarray
    h: np.ndarray
    base_cell: Optional[tuple[int, ...]] = None
    branch: Optional[BranchGrid] = None
    unreached: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def solved_mask(self) -> np.ndarray:
        return np.isfinite(self.grad_h).all(axis=-1)

    @property
    def n_failed(self) -> int:
        return int((~self.solved_mask).sum())

    def with_h(self, h: np.ndarray) -> "FieldGrid":
        return FieldGrid(self.grid, self.grad_h, h, self.base_cell, self.branch, list(self.unreached))


def gradient_grid(branch: BranchGrid) -> np.ndarray:
    grad = np.full(branch.grid.shape + (branch.backend.n,), np.nan + 0j)
    for index, res in branch.cells.items():
        if isinstance(res, SolveResult):
            grad[index] = branch.backend.gradient_from_phi(res.phi)
    return grad


def _edge(grad_h, coords, a: int, lo: tuple, hi: tuple) -> complex:
    """Trapezoid integral of grad_h . dx from ``lo`` to ``hi`` = lo + e_a."""
    dx = coords[a][hi[a]] - coords[a][lo[a]]
    return 0.5 * (grad_h[lo][a] + grad_h[hi][a]) * dx


def _step(index: tuple, axis: int, d: int) -> tuple:
    out = list(index)
    out[axis] += d
    return tuple(out)


def integrate_field(
    grid: GridSpec,
    grad_h: np.ndarray,
    base_cell: Optional[tuple[int, ...]] = None,
) -> FieldGrid:
    """Integrate a sampled gradient by breadth-first traversal of the grid graph.

    Each newly reached cell takes its value from a neighbour on the previous
    BFS level, preferring the highest axis and then the lower-index
    neighbour. On a complete grid with the base at the origin corner this
    integrates along axis 0, then axis 1, and so on, so the trapezoid error
    is a smooth function of the end point.
    """
    solved = np.isfinite(grad_h).all(axis=-1)
    if base_cell is None:
        candidates = np.argwhere(solved)
        if len(candidates) == 0:
            raise DisconnectedCell("no solved cell to use as integration base")
        base_cell = tuple(int(i) for i in candidates[0])
    base_cell = tuple(int(i) for i in base_cell)
    if not grid.contains(base_cell) or not solved[base_cell]:
        raise DisconnectedCell(f"base cell {base_cell} is not a solved cell")

    coords = grid.coords
    ndim = grid.ndim
    h = np.full(grid.shape, np.nan + 0j)
    h[base_cell] = 0.0
    assigned = np.zeros(grid.shape, bool)
    assigned[base_cell] = True
    frontier = [base_cell]
    while frontier:
        reached = set()
        for cell in frontier:
            for a in range(ndim):
                for d in (-1, 1):
                    nb = _step(cell, a, d)
                    if 0 <= nb[a] < grid.shape[a] and solved[nb] and not assigned[nb]:
                        reached.add(nb)
        level = sorted(reached)
        for cell in level:
            for a in reversed(range(ndim)):
                parent = next(
                    (p for p in (_step(cell, a, -1), _step(cell, a, 1))
                     if 0 <= p[a] < grid.shape[a] and assigned[p]),
                    None,
                )
                if parent is not None:
                    break
            if parent[a] < cell[a]:
                h[cell] = h[parent] + _edge(grad_h, coords, a, parent, cell)
            else:
                h[cell] = h[parent] - _edge(grad_h, coords, a, cell, parent)
        for cell in level:
            assigned[cell] = True
        frontier = level

    unreached = [tuple(int(i) for i in c) for c in np.argwhere(solved & ~assigned)]
    return FieldGrid(grid, grad_h, h, base_cell, None, unreached)


def integrate_h(branch: BranchGrid, base_cell: Optional[tuple[int, ...]] = None) -> FieldGrid:
    """h with ``h(base_cell) = 0`` from a solved branch; see :func:`integrate_field`."""
    fg = integrate_field(branch.grid, gradient_grid(branch), base_cell)
    fg.branch = branch
    return fg


def _segment(fg: FieldGrid, start: tuple, stop: tuple) -> complex:
    diff = [b - a for a, b in zip(start, stop)]
    moving = [a for a, d in enumerate(diff) if d != 0]
    if not moving:
        return 0.0
    (a,) = moving
    lo, hi = (start, stop) if diff[a] > 0 else (stop, start)
    total = 0.0
    cell = lo
    while cell != hi:
        nxt = _step(cell, a, 1)
        total += _edge(fg.grad_h, fg.grid.coords, a, cell, nxt)
        cell = nxt
    return total if diff[a] > 0 else -total


def loop_residual(fg: FieldGrid, corners) -> complex:
    """Trapezoid circulation of grad_h around an axis-aligned grid rectangle.

    ``corners`` are four grid indices in order around the rectangle. The loop
    is evaluated as the difference of the two paths c0->c1->c2 and
    c0->c3->c2, so a zero-area rectangle gives exactly zero.
    """
    c0, c1, c2, c3 = (tuple(int(i) for i in c) for c in corners)
    for c in (c0, c1, c2, c3):
        if not fg.grid.contains(c):
            raise IndexError(f"corner {c} outside the grid")
    side_a = np.subtract(c1, c0)
    side_b = np.subtract(c2, c1)
    if (np.count_nonzero(side_a) > 1 or np.count_nonzero(side_b) > 1
            or not np.array_equal(np.subtract(c3, c2), -side_a)
            or not np.array_equal(np.subtract(c0, c3), -side_b)):
        raise ValueError("corners do not form an axis-aligned rectangle")
    box = tuple(slice(min(a, b), max(a, b) + 1) for a, b in zip(c0, c2))
    if not fg.solved_mask[box].all():
        raise DisconnectedCell("rectangle touches or encloses an unsolved cell")
    path_a = _segment(fg, c0, c1) + _segment(fg, c1, c2)
    path_b = _segment(fg, c0, c3) + _segment(fg, c3, c2)
    return complex(path_a - path_b)


@dataclass(frozen=True)
class ConjugateReport:
    max_norm_mismatch: float  # max | |grad f| - |grad g| |
    max_orthogonality: float  # max |grad f . grad g|
    max_null_residual: float  # max |sum_k (grad_h)_k^2| over solved cells
    max_curl_asymmetry: float  # max |d_a (grad_h)_b - d_b (grad_h)_a|
    max_loop_residual: float  # max |h(c') - h(c) - trapezoid(c -> c')| over edges
    grad_scale: float  # mean |grad f| over interior cells
    grad_sq_scale: float  # mean |grad f|^2 over interior cells
    identity_defect: float  # max |(|grad f|^2 - |grad g|^2 + 2i grad f.grad g) - (FD grad h)^2|
    interior_cells: int

    FIELDS = (
        "max_norm_mismatch",
        "max_orthogonality",
        "max_null_residual",
        "max_curl_asymmetry",
        "max_loop_residual",
    )
    # power of grad_scale each field carries (coordinates are dimensionless)
    SCALE_POWER = {
        "max_norm_mismatch": 1,
        "max_orthogonality": 2,
        "max_null_residual": 2,
        "max_curl_asymmetry": 1,
        "max_loop_residual": 1,
    }

    def relative(self) -> dict[str, float]:
        s = self.grad_scale
        return {
            name: getattr(self, name) / s ** self.SCALE_POWER[name] if s > 0 else getattr(self, name)
            for name in self.FIELDS
        }

    def to_dict(self) -> dict:
        return asdict(self)


def _central(values: np.ndarray, coords, axis: int) -> np.ndarray:
    """Central difference along ``axis``; NaN on the two boundary layers."""
    out = np.full(values.shape, np.nan, dtype=values.dtype)
    c = coords[axis]
    width = (c[2:] - c[:-2]).reshape((-1,) + (1,) * (values.ndim - axis - 1))
    hi = [slice(None)] * values.ndim
    lo = [slice(None)] * values.ndim
    mid = [slice(None)] * values.ndim
    hi[axis], lo[axis], mid[axis] = slice(2, None), slice(None, -2), slice(1, -1)
    out[tuple(mid)] = (values[tuple(hi)] - values[tuple(lo)]) / width
    return out


def _max(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.max()) if finite.size else 0.0


def region_mask(grid: GridSpec, lo, hi) -> np.ndarray:
    """Cells whose coordinates lie in the closed box [lo, hi]."""
    mesh = grid.mesh()
    eps = 1e-9 * grid.spacing
    return ((mesh >= np.asarray(lo) - eps) & (mesh <= np.asarray(hi) + eps)).all(axis=-1)


def verify_conjugate(fg: FieldGrid, region: Optional[np.ndarray] = None) -> ConjugateReport:
    """Check |grad f| = |grad g| and grad f . grad g = 0 for f = Re h, g = Im h.

    ``region`` (boolean, grid-shaped) restricts which cells enter the maxima
    and the scale; finite-difference stencils may still reach outside it.
    Use it to compare refinement levels over the same physical points.
    """
    grid = fg.grid
    if min(grid.shape) < 3:
        raise GridTooSmall(f"need >= 3 cells per axis for central differences, got {grid.shape}")
    coords = grid.coords
    ndim = grid.ndim
    keep = np.ones(grid.shape, bool) if region is None else np.asarray(region, bool)

    # grad of h by central differences; NaN wherever a stencil cell lacks h
    dh = np.stack([_central(fg.h, coords, a) for a in range(ndim)], axis=-1)
    interior = np.isfinite(dh).all(axis=-1) & keep
    if not interior.any():
        raise GridTooSmall("no interior cell has h on its full stencil")
    df, dg = dh.real[interior], dh.imag[interior]
    nf = np.sqrt(np.sum(df * df, axis=-1))
    ng = np.sqrt(np.sum(dg * dg, axis=-1))
    dot = np.sum(df * dg, axis=-1)
    fd = dh[interior]
    identity = (nf**2 - ng**2 + 2j * dot) - np.sum(fd * fd, axis=-1)

    curl = 0.0
    if ndim > 1:
        jac = [[_central(fg.grad_h[..., b], coords, a) for b in range(ndim)] for a in range(ndim)]
        asym = [np.abs(jac[a][b] - jac[b][a])[keep] for a in range(ndim) for b in range(a + 1, ndim)]
        curl = _max(np.stack(asym))

    null = np.abs(np.sum(fg.grad_h * fg.grad_h, axis=-1))[keep]

    loop = 0.0
    for a in range(ndim):
        n = grid.shape[a]
        lo = [slice(None)] * ndim
        hi = [slice(None)] * ndim
        lo[a], hi[a] = slice(0, n - 1), slice(1, n)
        lo, hi = tuple(lo), tuple(hi)
        dx = np.diff(coords[a]).reshape((-1,) + (1,) * (ndim - a - 1))
        trap = 0.5 * (fg.grad_h[lo + (a,)] + fg.grad_h[hi + (a,)]) * dx
        defect = np.abs(fg.h[hi] - fg.h[lo] - trap)
        loop = max(loop, _max(defect[keep[lo] & keep[hi]]))

    return ConjugateReport(
        max_norm_mismatch=_max(np.abs(nf - ng)),
        max_orthogonality=_max(np.abs(dot)),
        max_null_residual=_max(null),
        max_curl_asymmetry=curl,
        max_loop_residual=loop,
        grad_scale=float(np.mean(nf)),
        grad_sq_scale=float(np.mean(nf * nf)),
        identity_defect=_max(np.abs(identity)),
        interior_cells=int(interior.sum()),
    )
