"""JSON / CSV / plot-data export of solved runs, and JSON import for re-verification.

JSON layout::

    {"manifest": {...}, "grid": {"axes": [[min, max, count], ...]},
     "cells": [{"index", "x", "status", "phi", "residual", "iters", "grad_h", "h"}, ...],
     "report": {...}}

Complex numbers are ``[re, im]`` pairs and floats use Python's shortest
round-trip repr, so reading an artifact back gives bit-identical values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .field import FieldGrid
from .grid import GridError, GridSpec
from .solver import BranchGrid, CellFailure, SolveResult


class ArtifactError(ValueError):
    pass


def _cpair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _cvec(values) -> list[list[float]]:
    return [_cpair(v) for v in values]


def _from_pairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ArtifactError(f"expected a list of [re, im] pairs, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def cell_records(branch: BranchGrid, fg: Optional[FieldGrid]) -> list[dict[str, Any]]:
    records = []
    for index in branch.grid.indices():
        res = branch.cells[index]
        rec: dict[str, Any] = {
            "index": list(index),
            "x": branch.grid.point(index).tolist(),
        }
        if isinstance(res, SolveResult):
            rec.update(
                status="ok",
                phi=_cvec(res.phi),
                residual=res.residual_norm,
                iters=res.iterations,
                grad_h=_cvec(fg.grad_h[index]) if fg is not None else _cvec(branch.backend.gradient_from_phi(res.phi)),
            )
        else:
            assert isinstance(res, CellFailure)
            rec.update(status=res.kind, error=res.message, phi=None, residual=None, iters=None, grad_h=None)
        h = None if fg is None or not np.isfinite(fg.h[index]) else _cpair(fg.h[index])
        rec["h"] = h
        records.append(rec)
    return records


def artifact_dict(manifest: dict, branch: BranchGrid, fg: Optional[FieldGrid], report: Optional[dict]) -> dict:
    return {
        "manifest": manifest,
        "grid": {"axes": [list(axis) for axis in branch.grid.axes]},
        "cells": cell_records(branch, fg),
        "report": report,
    }


def dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def write_json(path: Path, obj: dict) -> None:
    Path(path).write_text(dumps(obj))


def load(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ArtifactError(f"cannot read artifact {path}: {exc}") from None
    for key in ("manifest", "grid", "cells"):
        if not isinstance(data, dict) or key not in data:
            raise ArtifactError(f"artifact {path} lacks '{key}'")
    return data


def grid_from(data: dict) -> GridSpec:
    try:
        return GridSpec(tuple(tuple(axis) for axis in data["grid"]["axes"]))
    except (GridError, KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"bad grid block: {exc}") from None


def _cells_by_index(data: dict, grid: GridSpec) -> dict[tuple[int, ...], dict]:
    cells = {}
    for rec in data["cells"]:
        try:
            index = tuple(int(i) for i in rec["index"])
        except (KeyError, TypeError, ValueError):
            raise ArtifactError("cell record without a valid index") from None
        if not grid.contains(index):
            raise ArtifactError(f"cell {index} lies outside the grid {grid.shape}")
        cells[index] = rec
    if len(cells) != grid.size or len(data["cells"]) != grid.size:
        raise ArtifactError(f"artifact holds {len(data['cells'])} cells, grid needs {grid.size}")
    return cells


def field_from(data: dict) -> FieldGrid:
    """Rebuild the gradient / potential grid stored in an artifact."""
    grid = grid_from(data)
    cells = _cells_by_index(data, grid)
    n = grid.ndim
    grad = np.full(grid.shape + (n,), np.nan + 0j)
    h = np.full(grid.shape, np.nan + 0j)
    try:
        for index, rec in cells.items():
            if rec.get("grad_h") is not None:
                g = _from_pairs(rec["grad_h"])
                if g.shape != (n,):
                    raise ArtifactError(f"cell {index}: grad_h has {g.shape[0]} components, expected {n}")
                grad[index] = g
            if rec.get("h") is not None:
                re, im = rec["h"]
                h[index] = complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise ArtifactError(f"corrupt cell data: {exc}") from None
    base = data["manifest"].get("base_cell")
    return FieldGrid(grid, grad, h, tuple(base) if base is not None else None)


def phi_from(data: dict, k: int) -> dict[tuple[int, ...], Optional[np.ndarray]]:
    grid = grid_from(data)
    out = {}
    for index, rec in _cells_by_index(data, grid).items():
        if rec.get("phi") is None:
            out[index] = None
            continue
        phi = _from_pairs(rec["phi"])
        if phi.shape != (k,):
            raise ArtifactError(f"cell {index}: phi has {phi.shape[0]} components, expected {k}")
        out[index] = phi
    return out


def write_csv(path: Path, data: dict) -> None:
    grid = grid_from(data)
    n = grid.ndim
    k = max((len(rec["phi"]) for rec in data["cells"] if rec["phi"] is not None), default=0)
    header = [f"i{a + 1}" for a in range(n)] + [f"x{a + 1}" for a in range(n)] + ["status"]
    header += [f"phi{j + 1}_{p}" for j in range(k) for p in ("re", "im")]
    header += ["residual", "iters"]
    header += [f"grad_h{a + 1}_{p}" for a in range(n) for p in ("re", "im")]
    header += ["h_re", "h_im"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in data["cells"]:
            row = list(rec["index"]) + [repr(v) for v in rec["x"]] + [rec["status"]]
            phi = rec["phi"]
            row += [repr(v) for pair in phi for v in pair] if phi is not None else [""] * (2 * k)
            row += ["" if rec["residual"] is None else repr(rec["residual"]),
                    "" if rec["iters"] is None else rec["iters"]]
            g = rec["grad_h"]
            row += [repr(v) for pair in g for v in pair] if g is not None else [""] * (2 * n)
            row += [repr(v) for v in rec["h"]] if rec["h"] is not None else ["", ""]
            writer.writerow(row)


def write_plotdata(path: Path, data: dict) -> None:
    """Columns ``x1 x2 f g`` on the (x1, x2) plane through the grid centre.

    Rows with equal x1 form blocks separated by blank lines, the layout
    gnuplot's ``splot`` and similar tools expect.
    """
    grid = grid_from(data)
    fg = field_from(data)
    centre = [c // 2 for c in grid.shape]
    fixed = ", ".join(f"x{a + 1}={float(grid.coords[a][centre[a]])!r}" for a in range(2, grid.ndim))
    lines = [f"# slice {fixed}" if fixed else "# full grid", "# x1 x2 f g"]
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            index = tuple([i, j] + centre[2:])
            h = fg.h[index]
            if not np.isfinite(h):
                continue
            x1, x2 = float(grid.coords[0][i]), float(grid.coords[1][j])
            lines.append(f"{x1!r} {x2!r} {float(h.real)!r} {float(h.imag)!r}")
        lines.append("")
    Path(path).write_text("\n".join(lines) + "\n")
