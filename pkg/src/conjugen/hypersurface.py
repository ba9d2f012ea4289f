"""Defining functions of the real hypersurfaces M3 in C^2 and M4 in C^3.

Eliminating x from the system ``F_i(phi) = X_i(phi, x)`` leaves real
equations on phi alone; every solved phi must satisfy them. Each residual is
available raw and divided by the largest monomial magnitude in its
expression, since the expressions are of high degree in phi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expr import HoloExpr, evaluate
from .solver import BranchGrid, SolveResult


class UnsupportedDimension(ValueError):
    pass


def _im_with_scale(terms) -> tuple[float, float]:
    terms = np.asarray(terms, dtype=complex)
    scale = float(np.max(np.abs(terms))) if terms.size else 0.0
    return float(np.sum(terms).imag), scale


def m3_terms(dF, phi) -> list[complex]:
    """Monomials of F1 conj(phi2) - F2 conj(phi1) with frozen F1, F2."""
    f1, f2 = (complex(v) for v in dF)
    p1, p2 = (complex(v) for v in phi)
    return [f1 * p2.conjugate(), -f2 * p1.conjugate()]


def m3_defining(dF, phi) -> float:
    return _im_with_scale(m3_terms(dF, phi))[0]


def m3_residual(F: HoloExpr, phi, normalized: bool = False) -> float:
    """Im(F1 conj(phi2) - F2 conj(phi1)) at phi."""
    if F.arity != 2:
        raise ValueError("M3 needs a function of two variables")
    value, scale = _im_with_scale(m3_terms(evaluate(F, phi).grad, phi))
    if normalized:
        return value / scale if scale > 0 else value
    return value


def m4_terms(dF, phi) -> tuple[list[complex], list[complex]]:
    """Monomials of the two M4 defining expressions (before taking Im)."""
    f1, f2, f3 = (complex(v) for v in dF)
    p1, p2, p3 = (complex(v) for v in phi)
    c1, c2, c3 = p1.conjugate(), p2.conjugate(), p3.conjugate()
    a1, a2, a3 = abs(p1) ** 2, abs(p2) ** 2, abs(p3) ** 2
    first = [
        c3 * f1 * p2**2 * c1**2,
        c3 * f1 * a2**2,
        -c3 * f1 * a1 * a3,
        -c3 * f1 * a3**2,
        -c3 * f2 * a2 * p1 * c2,
        -c3 * f2 * (a1 + a3) * p2 * c1,
        c3 * f3 * p3 * p1 * c2**2,
        c3 * f3 * p3 * (a1 + a3) * c1,
    ]
    second = [
        c3 * f1 * a1 * p2 * c1,
        c3 * f1 * (a2 + a3) * p1 * c2,
        -c3 * f2 * p1**2 * c2**2,
        -c3 * f2 * a1**2,
        c3 * f2 * a2 * a3,
        c3 * f2 * a3**2,
        -c3 * f3 * p3 * p2 * c1**2,
        -c3 * f3 * p3 * (a2 + a3) * c2,
    ]
    return first, second


def m4_defining(dF, phi) -> tuple[float, float]:
    first, second = m4_terms(dF, phi)
    return _im_with_scale(first)[0], _im_with_scale(second)[0]


def m4_residual(F: HoloExpr, phi, normalized: bool = False) -> tuple[float, float]:
    if F.arity != 3:
        raise ValueError("M4 needs a function of three variables")
    out = []
    for terms in m4_terms(evaluate(F, phi).grad, phi):
        value, scale = _im_with_scale(terms)
        out.append(value / scale if normalized and scale > 0 else value)
    return out[0], out[1]


@dataclass(frozen=True)
class SurfaceReport:
    n: int
    checked: int
    max_raw: Optional[tuple[float, ...]]  # per defining equation
    max_normalized: Optional[tuple[float, ...]]
    worst_cell: Optional[tuple[int, ...]]  # by normalized residual


def on_surface_check(branch: BranchGrid, F: Optional[HoloExpr] = None) -> SurfaceReport:
    """Evaluate the M3 or M4 residuals at every solved cell of ``branch``."""
    F = branch.expr if F is None else F
    n = branch.backend.n
    if n == 3 and branch.backend.k == 2:
        def residual(phi, normalized):
            return (m3_residual(F, phi, normalized),)
    elif n == 4:
        def residual(phi, normalized):
            return m4_residual(F, phi, normalized)
    else:
        raise UnsupportedDimension(f"defining functions are only known for n = 3, 4 (got {n})")

    raw_max = norm_max = None
    worst, worst_value, checked = None, -1.0, 0
    for index in branch.grid.indices():
        res = branch.cells.get(index)
        if not isinstance(res, SolveResult):
            continue
        checked += 1
        raw = np.abs(residual(res.phi, False))
        rel = np.abs(residual(res.phi, True))
        raw_max = raw if raw_max is None else np.maximum(raw_max, raw)
        norm_max = rel if norm_max is None else np.maximum(norm_max, rel)
        if rel.max() > worst_value:
            worst, worst_value = index, float(rel.max())
    if checked == 0:
        return SurfaceReport(n, 0, None, None, None)
    return SurfaceReport(
        n,
        checked,
        tuple(float(v) for v in raw_max),
        tuple(float(v) for v in norm_max),
        tuple(int(i) for i in worst),
    )
