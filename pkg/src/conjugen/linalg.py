"""Dense LU with partial pivoting for the small complex Newton systems (k <= 7)."""

from __future__ import annotations

import math

import numpy as np


class SingularMatrixError(ArithmeticError):
    def __init__(self, pivot_ratio: float):
        super().__init__(f"matrix is numerically singular (pivot ratio {pivot_ratio:.3g})")
        self.pivot_ratio = pivot_ratio


def lu_factor(a) -> tuple[list[list[complex]], list[int], float]:
    """Factor ``P a = L U`` in place on a list copy.

    Returns the packed LU rows, the row permutation and the ratio of the
    largest to the smallest pivot magnitude (``inf`` for a zero pivot).
    """
    lu = [[complex(v) for v in row] for row in np.asarray(a).tolist()]
    k = len(lu)
    perm = list(range(k))
    pivots = []
    for j in range(k):
        p = max(range(j, k), key=lambda r: abs(lu[r][j]))
        if p != j:
            lu[j], lu[p] = lu[p], lu[j]
            perm[j], perm[p] = perm[p], perm[j]
        piv = lu[j][j]
        pivots.append(abs(piv))
        if piv == 0:
            continue
        row_j = lu[j]
        for r in range(j + 1, k):
            row = lu[r]
            m = row[j] / piv
            row[j] = m
            if m != 0:
                for c in range(j + 1, k):
                    row[c] -= m * row_j[c]
    smallest = min(pivots)
    ratio = math.inf if smallest == 0 else max(pivots) / smallest
    return lu, perm, ratio


def lu_solve(lu: list[list[complex]], perm: list[int], b) -> np.ndarray:
    k = len(lu)
    b = [complex(v) for v in np.asarray(b).tolist()]
    y = [b[p] for p in perm]
    for i in range(k):
        row = lu[i]
        s = y[i]
        for c in range(i):
            s -= row[c] * y[c]
        y[i] = s
    for i in range(k - 1, -1, -1):
        row = lu[i]
        s = y[i]
        for c in range(i + 1, k):
            s -= row[c] * y[c]
        y[i] = s / row[i]
    return np.array(y, dtype=complex)


def solve(a, b, max_pivot_ratio: float = 1e14) -> np.ndarray:
    lu, perm, ratio = lu_factor(a)
    if not ratio <= max_pivot_ratio:
        raise SingularMatrixError(ratio)
    return lu_solve(lu, perm, b)
