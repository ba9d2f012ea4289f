from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid; each axis is ``(min, max, count)`` with endpoints included."""

    axes: tuple[tuple[float, float, int], ...]

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(count)) for lo, hi, count in self.axes)
        object.__setattr__(self, "axes", axes)
        if not axes:
            raise GridError("grid needs at least one axis")
        for a, (lo, hi, count) in enumerate(axes):
            if count < 2:
                raise GridError(f"axis {a}: degenerate grid, count must be >= 2 (got {count})")
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise GridError(f"axis {a}: need finite min < max (got {lo}, {hi})")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"min:max:count,min:max:count,..."``."""
        axes = []
        for part in text.split(","):
            fields = part.strip().split(":")
            if len(fields) != 3:
                raise GridError(f"bad axis {part!r}, expected min:max:count")
            try:
                lo, hi = float(fields[0]), float(fields[1])
                count = int(fields[2])
            except ValueError as exc:
                raise GridError(f"bad axis {part!r}: {exc}") from None
            axes.append((lo, hi, count))
        return cls(tuple(axes))

    @classmethod
    def uniform(cls, ndim: int, lo: float, hi: float, count: int) -> "GridSpec":
        return cls(((lo, hi, count),) * ndim)

    def to_text(self) -> str:
        return ",".join(f"{lo!r}:{hi!r}:{count}" for lo, hi, count in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(count for _, _, count in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / (count - 1) for lo, hi, count in self.axes])

    @cached_property
    def coords(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, count) for lo, hi, count in self.axes]

    def point(self, index) -> np.ndarray:
        return np.array([c[i] for c, i in zip(self.coords, index)])

    def indices(self) -> Iterator[tuple[int, ...]]:
        """All cell indices in row-major order."""
        return np.ndindex(*self.shape)

    def contains(self, index) -> bool:
        return len(index) == self.ndim and all(0 <= i < c for i, c in zip(index, self.shape))

    def mesh(self) -> np.ndarray:
        """Coordinates of every cell, shape ``grid.shape + (ndim,)``."""
        return np.stack(np.meshgrid(*self.coords, indexing="ij"), axis=-1)
