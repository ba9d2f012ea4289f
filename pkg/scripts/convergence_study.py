"""Grid-refinement study of the conjugacy report.

    python3 scripts/convergence_study.py --n 3 --f phi1 --cells 8 16 32

Prints each report field at every spacing, both over all interior cells and
over the coarsest grid's interior box, followed by the fitted orders.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass, field

import numpy as np

from conjugen.expr import parse
from conjugen.field import ConjugateReport, integrate_h, region_mask, verify_conjugate
from conjugen.grid import GridSpec
from conjugen.nullrep import make_backend
from conjugen.solver import continue_over_grid


@dataclass(frozen=True)
class StudyConfig:
    n: int = 3
    backend: str = "general"
    f_source: str = "phi1"
    lo: float = 1.0
    hi: float = 2.0
    cells: tuple[int, ...] = field(default=(8, 16, 32))


def run(config: StudyConfig) -> None:
    backend = make_backend(config.n, config.backend)
    F = parse(config.f_source, backend.k)
    coarse = (config.hi - config.lo) / min(config.cells)
    box = ([config.lo + coarse] * config.n, [config.hi - coarse] * config.n)
    spacings, full, boxed = [], [], []
    for cells in config.cells:
        t0 = time.perf_counter()
        grid = GridSpec.uniform(config.n, config.lo, config.hi, cells + 1)
        fg = integrate_h(continue_over_grid(F, backend, grid))
        full.append(verify_conjugate(fg))
        boxed.append(verify_conjugate(fg, region_mask(grid, *box)))
        spacings.append((config.hi - config.lo) / cells)
        print(f"spacing 1/{cells}: {grid.size} cells, {fg.n_failed} failed, {time.perf_counter() - t0:.1f} s")

    for label, reports in (("all interior cells", full), ("coarse interior box", boxed)):
        print(f"\n{label}")
        print(f"{'field':<20s}" + "".join(f"{'1/' + str(c):>12s}" for c in config.cells) + f"{'order':>8s}")
        for name in ConjugateReport.FIELDS:
            values = [getattr(r, name) for r in reports]
            if min(values) > 0:
                order = f"{np.polyfit(np.log(spacings), np.log(values), 1)[0]:8.2f}"
            else:
                order = f"{'-':>8s}"
            print(f"{name:<20s}" + "".join(f"{v:12.3e}" for v in values) + order)
        print(f"{'mean |grad f|':<20s}" + "".join(f"{r.grad_scale:12.3e}" for r in reports))
        print(f"{'mean |grad f|^2':<20s}" + "".join(f"{r.grad_sq_scale:12.3e}" for r in reports))


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--n", type=int, default=StudyConfig.n)
    p.add_argument("--backend", default=StudyConfig.backend, choices=("general", "trilinear5"))
    p.add_argument("--f", dest="f_source", default=StudyConfig.f_source)
    p.add_argument("--lo", type=float, default=StudyConfig.lo)
    p.add_argument("--hi", type=float, default=StudyConfig.hi)
    p.add_argument("--cells", type=int, nargs="+", default=list(StudyConfig().cells))
    args = p.parse_args()
    run(StudyConfig(args.n, args.backend, args.f_source, args.lo, args.hi, tuple(args.cells)))


if __name__ == "__main__":
    main()
