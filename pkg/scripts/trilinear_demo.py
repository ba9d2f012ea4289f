"""Solve the six-variable trilinear system for n = 5 and compare candidate F.

    python3 scripts/trilinear_demo.py --cells 4

For each F the script reports failures, the worst Jacobian condition number,
the size of the gradient field and the relative conjugacy report. F whose
solutions collapse onto phi = 0 show a vanishing gradient scale.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from conjugen.expr import evaluate, parse
from conjugen.field import ConjugateReport, integrate_h, verify_conjugate
from conjugen.grid import GridSpec
from conjugen.nullrep import Trilinear5
from conjugen.solver import continue_over_grid

CANDIDATES = ("phi5*phi6", "phi5*phi6 + phi1", "phi5*phi6 + phi1 + phi3", "phi1*phi3 + phi5")


@dataclass(frozen=True)
class DemoConfig:
    functions: tuple[str, ...] = CANDIDATES
    lo: float = 1.0
    hi: float = 2.0
    cells: int = 4


def run(config: DemoConfig) -> None:
    backend = Trilinear5()
    grid = GridSpec.uniform(5, config.lo, config.hi, config.cells + 1)
    for source in config.functions:
        F = parse(source, backend.k)
        branch = continue_over_grid(F, backend, grid)
        conds = []
        for index in branch.solved:
            res = branch.result(index)
            jac = evaluate(F, res.phi).hess - backend.x_system_jacobian(res.phi, res.point)
            conds.append(np.linalg.cond(jac))
        fg = integrate_h(branch)
        rep = verify_conjugate(fg)
        rel = rep.relative()
        print(f"F = {source}")
        print(f"  failed {len(branch.failed)} of {grid.size}, max condition {max(conds):.2e}, "
              f"mean |grad f| {rep.grad_scale:.3e}")
        for name in ConjugateReport.FIELDS:
            print(f"  {name:<20s} {getattr(rep, name):.3e}  relative {rel[name]:.3e}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--f", dest="functions", nargs="+", default=list(CANDIDATES))
    p.add_argument("--cells", type=int, default=DemoConfig.cells)
    args = p.parse_args()
    run(DemoConfig(functions=tuple(args.functions), cells=args.cells))


if __name__ == "__main__":
    main()
