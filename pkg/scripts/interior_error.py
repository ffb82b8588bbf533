"""Split the level-2 squared energy error of a ring benchmark by distance to the circle.

Shows how much of the error sits in the layer next to the staircase boundary of
the inscribed rectangulation, and the convergence ratio of each part.

    python3 scripts/interior_error.py II --levels 1/8..1/64 --rmax 0.8
"""

import argparse

import numpy as np

from obstacle_majorant import fem
from obstacle_majorant.cli import parse_levels
from obstacle_majorant.error_metrics import build_chain
from obstacle_majorant.experiment import RunConfig, run_case


def split_error(result, rmax):
    chain = build_chain(result.solve_mesh)
    fine = chain.meshes[2]
    vl = chain.lift(result.v, 2)
    x, y = fine.nodes.T
    e = vl - np.where(fine.active_nodes, result.exact.u(x, y), 0.0)
    Ke = fem.local_kbil(fine.hx, fine.hy)
    ee = e[fine.elements[fine.active_ids]]
    local = np.einsum("ei,ij,ej->e", ee, Ke, ee)
    r = np.hypot(*fine.element_centers().T)
    inner = r <= rmax
    return local[inner].sum(), local[~inner].sum()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("benchmark", choices=["II", "III"])
    ap.add_argument("--levels", default="1/8..1/64")
    ap.add_argument("--rmax", type=float, default=0.8)
    args = ap.parse_args()
    cfg = RunConfig(benchmark=args.benchmark)
    prev = None
    print(f"{'h':>6} {'interior':>12} {'ratio':>7} {'layer':>12} {'ratio':>7}")
    for h in parse_levels(args.levels):
        res = run_case(cfg, h)
        cur = split_error(res, args.rmax)
        ratios = ("", "") if prev is None else tuple(f"{p / c:.3f}" for p, c in zip(prev, cur))
        print(f"{str(h):>6} {cur[0]:12.5e} {ratios[0]:>7} {cur[1]:12.5e} {ratios[1]:>7}")
        prev = cur


if __name__ == "__main__":
    main()
