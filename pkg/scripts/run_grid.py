"""Run the three benchmarks over h = 1/2 ... 1/64 and print convergence tables.

    python3 scripts/run_grid.py --out out/grid
"""

import argparse
import os
import sys
import time
from pathlib import Path

from obstacle_majorant.cli import build_config, print_convergence_table, run_grid, summary_text
from obstacle_majorant.io import write_report_csv

CASES = {
    "I": {"R": "0.7"},
    "II": {"f": "-10", "phi": "-1"},
    "III": {"f": "-10", "phimax": "-1", "rho": "1.2"},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.environ.get("OBSTACLE_OUT", "out/grid"))
    ap.add_argument("--levels", default="1/2..1/64")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--fields", action="store_true", help="also write per-level field dumps")
    args = ap.parse_args()
    status = 0
    for bid, params in CASES.items():
        values = dict(params, benchmark=bid, levels=args.levels, workers=args.workers,
                      out=str(Path(args.out) / bid), fields=str(args.fields))
        grid = build_config(values)
        t0 = time.perf_counter()
        reports, errors = run_grid(grid)
        write_report_csv(grid.out / "report.csv", [r for _, r in reports])
        (grid.out / "summary.txt").write_text(summary_text(grid, reports, errors))
        print(summary_text(grid, reports, errors))
        print(print_convergence_table(grid.out / "report.csv"))
        print(f"[{bid}] {time.perf_counter() - t0:.1f} s\n")
        status |= bool(errors)
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
