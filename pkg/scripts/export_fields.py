"""Write VTK/CSV field dumps for all three benchmarks on one mesh (default h = 1/16).

    python3 scripts/export_fields.py --h 1/16 --out out/fields
"""

import argparse
import os
import sys

from obstacle_majorant import cli

ARGS = {
    "I": ["--R", "0.7"],
    "II": ["--f", "-10", "--phi", "-1"],
    "III": ["--f", "-10", "--phimax", "-1", "--rho", "1.2"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", default="1/16")
    ap.add_argument("--out", default=os.environ.get("OBSTACLE_OUT", "out/fields"))
    args = ap.parse_args()
    status = 0
    for bid, extra in ARGS.items():
        status |= cli.main(["run", "--benchmark", bid, *extra, "--levels", args.h,
                            "--out", os.path.join(args.out, bid), "--workers", "1"])
    return status


if __name__ == "__main__":
    sys.exit(main())
