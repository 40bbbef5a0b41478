#!/usr/bin/env python3
"""Full noise-amplitude scan plus transition bracketing.

Produces scan.csv / scan_summary.json (41-point default grid) and bracket.json
(sign-change bracket to ±0.005) in the output directory. Re-runs with the same
seed are byte-identical regardless of --workers.
"""

import argparse
import sys

from niolab.cli import main


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/scan", help="output directory")
    ap.add_argument("--seed", default="0", help="master seed")
    ap.add_argument("--workers", default="0", help="worker threads (0 = auto)")
    args = ap.parse_args()

    common = ["--outdir", args.outdir, "--seed", args.seed, "--workers", args.workers]
    rc = main(["scan", *common])
    if rc != 0:
        return rc
    return main(["bracket", "--xi-lo", "0.01", "--xi-hi", "5", "--tol-xi", "0.01", *common])


if __name__ == "__main__":
    sys.exit(run())
