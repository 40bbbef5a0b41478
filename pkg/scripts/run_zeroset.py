#!/usr/bin/env python3
"""Certified zero set of the large-noise exponent over the slope range.

Sweeps a ∈ [1.00781, 2] with 128 interval-Newton enclosures of s*(a) (the
exponent where log a + log s + 1 − s changes sign) and writes zeroset.csv.
Every row carries a rigorously certified [s_lo, s_hi].
"""

import argparse
import sys

from niolab.cli import main


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/zeroset", help="output directory")
    ap.add_argument("--points", default="128", help="number of slope samples")
    args = ap.parse_args()

    return main(
        [
            "zeroset",
            "--a-range", "1.00781", "2",
            "--n-points", args.points,
            "--outdir", args.outdir,
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
