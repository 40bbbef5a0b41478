#!/usr/bin/env python3
"""Cross-method verification of the top-exponent max formula.

At each amplitude the QR top exponent is compared against
max(base exponent, fiber exponent) from the same orbit, and the per-orbit sum
identity chi1 + chi2 = lambda_base + chi_fiber is checked to 1e-10. Writes
verify.csv and exits 2 if any amplitude fails.
"""

import argparse
import sys

from niolab.cli import main


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/verify", help="output directory")
    ap.add_argument("--xi", default="0.1,0.5,1,2,5", help="comma-separated amplitudes")
    ap.add_argument("--n-steps", default="10000000", help="orbit steps per amplitude")
    ap.add_argument("--seed", default="0", help="master seed")
    args = ap.parse_args()

    return main(
        [
            "verify",
            "--xi", args.xi,
            "--n-steps", args.n_steps,
            "--seed", args.seed,
            "--outdir", args.outdir,
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
