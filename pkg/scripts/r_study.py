"""Efficiency ratio r against the departure-from-linearity size a for the ex1 and ex2 designs."""

import argparse
import csv
import sys

from ssinfer.io import fmt
from ssinfer.sim import SimModel, r_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", default="ex1,ex2")
    ap.add_argument("--a-grid", default="0,0.25,0.5,1,2,4,8")
    ap.add_argument("--draws", type=int, default=10**6)
    ap.add_argument("--p", type=int, default=6)
    ap.add_argument("--output", help="CSV path (default stdout)")
    args = ap.parse_args()
    grid = [float(a) for a in args.a_grid.split(",")]
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["model", "a", "r", "se", "snr"])
    for variant in args.models.split(","):
        for res in r_study(SimModel.default(variant, p=args.p), grid, args.draws):
            w.writerow([variant, fmt(res.a), fmt(res.r), fmt(res.se), fmt(res.snr)])
    if args.output:
        fh.close()


if __name__ == "__main__":
    main()
