"""MSE of the mean and variance estimators against the number of folds K (m53 or m54 design)."""

import argparse
import csv
import sys

from ssinfer.io import fmt
from ssinfer.nuisance import LearnerSpec
from ssinfer.sim import EstimatorBundle, SimModel, k_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", choices=("m53", "m54"), default="m53")
    ap.add_argument("--ks", default="2,4,8,16,48")
    ap.add_argument("--reps", type=int, default=300)
    ap.add_argument("--seed", type=int, default=6)
    ap.add_argument("--output", help="CSV path (default stdout)")
    args = ap.parse_args()
    model = SimModel.default(args.model, seed=args.seed)
    rows = k_sweep(model, [int(k) for k in args.ks.split(",")], EstimatorBundle(learner=LearnerSpec("lasso", "cv")), args.reps)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["K", "MSE_theta", "MSE_sigma_sq", "failures"])
    for r in rows:
        w.writerow([r["K"], fmt(r["MSE_theta"]), fmt(r["MSE_sigma_sq"]), r["failures"]])
    if args.output:
        fh.close()


if __name__ == "__main__":
    main()
