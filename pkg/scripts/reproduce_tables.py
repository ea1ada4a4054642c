"""Mean and variance table rows for the m51 and m52 designs over nine (m, n, s0) settings.

Writes one CSV per (model, target) into --out. Full 500-rep runs take hours
on one core; set SSINFER_THREADS to fan out.
"""

import argparse
import csv
from pathlib import Path

from ssinfer.io import fmt
from ssinfer.nuisance import LearnerSpec
from ssinfer.sim import TABLE_COLUMNS, EstimatorBundle, SimModel, run_mc

SIZES = [(1000, 100), (2000, 200), (5000, 500)]
SPARSITY = [1, 5, 15]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", default="m51,m52")
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--p", type=int, default=500)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="tables")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle = EstimatorBundle(K=2, learner=LearnerSpec("sqrt_lasso", "auto"))
    for variant in args.models.split(","):
        rows = {"mean": [], "variance": []}
        for s0 in SPARSITY:
            for m, n in SIZES:
                rep = run_mc(SimModel(variant, n=n, m=m, p=args.p, s0=s0, seed=args.seed), bundle, args.reps)
                for target in rows:
                    rows[target].append(rep.table_row(target))
                print(f"{variant} m={m} n={n} s0={s0} done ({rep.failures} failed reps)", flush=True)
        for target, table in rows.items():
            with open(out / f"{variant}_{target}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(TABLE_COLUMNS)
                for row in table:
                    w.writerow([fmt(row[c]) if isinstance(row[c], float) else row[c] for c in TABLE_COLUMNS])


if __name__ == "__main__":
    main()
