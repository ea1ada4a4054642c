"""Command-line front end: ``ssinfer {mean,variance,ate,tes,simulate,r-study}``.

Exit status is 0 on success, 2 on a usage error and 1 when loading data or
estimating fails.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .causal import estimate_ate, estimate_tes
from .data import FoldError, make_partition
from .estimators import (
    estimate_mean,
    estimate_mean_multi,
    estimate_variance,
    moment_cache,
    sample_mean_ci,
    sample_variance_ci,
)
from .nuisance import VARIANTS as LEARNERS
from .sim import (
    TABLE_COLUMNS,
    VARIANTS as MODELS,
    EstimatorBundle,
    McFailure,
    SimModel,
    generate,
    k_sweep,
    r_study,
    run_mc,
)


class _Stage(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    p.add_argument("--k", type=int, help="number of cross-fitting folds")
    p.add_argument("--t-partitions", type=int, help="number of random partitions to average")
    p.add_argument("--alpha", type=float, help="miscoverage level")
    p.add_argument("--seed", type=int, help="partition seed")
    p.add_argument("--learner", choices=LEARNERS, help="slope learner")
    p.add_argument("--lambda", dest="lam", help="penalty: a number, 'cv' or 'auto'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssinfer", description="Semi-supervised mean, variance and treatment-effect inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, what in (("mean", "mean of the response"), ("variance", "variance of the response")):
        p = sub.add_parser(name, help=f"estimate the {what}")
        p.add_argument("--labeled", required=True, help="CSV with header y,x1,...")
        p.add_argument("--unlabeled", required=True, help="CSV with header x1,...")
        _add_run_options(p)

    for name, what in (("ate", "average treatment effect"), ("tes", "treatment effect size")):
        p = sub.add_parser(name, help=f"estimate the {what}")
        p.add_argument("--labeled", required=True, help="CSV with header y,d,x1,...")
        p.add_argument("--unlabeled", required=True, help="CSV with header d,x1,...")
        p.add_argument("--trim", type=float, nargs=2, metavar=("LO", "HI"), help="propensity clipping bounds")
        _add_run_options(p)

    p = sub.add_parser("simulate", help="Monte Carlo study of a synthetic design")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--s0", type=int)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--target", choices=("mean", "variance", "ate", "all"), default="all",
                   help="which table row(s) to print")
    p.add_argument("--k-sweep", help="comma-separated K values; prints K,MSE pairs instead")
    p.add_argument("--json", help="also write the full report as JSON")
    p.add_argument("--dump-data", help="write the rep-0 datasets as CSV into this directory")
    p.add_argument("--workers", type=int, help="process count (default: SSINFER_THREADS or 1; 0 = all cores)")
    _add_run_options(p)

    p = sub.add_parser("r-study", help="efficiency ratio r over a grid of departure sizes")
    p.add_argument("--model", required=True, choices=("ex1", "ex2"))
    p.add_argument("--p", type=int, default=6, help="covariate count plus one")
    p.add_argument("--a-grid", default="0,0.25,0.5,1,2,4", help="comma-separated values of a")
    p.add_argument("--draws", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="write the CSV here instead of stdout")
    return parser


def _overrides(args) -> dict:
    out = {"k": args.k, "t_partitions": args.t_partitions, "alpha": args.alpha, "seed": args.seed}
    learner = {}
    if args.learner is not None:
        learner["variant"] = args.learner
    if args.lam is not None:
        try:
            learner["lambda"] = float(args.lam)
        except ValueError:
            learner["lambda"] = args.lam
    if learner:
        out["learner"] = learner
    if getattr(args, "trim", None) is not None:
        out["trim"] = list(args.trim)
    return out


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([io.fmt(v) if isinstance(v, float) else ("" if v is None else v) for v in (row[h] for h in header)])
    return buf.getvalue()


def _stage(stage, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError, FoldError, McFailure, OSError) as exc:
        raise _Stage(stage, exc) from exc


def _cmd_mean_variance(args, cfg) -> dict:
    labeled = _stage("load", io.load_labeled, args.labeled)
    unlabeled = _stage("load", io.load_unlabeled, args.unlabeled)
    _stage("load", io.check_columns, labeled, unlabeled, args.labeled, args.unlabeled)
    cache = moment_cache(unlabeled)
    part = _stage("partition", make_partition, labeled.n, cfg.K, cfg.seed)
    mean = _stage("estimate", estimate_mean, labeled, cache, part, cfg.learner, cfg.alpha)
    if args.command == "mean":
        report = mean.report()
        base = sample_mean_ci(labeled, cfg.alpha)
        report["baseline"] = {"estimate": base.estimate, "ci": list(base.ci)}
        if cfg.partitions > 1:
            multi = _stage("estimate", estimate_mean_multi, labeled, cache, cfg.partitions, cfg.K,
                           cfg.learner, cfg.alpha, cfg.seed)
            report["multi_partition"] = multi.report()
    else:
        var = _stage("estimate", estimate_variance, labeled, cache, part, mean, cfg.alpha)
        report = var.report()
        base = _stage("baseline", sample_variance_ci, labeled, cfg.alpha)
        report["baseline"] = {"estimate": base.estimate, "ci": list(base.ci)}
    report["seed"] = cfg.seed
    return report


def _cmd_causal(args, cfg) -> dict:
    labeled = _stage("load", io.load_causal_labeled, args.labeled)
    unlabeled = _stage("load", io.load_causal_unlabeled, args.unlabeled)
    _stage("load", io.check_columns, labeled, unlabeled, args.labeled, args.unlabeled)
    part = _stage("partition", make_partition, labeled.n, cfg.K, cfg.seed)
    ate = _stage("estimate", estimate_ate, labeled, unlabeled, part, cfg.learner, cfg.propensity, cfg.alpha, cfg.trim)
    if args.command == "ate":
        report = ate.report()
    else:
        tes = _stage("estimate", estimate_tes, labeled, unlabeled, part, alpha=cfg.alpha, trim=cfg.trim, ate=ate)
        report = tes.report()
    report["trim"] = list(cfg.trim)
    report["seed"] = cfg.seed
    return report


def _cmd_simulate(args, cfg) -> None:
    sizes = {k: getattr(args, k) for k in ("n", "m", "p", "s0") if getattr(args, k) is not None}
    model = _stage("config", SimModel.default, args.model, a=args.a, seed=cfg.seed, **sizes)
    bundle = EstimatorBundle(K=cfg.K, learner=cfg.learner, propensity=cfg.propensity, alpha=cfg.alpha,
                             trim=cfg.trim, partitions=cfg.partitions)
    if args.reps < 1:
        raise _Stage("config", ValueError("reps must be at least 1"))
    if args.dump_data:
        out = Path(args.dump_data)
        out.mkdir(parents=True, exist_ok=True)
        labeled, unlabeled, _ = _stage("generate", generate, model, 0)
        if model.is_causal:
            io.write_causal_labeled(out / "labeled.csv", labeled)
            io.write_causal_unlabeled(out / "unlabeled.csv", unlabeled)
        else:
            io.write_labeled(out / "labeled.csv", labeled)
            io.write_unlabeled(out / "unlabeled.csv", unlabeled)
    if args.k_sweep:
        try:
            Ks = [int(k) for k in args.k_sweep.split(",")]
        except ValueError:
            raise _Stage("config", ValueError(f"bad --k-sweep list {args.k_sweep!r}")) from None
        rows = _stage("simulate", k_sweep, model, Ks, bundle, args.reps, args.workers)
        _emit(_csv_text(["K", "MSE_theta", "MSE_sigma_sq"], rows), args.output)
        return
    report = _stage("simulate", run_mc, model, bundle, args.reps, workers=args.workers)
    if args.json:
        io.write_report(report.to_dict(), args.json)
    if model.is_causal:
        targets = ["ate"]
    elif args.target == "all":
        targets = ["mean", "variance"]
    elif args.target == "ate":
        raise _Stage("config", ValueError("target 'ate' needs the causal_synth model"))
    else:
        targets = [args.target]
    rows = [report.table_row(t) for t in targets]
    _emit(_csv_text(list(TABLE_COLUMNS), rows), args.output)


def _cmd_r_study(args) -> None:
    try:
        grid = [float(a) for a in args.a_grid.split(",")]
    except ValueError:
        raise _Stage("config", ValueError(f"bad --a-grid list {args.a_grid!r}")) from None
    model = _stage("config", SimModel.default, args.model, p=args.p, s0=1, seed=args.seed)
    rows = _stage("r-study", r_study, model, grid, args.draws)
    out = [{"a": r.a, "r": r.r, "se": r.se, "snr": r.snr} for r in rows]
    _emit(_csv_text(["a", "r", "se", "snr"], out), args.output)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        if args.command == "r-study":
            _cmd_r_study(args)
            return 0
        cfg = _stage("config", io.load_config, args.config, _overrides(args))
        if args.command in ("mean", "variance"):
            _emit(io.dumps_report(_cmd_mean_variance(args, cfg)), args.output)
        elif args.command in ("ate", "tes"):
            _emit(io.dumps_report(_cmd_causal(args, cfg)), args.output)
        else:
            _cmd_simulate(args, cfg)
    except _Stage as exc:
        print(f"ssinfer {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())
