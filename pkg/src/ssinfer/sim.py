"""Synthetic designs, Monte Carlo replication and the efficiency-ratio study.

Every dataset is a pure function of ``(model.seed, rep_index)``; replications
can therefore run in any order or in parallel and still agree exactly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from multiprocessing import get_context
from typing import Optional

import numpy as np

from .causal import estimate_tes
from .data import (
    CausalLabeledSet,
    CausalUnlabeledSet,
    FoldError,
    LabeledSet,
    UnlabeledSet,
    make_partition,
    make_rng,
)
from .estimators import (
    estimate_mean,
    estimate_mean_multi,
    estimate_variance,
    moment_cache,
    sample_mean_ci,
    sample_variance_ci,
)
from .nuisance import LearnerSpec

VARIANTS = ("m51", "m52", "m53", "m54", "ex1", "ex2", "causal_synth")

# (n, m, p, s0) used when a variant is built through SimModel.default
_DEFAULTS = {
    "m51": (100, 1000, 500, 1),
    "m52": (100, 1000, 500, 1),
    "m53": (48, 96, 50, 3),
    "m54": (48, 96, 50, 5),
    "ex1": (100, 1000, 6, 5),
    "ex2": (100, 1000, 6, 5),
    "causal_synth": (300, 3000, 100, 3),
}

ORACLE_DRAWS = 10**7
_STREAM_R = 0x52  # rng stream tag for the efficiency-ratio study


# ------------------------------------------------------------------ designs


def d1_diagonal(p_minus_1: int) -> np.ndarray:
    """Evenly spaced spectrum from 0.1 to 2 (both ends included)."""
    if p_minus_1 < 2:
        raise ValueError("p - 1 must be at least 2")
    return np.linspace(0.1, 2.0, p_minus_1)


@lru_cache(maxsize=8)
def _c1_parts(q: int):
    # Eigenvectors of the 0.8-equicorrelation matrix, eigenvalues descending:
    # the normalised ones vector (eigenvalue 0.2 + 0.8 q) and then Helmert
    # contrasts spanning the eigenvalue-0.2 eigenspace. Each column has a
    # positive first nonzero entry.
    U = np.zeros((q, q))
    U[:, 0] = 1.0 / math.sqrt(q)
    for k in range(1, q):
        U[:k, k] = 1.0
        U[k, k] = -float(k)
        U[:, k] /= math.sqrt(k * (k + 1))
    d = d1_diagonal(q)
    C = (U * d) @ U.T
    root = (U * np.sqrt(d)) @ U.T
    C = 0.5 * (C + C.T)
    root = 0.5 * (root + root.T)
    for a in (U, C, root):
        a.setflags(write=False)
    return U, C, root


def build_c1(p_minus_1: int) -> np.ndarray:
    """Covariance with spectrum ``d1_diagonal`` in the eigenbasis of a 0.8-equicorrelation matrix."""
    if p_minus_1 < 2:
        raise ValueError("p - 1 must be at least 2")
    return _c1_parts(int(p_minus_1))[1].copy()


def c1_sqrt(p_minus_1: int) -> np.ndarray:
    """Symmetric square root of ``build_c1(p_minus_1)``."""
    if p_minus_1 < 2:
        raise ValueError("p - 1 must be at least 2")
    return _c1_parts(int(p_minus_1))[2].copy()


@dataclass(frozen=True)
class SimModel:
    """One synthetic design.

    ``p`` counts the intercept, so the data carry ``p - 1`` raw covariates.
    ``a`` is the departure-from-linearity knob of ``ex1``/``ex2`` and ``s_d``
    the number of covariates driving treatment in ``causal_synth``.
    """

    variant: str
    n: int
    m: int
    p: int
    s0: int
    a: float = 0.0
    seed: int = 0
    s_d: int = 3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}")
        for name in ("n", "m", "p", "s0"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.p < 2:
            raise ValueError("p must be at least 2 (intercept plus one covariate)")
        if self.s0 > self.p - 1:
            raise ValueError(f"s0={self.s0} exceeds the number of covariates p-1={self.p - 1}")
        if self.variant in ("m51", "m53", "m54") and self.p < 3:
            raise ValueError("designs built on C1 need p >= 3")
        if self.variant == "causal_synth" and not 1 <= self.s_d <= self.p - 1:
            raise ValueError("s_d must lie in 1..p-1")
        if not math.isfinite(self.a):
            raise ValueError("a must be finite")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @classmethod
    def default(cls, variant: str, **overrides) -> "SimModel":
        if variant not in _DEFAULTS:
            raise ValueError(f"unknown model variant {variant!r}")
        n, m, p, s0 = _DEFAULTS[variant]
        kw = {"n": n, "m": m, "p": p, "s0": s0}
        kw.update(overrides)
        return cls(variant, **kw)

    @property
    def q(self) -> int:
        return self.p - 1

    @property
    def is_causal(self) -> bool:
        return self.variant == "causal_synth"


@dataclass(frozen=True)
class TruthValues:
    """Population targets: mean (or ATE) and variance of the response."""

    theta: float
    sigma_y_sq: float
    source: str  # "analytic" or "oracle"
    oracle_draws: int = 0
    effect_size: Optional[float] = None

    def __post_init__(self):
        if self.source not in ("analytic", "oracle"):
            raise ValueError("source must be 'analytic' or 'oracle'")
        if self.source == "oracle" and self.oracle_draws < 1:
            raise ValueError("oracle truths must record their draw count")


def beta0_m51(s0: int, q: int) -> float:
    """Scale making ``Var(X' beta0) = 1`` for ``beta0 = b 1_{s0}``."""
    C = _c1_parts(q)[1]
    return 1.0 / math.sqrt(float(C[:s0, :s0].sum()))


def _quadratic_truth(mu_s: float, k2: float, k3: float, k4: float):
    """Mean and variance of ``0.1 S^2 + S + N(0,1)`` for ``S = mu_s + T`` with T's cumulants."""
    theta = 0.1 * (k2 + mu_s**2) + mu_s
    a = 1.0 + 0.2 * mu_s
    var = a * a * k2 + 0.2 * a * k3 + 0.01 * (k4 + 2.0 * k2 * k2) + 1.0
    return theta, var


def _sum_weights(model: SimModel) -> np.ndarray:
    """Weights w with ``sum_{j<=s0} X_j / sqrt(s0) = const + w' Z``."""
    e = np.zeros(model.q)
    e[: model.s0] = 1.0 / math.sqrt(model.s0)
    if model.variant in ("m53", "m54"):
        return _c1_parts(model.q)[2] @ e
    return e


@lru_cache(maxsize=64)
def _oracle_ex2(a: float, q: int, seed: int, draws: int):
    rng = make_rng(seed, _STREAM_R, 2)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < draws:
        b = min(1_000_000, draws - done)
        s = math.sqrt(q) * rng.standard_normal(b)
        y = a * np.abs(np.log(0.8 * np.abs(s) + 0.01)) + s + rng.standard_normal(b)
        total += float(np.sum(y))
        total_sq += float(np.sum(y * y))
        done += b
    mean = total / draws
    return mean, total_sq / draws - mean * mean


def _propensity(Xd: np.ndarray) -> np.ndarray:
    s = Xd.shape[1]
    signs = np.where(np.arange(s) % 2 == 0, 1.0, -1.0)
    eta = Xd @ signs / math.sqrt(s)
    return np.clip(1.0 / (1.0 + np.exp(-eta)), 0.05, 0.95)


def _causal_outcomes(Xy: np.ndarray, d: np.ndarray, noise: np.ndarray) -> np.ndarray:
    u = Xy.sum(axis=1) / math.sqrt(Xy.shape[1])
    return d * (1.0 + u) + (1.0 - d) * (0.5 * u) + noise


@lru_cache(maxsize=16)
def _oracle_causal(s_y: int, s_d: int, seed: int, draws: int):
    rng = make_rng(seed, _STREAM_R, 3)
    k = max(s_y, s_d)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < draws:
        b = min(1_000_000, draws - done)
        X = rng.standard_normal((b, k))
        d = (rng.random(b) < _propensity(X[:, :s_d])).astype(float)
        y = _causal_outcomes(X[:, :s_y], d, rng.standard_normal(b))
        total += float(np.sum(y))
        total_sq += float(np.sum(y * y))
        done += b
    mean = total / draws
    return mean, total_sq / draws - mean * mean


def truth_for(model: SimModel, oracle_draws: int = ORACLE_DRAWS) -> TruthValues:
    """Population mean and variance of the response under ``model``."""
    v, s0, q = model.variant, model.s0, model.q
    if v == "m51":
        return TruthValues(s0 * beta0_m51(s0, q), 2.0, "analytic")
    if v in ("m52", "m54"):
        w = _sum_weights(model)
        theta, var = _quadratic_truth(math.sqrt(s0), float(w @ w), float(np.sum(w**3)), float(np.sum(w**4)))
        return TruthValues(theta, var, "analytic")
    if v == "m53":
        w = _sum_weights(model)
        return TruthValues(math.sqrt(s0), float(w @ w) + 1.0, "analytic")
    if v == "ex1":
        return TruthValues(0.0, 2.0 * q + model.a**2 * (q * q + 2.0 * q), "analytic")
    if v == "ex2":
        mean, var = _oracle_ex2(float(model.a), q, 0, oracle_draws)
        return TruthValues(mean, var, "oracle", oracle_draws)
    # causal_synth: the effect is 1 by construction, Var(Y) needs the oracle
    _, var = _oracle_causal(model.s0, model.s_d, 0, oracle_draws)
    return TruthValues(1.0, var, "oracle", oracle_draws, 1.0 / math.sqrt(var))


def _covariates(model: SimModel, rng: np.random.Generator, rows: int) -> np.ndarray:
    v, q = model.variant, model.q
    if v == "m51":
        root = _c1_parts(q)[2]
        return 1.0 + rng.standard_normal((rows, q)) @ root
    if v == "m52":
        return rng.poisson(1.0, (rows, q)).astype(float)
    if v == "m53":
        return 1.0 + (rng.standard_exponential((rows, q)) - 1.0) @ _c1_parts(q)[2]
    if v == "m54":
        return 1.0 + (rng.poisson(1.0, (rows, q)) - 1.0) @ _c1_parts(q)[2]
    return rng.standard_normal((rows, q))


def _response(model: SimModel, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    v, s0 = model.variant, model.s0
    noise = rng.standard_normal(X.shape[0])
    if v == "m51":
        return beta0_m51(s0, model.q) * X[:, :s0].sum(axis=1) + noise
    if v in ("m52", "m53", "m54"):
        s = X[:, :s0].sum(axis=1) / math.sqrt(s0)
        if v == "m53":
            return s + noise
        return 0.1 * s * s + s + noise
    s = X.sum(axis=1)
    if v == "ex1":
        return s + (model.a * np.sum(X * X, axis=1) + s) * noise
    return model.a * np.abs(np.log(0.8 * np.abs(s) + 0.01)) + s + noise


def generate(model: SimModel, rep_index: int, truth: Optional[TruthValues] = None):
    """Labeled set, unlabeled set and truths for one replication.

    The first n covariate rows are labeled. ``causal_synth`` returns causal sets.
    """
    if rep_index < 0:
        raise ValueError("rep_index must be nonnegative")
    rng = make_rng(model.seed, rep_index)
    X = _covariates(model, rng, model.n + model.m)
    if truth is None:
        truth = truth_for(model)
    if model.is_causal:
        d = (rng.random(X.shape[0]) < _propensity(X[:, : model.s_d])).astype(float)
        y = _causal_outcomes(X[: model.n, : model.s0], d[: model.n], rng.standard_normal(model.n))
        return (
            CausalLabeledSet(y, d[: model.n], X[: model.n]),
            CausalUnlabeledSet(d[model.n :], X[model.n :]),
            truth,
        )
    y = _response(model, X[: model.n], rng)
    return LabeledSet(y, X[: model.n]), UnlabeledSet(X[model.n :]), truth


def sample_ate_baseline(labeled: CausalLabeledSet) -> float:
    """Difference of the treated and control response means."""
    d = labeled.treatments
    if d.min() == d.max():
        raise ValueError("the difference of arm means needs both arms")
    y = labeled.responses
    return float(y[d == 1].mean() - y[d == 0].mean())


# --------------------------------------------------------------- replication


@dataclass(frozen=True)
class EstimatorBundle:
    """Estimators run on every replication and their settings."""

    K: int = 2
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    propensity: LearnerSpec = field(default_factory=lambda: LearnerSpec("lasso", "cv"))
    alpha: float = 0.05
    trim: tuple = (0.01, 0.99)
    partitions: int = 1

    def __post_init__(self):
        if self.K < 1 or self.partitions < 1:
            raise ValueError("K and partitions must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class MetricSummary:
    mse: float
    avg_length: Optional[float]
    avg_coverage: Optional[float]
    mean_estimate: float
    var_estimate: float


@dataclass(frozen=True)
class McReport:
    model: SimModel
    bundle: EstimatorBundle
    reps: int
    truth: TruthValues
    metrics: dict
    failures: int
    estimates: dict = field(repr=False, compare=False, default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": asdict(self.model),
            "bundle": asdict(self.bundle),
            "reps": self.reps,
            "failures": self.failures,
            "truth": asdict(self.truth),
            "metrics": {k: asdict(v) for k, v in sorted(self.metrics.items())},
            "design_note": "harness-defined synthetic design" if self.model.is_causal else None,
        }

    def table_row(self, target: str = "mean") -> dict:
        """Columns m,n,p,s0,MSE_base,MSE_ss,AL_base,AL_ss,AC_base,AC_ss."""
        pairs = {"mean": ("ybar", "theta_hat"), "variance": ("s_y_sq", "sigma_y_sq_hat"),
                 "ate": ("sample_ate", "delta_hat")}
        if target not in pairs:
            raise ValueError(f"unknown target {target!r}")
        base, ss = (self.metrics[k] for k in pairs[target])
        return {
            "m": self.model.m, "n": self.model.n, "p": self.model.p, "s0": self.model.s0,
            "MSE_base": base.mse, "MSE_ss": ss.mse,
            "AL_base": base.avg_length, "AL_ss": ss.avg_length,
            "AC_base": base.avg_coverage, "AC_ss": ss.avg_coverage,
        }


TABLE_COLUMNS = ("m", "n", "p", "s0", "MSE_base", "MSE_ss", "AL_base", "AL_ss", "AC_base", "AC_ss")


class McFailure(RuntimeError):
    """Too many replications failed."""


def derive_seed(*key: int) -> int:
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1, np.uint64)[0])


def run_rep(model: SimModel, bundle: EstimatorBundle, rep: int, truth: TruthValues) -> dict:
    """All estimates of one replication as ``{name: (estimate, lo, hi)}``."""
    labeled, unlabeled, _ = generate(model, rep, truth)
    part_seed = derive_seed(model.seed, rep, 1)
    if model.is_causal:
        part = make_partition(labeled.n, bundle.K, part_seed)
        tes = estimate_tes(labeled, unlabeled, part, bundle.learner, bundle.propensity, bundle.alpha, bundle.trim)
        ate = tes.ate
        nan = math.nan
        return {
            "delta_hat": (ate.delta_hat, *ate.ci),
            "d_hat": (tes.d_hat, *tes.ci),
            "sample_ate": (sample_ate_baseline(labeled), nan, nan),
        }
    cache = moment_cache(unlabeled)
    out = {}
    if bundle.partitions > 1:
        multi = estimate_mean_multi(labeled, cache, bundle.partitions, bundle.K, bundle.learner, bundle.alpha, part_seed)
        out["theta_bar"] = (multi.theta_bar, *multi.ci)
    part = make_partition(labeled.n, bundle.K, part_seed)
    mean = estimate_mean(labeled, cache, part, bundle.learner, bundle.alpha)
    var = estimate_variance(labeled, cache, part, mean, bundle.alpha)
    ybar = sample_mean_ci(labeled, bundle.alpha)
    s2 = sample_variance_ci(labeled, bundle.alpha)
    out.update({
        "theta_hat": (mean.theta_hat, *mean.ci),
        "ybar": (ybar.estimate, *ybar.ci),
        "sigma_y_sq_hat": (var.sigma_y_sq_hat, *var.ci),
        "s_y_sq": (s2.estimate, *s2.ci),
    })
    return out


_FAILURES = (FoldError, ValueError, FloatingPointError, np.linalg.LinAlgError)


def _rep_task(args):
    model, bundle, rep, truth = args
    try:
        return rep, run_rep(model, bundle, rep, truth)
    except _FAILURES as exc:
        return rep, exc


def worker_count(workers: Optional[int] = None) -> int:
    """Resolve the pool size; ``SSINFER_THREADS`` caps it and 0 means all cores."""
    if workers is None:
        env = os.environ.get("SSINFER_THREADS", "1").strip() or "1"
        try:
            workers = int(env)
        except ValueError:
            raise ValueError(f"SSINFER_THREADS must be an integer, got {env!r}") from None
    if workers < 0:
        raise ValueError("worker count must be nonnegative")
    return workers if workers > 0 else (os.cpu_count() or 1)


def _target(name: str, truth: TruthValues) -> float:
    if name in ("sigma_y_sq_hat", "s_y_sq"):
        return truth.sigma_y_sq
    if name == "d_hat":
        return truth.effect_size
    return truth.theta


def summarize(results: dict, truth: TruthValues) -> tuple:
    """Aggregate per-rep ``{rep: {name: (est, lo, hi)}}``; sums are order independent."""
    names = sorted({k for r in results.values() for k in r})
    metrics = {}
    estimates = {}
    for name in names:
        rows = [results[r][name] for r in sorted(results)]
        est = np.array([row[0] for row in rows])
        lo = np.array([row[1] for row in rows])
        hi = np.array([row[2] for row in rows])
        target = _target(name, truth)
        k = len(rows)
        mse = math.fsum((est - target) ** 2) / k
        mean_est = math.fsum(est) / k
        var_est = math.fsum((est - mean_est) ** 2) / k
        if np.all(np.isnan(lo)):
            al = ac = None
        else:
            al = math.fsum(hi - lo) / k
            ac = float(np.sum((lo <= target) & (target <= hi))) / k
        metrics[name] = MetricSummary(mse, al, ac, mean_est, var_est)
        estimates[name] = est
    return metrics, estimates


def run_mc(
    model: SimModel,
    bundle: EstimatorBundle,
    reps: int,
    alpha: Optional[float] = None,
    workers: Optional[int] = None,
    truth: Optional[TruthValues] = None,
    rep_order=None,
) -> McReport:
    """Replicate ``model`` ``reps`` times and report MSE, average length and coverage.

    Failed replications are dropped and counted; more than 5% failures raise
    ``McFailure``. ``rep_order`` only changes the evaluation order.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if alpha is not None:
        bundle = replace(bundle, alpha=alpha)
    if truth is None:
        truth = truth_for(model)
    order = list(range(reps)) if rep_order is None else [int(r) for r in rep_order]
    if sorted(order) != list(range(reps)):
        raise ValueError("rep_order must be a permutation of range(reps)")
    tasks = [(model, bundle, r, truth) for r in order]
    n_workers = min(worker_count(workers), reps)
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers, mp_context=get_context("fork")) as pool:
            outcomes = list(pool.map(_rep_task, tasks, chunksize=max(1, reps // (4 * n_workers))))
    else:
        outcomes = [_rep_task(t) for t in tasks]
    results = {}
    errors = []
    for rep, out in outcomes:
        if isinstance(out, Exception):
            errors.append((rep, out))
        else:
            results[rep] = out
    if len(errors) > 0.05 * reps or not results:
        first = min(errors, key=lambda e: e[0])
        raise McFailure(f"{len(errors)} of {reps} replications failed; first (rep {first[0]}): {first[1]}")
    metrics, estimates = summarize(results, truth)
    return McReport(model, bundle, reps, truth, metrics, len(errors), estimates)


def k_sweep(model: SimModel, Ks, bundle: EstimatorBundle, reps: int, workers: Optional[int] = None) -> list:
    """MSE of the semi-supervised mean and variance for each K on common datasets."""
    truth = truth_for(model)
    rows = []
    for K in Ks:
        rep = run_mc(model, replace(bundle, K=int(K)), reps, workers=workers, truth=truth)
        rows.append({
            "K": int(K),
            "MSE_theta": rep.metrics["theta_hat"].mse,
            "MSE_sigma_sq": rep.metrics["sigma_y_sq_hat"].mse,
            "failures": rep.failures,
        })
    return rows


# ------------------------------------------------------ efficiency ratio r


@dataclass(frozen=True)
class RStudyResult:
    a: float
    r: float
    se: float
    snr: float
    slope: np.ndarray = field(repr=False, compare=False)
    draws: int = 0


def _ex_draws(model: SimModel, a: float, rng: np.random.Generator, b: int):
    X = rng.standard_normal((b, model.q))
    return X, _response(replace(model, a=a), X, rng)


def proportionality_r(
    model: SimModel,
    a: Optional[float] = None,
    oracle_draws: int = 10**6,
    force_zero_slope: bool = False,
    batches: int = 50,
) -> RStudyResult:
    """Relative reduction in asymptotic variance of the semi-supervised variance estimator.

    ``r = [Var (Y - theta)^2 - Var(eps^2 + 2 beta' V eps)] / Var (Y - theta)^2``
    with the population slope from least squares on ``oracle_draws`` fresh
    draws. The standard error comes from ``batches`` batch means.
    """
    if model.variant not in ("ex1", "ex2"):
        raise ValueError("the efficiency ratio study covers ex1 and ex2 only")
    if oracle_draws < 10**5:
        raise ValueError("oracle_draws must be at least 1e5")
    if batches < 2 or oracle_draws % batches:
        raise ValueError("oracle_draws must split into at least two equal batches")
    a = model.a if a is None else float(a)
    b = oracle_draws // batches
    q = model.q

    # pass 1: normal equations and moments
    rng = make_rng(model.seed, _STREAM_R, 1)
    G = np.zeros((q + 1, q + 1))
    c = np.zeros(q + 1)
    for _ in range(batches):
        X, y = _ex_draws(model, a, rng, b)
        Z = np.hstack([np.ones((b, 1)), X])
        G += Z.T @ Z
        c += Z.T @ y
    coef = np.zeros(q + 1) if force_zero_slope else np.linalg.solve(G, c)
    mu_x = G[0, 1:] / oracle_draws
    theta = c[0] / oracle_draws
    if force_zero_slope:
        coef[0] = theta

    # pass 2: regenerate the same draws and collect per-batch moments
    rng = make_rng(model.seed, _STREAM_R, 1)
    sums = np.zeros((batches, 4))  # sum A, sum A^2, sum B, sum B^2
    proj_sq = 0.0
    eps_sq = 0.0
    for t in range(batches):
        X, y = _ex_draws(model, a, rng, b)
        proj = (X - mu_x) @ coef[1:]
        eps = y - coef[0] - X @ coef[1:]
        A = (y - theta) ** 2
        B = eps * eps + 2.0 * proj * eps
        sums[t] = (A.sum(), (A * A).sum(), B.sum(), (B * B).sum())
        proj_sq += float(proj @ proj)
        eps_sq += float(eps @ eps)

    def ratio(s, count):
        var_a = s[1] / count - (s[0] / count) ** 2
        var_b = s[3] / count - (s[2] / count) ** 2
        return var_a, (var_a - var_b) / var_a if var_a > 0 else math.nan

    var_a, r = ratio(sums.sum(axis=0), oracle_draws)
    if not var_a > 1e-12:
        raise ValueError("Var (Y - theta)^2 is numerically zero; r is undefined")
    per_batch = np.array([ratio(s, b)[1] for s in sums])
    se = float(np.std(per_batch, ddof=1) / math.sqrt(batches))
    snr = proj_sq / eps_sq if eps_sq > 0 else math.inf
    return RStudyResult(a, float(r), se, snr, coef, oracle_draws)


def r_study(model: SimModel, a_grid, oracle_draws: int = 10**6) -> list:
    """``(a, r, se, snr)`` rows over a grid of departure sizes."""
    return [proportionality_r(model, a, oracle_draws) for a in a_grid]
