"""Semi-supervised average treatment effect and treatment effect size.

Outcome slopes are fitted separately on the treated and control rows of each
fold complement; the propensity model is fitted on the whole complement and
its predictions are clipped to the trim bounds before inverse weighting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import CausalLabeledSet, CausalUnlabeledSet, FoldError, FoldPartition, augment
from .estimators import _wald, mean_from_design, moments_of, variance_from_design
from .nuisance import LearnerSpec, SlopeLearner, fit_logistic_lasso, fit_slope

PropensityLearner = Union[LearnerSpec, Callable]


@dataclass(frozen=True)
class FoldNuisance:
    """Fold-complement fits: treated slope, control slope and a propensity model.

    ``propensity`` is anything with ``predict(X)`` or a plain callable ``X -> e(X)``.
    """

    beta1: np.ndarray
    beta0: np.ndarray
    propensity: object

    def e(self, X) -> np.ndarray:
        f = getattr(self.propensity, "predict", self.propensity)
        return np.asarray(f(X), dtype=float).reshape(-1)


@dataclass(frozen=True)
class AteInference:
    delta_hat: float
    tau1_hat: float
    tau0_hat: float
    V1: float
    V2: float
    V_delta: float
    ci: tuple
    per_fold: np.ndarray
    n: int
    m: int
    K: int
    alpha: float
    nuisances: tuple = field(default=(), repr=False, compare=False)
    nu_delta: np.ndarray = field(default=None, repr=False, compare=False)
    xi_delta: np.ndarray = field(default=None, repr=False, compare=False)
    propensities: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def estimate(self) -> float:
        return self.delta_hat

    def report(self) -> dict:
        return {
            "estimate": self.delta_hat,
            "delta_hat": self.delta_hat,
            "ci": list(self.ci),
            "variance_components": {
                "V1": self.V1,
                "V2": self.V2,
                "V_delta": self.V_delta,
                "tau1_hat": self.tau1_hat,
                "tau0_hat": self.tau0_hat,
            },
            "per_fold": self.per_fold.tolist(),
            "n": self.n,
            "m": self.m,
            "K": self.K,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class TesInference:
    d_hat: float
    sigma_hat: float
    delta_hat: float
    V3: float
    V4: float
    V_d: float
    ci: tuple
    n: int
    m: int
    K: int
    alpha: float
    degenerate: bool = False
    ate: Optional[AteInference] = field(default=None, repr=False, compare=False)

    @property
    def estimate(self) -> float:
        return self.d_hat

    def report(self) -> dict:
        out = {
            "estimate": self.d_hat,
            "d_hat": self.d_hat,
            "delta_hat": self.delta_hat,
            "sigma_hat": self.sigma_hat,
            "ci": list(self.ci),
            "variance_components": {"V3": self.V3, "V4": self.V4, "V_d": self.V_d},
            "degenerate": self.degenerate,
            "n": self.n,
            "m": self.m,
            "K": self.K,
            "alpha": self.alpha,
        }
        if self.ate is not None:
            out["variance_components"].update({"V1": self.ate.V1, "V2": self.ate.V2})
        return out


def _fit_propensity(X, d, learner: PropensityLearner, trim):
    if isinstance(learner, LearnerSpec):
        return fit_logistic_lasso(X, d, learner, trim)
    return learner(X, d)


def fit_fold_nuisances(
    labeled: CausalLabeledSet,
    partition: FoldPartition,
    outcome_learner: SlopeLearner,
    propensity_learner: PropensityLearner,
    trim=(0.01, 0.99),
) -> tuple:
    X, y, d = labeled.covariates, labeled.responses, labeled.treatments
    out = []
    for k in range(partition.K):
        comp = partition.complement(k)
        treated = comp[d[comp] == 1]
        control = comp[d[comp] == 0]
        if treated.size == 0 or control.size == 0:
            arm = "treated" if treated.size == 0 else "control"
            raise FoldError(k, f"no {arm} rows in the fold complement")
        try:
            b1 = fit_slope(X[treated], y[treated], outcome_learner)
            b0 = fit_slope(X[control], y[control], outcome_learner)
            prop = _fit_propensity(X[comp], d[comp], propensity_learner, trim)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise FoldError(k, f"nuisance fit failed: {exc}") from exc
        out.append(FoldNuisance(b1, b0, prop))
    return tuple(out)


def _check(labeled: CausalLabeledSet, unlabeled: CausalUnlabeledSet, partition: FoldPartition):
    if labeled.p != unlabeled.p:
        raise ValueError(f"labeled data has p={labeled.p} but unlabeled data has p={unlabeled.p}")
    if partition.n != labeled.n:
        raise ValueError(f"partition covers {partition.n} rows but there are {labeled.n} labeled rows")


def estimate_ate(
    labeled: CausalLabeledSet,
    unlabeled: CausalUnlabeledSet,
    partition: FoldPartition,
    outcome_learner: Optional[SlopeLearner] = None,
    propensity_learner: Optional[PropensityLearner] = None,
    alpha: float = 0.05,
    trim=(0.01, 0.99),
    nuisances: Optional[Sequence[FoldNuisance]] = None,
) -> AteInference:
    """Inverse-propensity-weighted semi-supervised ATE with its Wald interval.

    Fold nuisances are fitted unless injected through ``nuisances``.
    """
    _check(labeled, unlabeled, partition)
    if nuisances is None:
        if outcome_learner is None or propensity_learner is None:
            raise ValueError("learners are required unless nuisances are injected")
        nuisances = fit_fold_nuisances(labeled, partition, outcome_learner, propensity_learner, trim)
    if len(nuisances) != partition.K:
        raise ValueError(f"expected {partition.K} fold nuisances, got {len(nuisances)}")
    lo, hi = trim
    y, d = labeled.responses, labeled.treatments
    Z = augment(labeled.covariates)
    mu = augment(unlabeled.covariates).mean(axis=0)
    n, m, K = labeled.n, unlabeled.m, partition.K

    tau1 = np.empty(K)
    tau0 = np.empty(K)
    e_all = np.empty(n)
    w1 = np.empty(n)
    w0 = np.empty(n)
    res1 = np.empty(n)
    res0 = np.empty(n)
    for k in range(K):
        idx = partition.fold(k)
        nu = nuisances[k]
        e = np.clip(nu.e(labeled.covariates[idx]), lo, hi)
        e_all[idx] = e
        w1[idx] = d[idx] / e
        w0[idx] = (1.0 - d[idx]) / (1.0 - e)
        res1[idx] = y[idx] - Z[idx] @ nu.beta1
        res0[idx] = y[idx] - Z[idx] @ nu.beta0
        tau1[k] = mu @ nu.beta1 + np.mean(w1[idx] * res1[idx])
        tau0[k] = mu @ nu.beta0 + np.mean(w0[idx] * res0[idx])
    per_fold = tau1 - tau0
    delta = float(np.mean(per_fold))

    nu_delta = np.empty(n)
    xi_delta = np.empty(n)
    V1k = np.empty(K)
    V2k = np.empty(K)
    for k in range(K):
        idx = partition.fold(k)
        diff = nuisances[k].beta1 - nuisances[k].beta0
        xi_delta[idx] = (Z[idx] - mu) @ diff
        e_delta = delta - mu @ diff
        nu_delta[idx] = w1[idx] * res1[idx] - w0[idx] * res0[idx] - e_delta
        V1k[k] = np.mean(nu_delta[idx] ** 2)
        V2k[k] = np.mean(xi_delta[idx] ** 2)
    V_delta = float(np.mean(V1k + (n / m) * V2k))
    return AteInference(
        delta, float(np.mean(tau1)), float(np.mean(tau0)), float(np.mean(V1k)), float(np.mean(V2k)),
        V_delta, _wald(delta, V_delta, n, alpha), per_fold, n, m, K, alpha,
        tuple(nuisances), nu_delta, xi_delta, e_all,
    )


def stack_design(treatments, covariates) -> np.ndarray:
    """Rows ``(D x~', (1 - D) x~')`` of length 2p."""
    Z = augment(np.asarray(covariates, dtype=float))
    d = np.asarray(treatments, dtype=float).reshape(-1, 1)
    return np.hstack([d * Z, (1.0 - d) * Z])


def estimate_tes(
    labeled: CausalLabeledSet,
    unlabeled: CausalUnlabeledSet,
    partition: FoldPartition,
    outcome_learner: Optional[SlopeLearner] = None,
    propensity_learner: Optional[PropensityLearner] = None,
    alpha: float = 0.05,
    trim=(0.01, 0.99),
    nuisances: Optional[Sequence[FoldNuisance]] = None,
    ate: Optional[AteInference] = None,
) -> TesInference:
    """Treatment effect size ``delta / sigma`` with a delta-method interval.

    ``sigma^2`` is the semi-supervised variance of Y on the stacked design;
    its fold slope is the pair of arm slopes already fitted for the ATE,
    which is the least-squares projection on the stacked design because
    that design is block separable across arms.
    """
    if ate is None:
        ate = estimate_ate(labeled, unlabeled, partition, outcome_learner, propensity_learner, alpha, trim, nuisances)
    n, m, K = labeled.n, unlabeled.m, partition.K
    y = labeled.responses
    W = stack_design(labeled.treatments, labeled.covariates)
    cache = moments_of(stack_design(unlabeled.treatments, unlabeled.covariates))
    slopes = [np.concatenate([f.beta1, f.beta0]) for f in ate.nuisances]
    mean_w = mean_from_design(y, W, cache, partition, slopes, alpha)
    var_w = variance_from_design(y, W, cache, partition, mean_w, alpha)
    sigma_sq = var_w.sigma_y_sq_hat
    delta = ate.delta_hat
    if not sigma_sq > 0:
        warnings.warn(
            f"semi-supervised variance estimate {sigma_sq:.3g} is not positive; effect size set to 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return TesInference(0.0, 0.0, delta, 0.0, 0.0, 0.0, (0.0, 0.0), n, m, K, alpha, True, ate)
    sigma = math.sqrt(sigma_sq)
    d_hat = delta / sigma
    nu_d = ate.nu_delta / sigma - delta * var_w.nu / (2.0 * sigma**3)
    xi_d = ate.xi_delta / sigma - delta * var_w.xi / (2.0 * sigma**3)
    V3k = np.array([np.mean(nu_d[partition.fold(k)] ** 2) for k in range(K)])
    V4k = np.array([np.mean(xi_d[partition.fold(k)] ** 2) for k in range(K)])
    V3, V4 = float(np.mean(V3k)), float(np.mean(V4k))
    V_d = V3 + (n / m) * V4
    return TesInference(d_hat, sigma, delta, V3, V4, V_d, _wald(d_hat, V_d, n, alpha), n, m, K, alpha, False, ate)
