"""Cross-fitted semi-supervised estimators of the response mean and variance.

The labeled rows are split into K folds. For fold k a slope is fitted on the
other folds and used, together with the unlabeled covariate moments, to
correct the fold average of the response. Variances of the limiting normal
laws are estimated from cross-fitted residuals, giving Wald intervals.

All sample moments divide by the number of terms (never n - 1). The ratio
``tau = n / m`` enters every variance formula at its finite-sample value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .data import FoldError, FoldPartition, LabeledSet, UnlabeledSet, augment, make_partition
from .nuisance import SlopeLearner, fit_slope


def z_quantile(alpha: float) -> float:
    """Two-sided standard normal critical value ``z_{1 - alpha/2}``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return NormalDist().inv_cdf(1.0 - alpha / 2.0)


@dataclass(frozen=True)
class MomentCache:
    """Mean and second-moment matrix of the augmented unlabeled covariates."""

    mu_hat: np.ndarray
    C_hat: np.ndarray
    m: int

    @property
    def p(self) -> int:
        return self.mu_hat.shape[0]

    def quad(self, beta) -> float:
        """``beta' C_hat beta``."""
        return float(beta @ self.C_hat @ beta)


def moments_of(Z) -> MomentCache:
    """Moments of an already-augmented design (rows are observations)."""
    Z = np.asarray(Z, dtype=float)
    m = Z.shape[0]
    if m == 0:
        raise ValueError("the unlabeled set is empty")
    mu = Z.mean(axis=0)
    V = Z - mu
    C = V.T @ V / m
    C = 0.5 * (C + C.T)
    return MomentCache(mu, C, m)


def moment_cache(unlabeled: UnlabeledSet) -> MomentCache:
    if not isinstance(unlabeled, UnlabeledSet):
        unlabeled = UnlabeledSet(unlabeled)
    cache = moments_of(augment(unlabeled.covariates))
    # the intercept coordinate is constant, so its spread is exactly zero
    cache.mu_hat[0] = 1.0
    cache.C_hat[0, :] = 0.0
    cache.C_hat[:, 0] = 0.0
    return cache


@dataclass(frozen=True)
class Inference:
    estimate: float
    var_hat: float
    ci: tuple
    n: int
    alpha: float


@dataclass(frozen=True)
class MeanInference:
    theta_hat: float
    per_fold: np.ndarray
    sigma_eps_sq: float
    b_sq: float
    var_hat: float
    ci: tuple
    n: int
    m: int
    K: int
    alpha: float
    slopes: tuple = field(default=(), repr=False, compare=False)

    @property
    def estimate(self) -> float:
        return self.theta_hat

    def report(self) -> dict:
        return {
            "estimate": self.theta_hat,
            "theta_hat": self.theta_hat,
            "ci": list(self.ci),
            "variance_components": {
                "sigma_eps_sq": self.sigma_eps_sq,
                "b_sq": self.b_sq,
                "var_hat": self.var_hat,
            },
            "per_fold": self.per_fold.tolist(),
            "n": self.n,
            "m": self.m,
            "K": self.K,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class VarianceInference:
    sigma_y_sq_hat: float
    per_fold: np.ndarray
    sigma_xi_sq: float
    sigma_nu_sq: float
    var_hat: float
    ci: tuple
    n: int
    m: int
    K: int
    alpha: float
    nu: np.ndarray = field(default=None, repr=False, compare=False)
    xi: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def estimate(self) -> float:
        return self.sigma_y_sq_hat

    def report(self) -> dict:
        return {
            "estimate": self.sigma_y_sq_hat,
            "sigma_y_sq_hat": self.sigma_y_sq_hat,
            "ci": list(self.ci),
            "variance_components": {
                "sigma_nu_sq": self.sigma_nu_sq,
                "sigma_xi_sq": self.sigma_xi_sq,
                "var_hat": self.var_hat,
            },
            "per_fold": self.per_fold.tolist(),
            "n": self.n,
            "m": self.m,
            "K": self.K,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class MultiPartitionInference:
    theta_bar: float
    var_bar: float
    estimates: np.ndarray
    variances: np.ndarray
    ci: tuple
    n: int
    alpha: float

    @property
    def estimate(self) -> float:
        return self.theta_bar

    def report(self) -> dict:
        return {
            "estimate": self.theta_bar,
            "theta_bar": self.theta_bar,
            "ci": list(self.ci),
            "variance_components": {"var_bar": self.var_bar},
            "per_partition": {"estimates": self.estimates.tolist(), "variances": self.variances.tolist()},
            "n": self.n,
            "alpha": self.alpha,
        }


def _wald(est: float, var: float, n: int, alpha: float) -> tuple:
    half = z_quantile(alpha) * math.sqrt(max(var, 0.0)) / math.sqrt(n)
    return (est - half, est + half)


def crossfit_slopes(X, y, partition: FoldPartition, learner: SlopeLearner) -> tuple:
    """Fit one slope per fold on that fold's complement."""
    out = []
    for k in range(partition.K):
        comp = partition.complement(k)
        if comp.size == 0:
            raise FoldError(k, "empty fold complement (K = 1 leaves nothing to fit on)")
        try:
            out.append(fit_slope(X[comp], y[comp], learner))
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise FoldError(k, f"slope fit failed: {exc}") from exc
    return tuple(out)


def _check_slopes(slopes, K, p):
    slopes = tuple(np.asarray(b, dtype=float) for b in slopes)
    if len(slopes) != K:
        raise ValueError(f"expected {K} fold slopes, got {len(slopes)}")
    for b in slopes:
        if b.shape != (p,):
            raise ValueError(f"slope of shape {b.shape} does not match dimension {p}")
    return slopes


def mean_from_design(y, Z, cache: MomentCache, partition: FoldPartition, slopes, alpha=0.05) -> MeanInference:
    """Mean estimator on an augmented design ``Z`` with injected fold slopes."""
    n = y.shape[0]
    K = partition.K
    slopes = _check_slopes(slopes, K, Z.shape[1])
    per_fold = np.empty(K)
    for k in range(K):
        idx = partition.fold(k)
        b = slopes[k]
        per_fold[k] = cache.mu_hat @ b + np.mean(y[idx] - Z[idx] @ b)
    theta = float(np.mean(per_fold))
    s_eps = np.empty(K)
    b_sq = np.empty(K)
    for k in range(K):
        idx = partition.fold(k)
        b = slopes[k]
        proj = (Z[idx] - cache.mu_hat) @ b
        eps = y[idx] - theta - proj
        s_eps[k] = np.mean(eps**2)
        b_sq[k] = cache.quad(b) + 2.0 * np.mean(proj * eps)
    sigma_eps_sq = float(np.mean(s_eps))
    b_sq_hat = float(np.mean(b_sq))
    var = sigma_eps_sq + (n / cache.m) * max(b_sq_hat, 0.0)
    return MeanInference(
        theta, per_fold, sigma_eps_sq, b_sq_hat, var, _wald(theta, var, n, alpha),
        n, cache.m, K, alpha, slopes,
    )


def variance_from_design(y, Z, cache: MomentCache, partition: FoldPartition, mean: MeanInference, alpha=0.05) -> VarianceInference:
    """Variance estimator reusing the fold slopes and aggregated mean of ``mean``."""
    n = y.shape[0]
    K = partition.K
    slopes = _check_slopes(mean.slopes, K, Z.shape[1])
    theta = mean.theta_hat
    per_fold = np.empty(K)
    eta = np.empty(n)
    xi = np.empty(n)
    for k in range(K):
        idx = partition.fold(k)
        b = slopes[k]
        proj = (Z[idx] - cache.mu_hat) @ b
        bcb = cache.quad(b)
        dev = y[idx] - theta
        per_fold[k] = np.mean(dev**2) + np.mean(bcb - proj**2)
        eps = dev - proj
        eta[idx] = eps**2 + 2.0 * proj * eps + bcb
        xi[idx] = proj**2 - bcb
    sigma_sq = float(np.mean(per_fold))
    nu = eta - sigma_sq
    sigma_nu_sq = float(np.mean(nu**2))
    sigma_xi_sq = float(np.mean(xi**2))
    var = sigma_nu_sq + (n / cache.m) * sigma_xi_sq
    return VarianceInference(
        sigma_sq, per_fold, sigma_xi_sq, sigma_nu_sq, var, _wald(sigma_sq, var, n, alpha),
        n, cache.m, K, alpha, nu, xi,
    )


def _check_pair(labeled: LabeledSet, cache: MomentCache, partition: FoldPartition):
    if labeled.p != cache.p:
        raise ValueError(f"labeled data has p={labeled.p} but the unlabeled moments have p={cache.p}")
    if partition.n != labeled.n:
        raise ValueError(f"partition covers {partition.n} rows but there are {labeled.n} labeled rows")


def estimate_mean(
    labeled: LabeledSet,
    cache: MomentCache,
    partition: FoldPartition,
    learner: Optional[SlopeLearner] = None,
    alpha: float = 0.05,
    slopes: Optional[Sequence[np.ndarray]] = None,
) -> MeanInference:
    """Cross-fitted semi-supervised mean with its Wald interval.

    Either ``learner`` fits the fold slopes or ``slopes`` injects them.
    The interval uses ``sigma_eps^2 + (n/m) max(b^2, 0)``; the raw ``b^2``
    is reported unclipped.
    """
    _check_pair(labeled, cache, partition)
    if slopes is None:
        if learner is None:
            raise ValueError("either a learner or injected slopes is required")
        slopes = crossfit_slopes(labeled.covariates, labeled.responses, partition, learner)
    return mean_from_design(labeled.responses, augment(labeled.covariates), cache, partition, slopes, alpha)


def estimate_variance(
    labeled: LabeledSet,
    cache: MomentCache,
    partition: FoldPartition,
    mean: MeanInference,
    alpha: float = 0.05,
) -> VarianceInference:
    """Cross-fitted semi-supervised variance of the response.

    ``mean`` must come from ``estimate_mean`` on the same data and partition;
    its fold slopes and aggregated mean are reused.
    """
    _check_pair(labeled, cache, partition)
    return variance_from_design(labeled.responses, augment(labeled.covariates), cache, partition, mean, alpha)


def partition_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(t)]).generate_state(1, np.uint64)[0])


def estimate_mean_multi(
    labeled: LabeledSet,
    cache: MomentCache,
    T: int,
    K: int,
    learner: SlopeLearner,
    alpha: float = 0.05,
    seed: int = 0,
    partitions: Optional[Sequence[FoldPartition]] = None,
) -> MultiPartitionInference:
    """Average the mean estimator over T random partitions.

    The variance adds the spread of the per-partition estimates to their mean
    estimated variance, and the interval divides its root by sqrt(n) exactly
    as the per-partition interval does.
    """
    if partitions is None:
        if T < 1:
            raise ValueError("T must be at least 1")
        partitions = [make_partition(labeled.n, K, partition_seed(seed, t)) for t in range(T)]
    fits = [estimate_mean(labeled, cache, part, learner, alpha) for part in partitions]
    est = np.array([f.theta_hat for f in fits])
    var = np.array([f.var_hat for f in fits])
    theta_bar = float(np.mean(est))
    var_bar = float(np.mean(var) + np.mean((est - theta_bar) ** 2))
    return MultiPartitionInference(
        theta_bar, var_bar, est, var, _wald(theta_bar, var_bar, labeled.n, alpha), labeled.n, alpha
    )


# ----------------------------------------------------------------- baselines


def _responses(labeled) -> np.ndarray:
    if isinstance(labeled, LabeledSet):
        return labeled.responses
    return np.asarray(getattr(labeled, "responses", labeled), dtype=float).reshape(-1)


def sample_mean_ci(labeled, alpha: float = 0.05) -> Inference:
    """Sample mean with the interval ``ybar -+ z S_Y / sqrt(n)`` (S_Y divides by n)."""
    y = _responses(labeled)
    n = y.shape[0]
    if n < 1:
        raise ValueError("no responses")
    ybar = float(np.mean(y))
    s2 = float(np.mean((y - ybar) ** 2))
    return Inference(ybar, s2, _wald(ybar, s2, n, alpha), n, alpha)


def sample_kurtosis(y) -> float:
    """Bias-adjusted kurtosis estimate (3 for Gaussian data) built on S_Y with divisor n."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n < 4:
        raise ValueError("kurtosis estimate needs n >= 4")
    dev = y - y.mean()
    s2 = np.mean(dev**2)
    if s2 <= 0:
        raise ValueError("kurtosis undefined: responses are constant")
    return float(
        n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * np.sum(dev**4) / s2**2
        - 3.0 * (n - 1) ** 2 / ((n - 2) * (n - 3))
        + 3.0
    )


def sample_variance_ci(labeled, alpha: float = 0.05) -> Inference:
    """S_Y^2 with the kurtosis-adjusted asymmetric interval.

    ``[S^2 / (1 + z h), S^2 / (1 - z h)]`` with ``h = sqrt(gamma - 1) / sqrt(n)``;
    the upper end is infinite when ``z h >= 1``.
    """
    y = _responses(labeled)
    n = y.shape[0]
    gamma = sample_kurtosis(y)
    s2 = float(np.mean((y - y.mean()) ** 2))
    h = z_quantile(alpha) * math.sqrt(max(gamma - 1.0, 0.0)) / math.sqrt(n)
    lo = s2 / (1.0 + h)
    hi = s2 / (1.0 - h) if h < 1.0 else math.inf
    return Inference(s2, s2**2 * max(gamma - 1.0, 0.0), (lo, hi), n, alpha)
