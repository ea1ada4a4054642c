"""Datasets, fold partitions and run configuration shared by the estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FoldError(RuntimeError):
    """An estimation step failed on a specific cross-fitting fold."""

    def __init__(self, fold: int, message: str):
        super().__init__(f"fold {fold}: {message}")
        self.fold = fold


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :] if a.size else a.reshape(0, 0)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_vector(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_binary(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must contain only 0/1 values")
    return a


def augment(covariates) -> np.ndarray:
    """Prepend a column of ones: ``X -> [1, X]``."""
    X = np.asarray(covariates, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"covariates must be 2-d, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("covariates contain non-finite entries")
    out = np.empty((X.shape[0], X.shape[1] + 1))
    out[:, 0] = 1.0
    out[:, 1:] = X
    return out


@dataclass(frozen=True)
class LabeledSet:
    responses: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        y = _as_vector(self.responses, "responses")
        X = _as_matrix(self.covariates, "covariates")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{y.shape[0]} responses but {X.shape[0]} covariate rows")
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "covariates", X)

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def p(self) -> int:
        """Dimension of the augmented covariate (raw columns + intercept)."""
        return self.covariates.shape[1] + 1


@dataclass(frozen=True)
class UnlabeledSet:
    covariates: np.ndarray

    def __post_init__(self):
        X = _as_matrix(self.covariates, "covariates")
        if X.shape[0] < 2:
            raise ValueError("the unlabeled set needs at least 2 rows")
        object.__setattr__(self, "covariates", X)

    @property
    def m(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1] + 1


@dataclass(frozen=True)
class CausalLabeledSet:
    responses: np.ndarray
    treatments: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        y = _as_vector(self.responses, "responses")
        d = _as_binary(self.treatments, "treatments")
        X = _as_matrix(self.covariates, "covariates")
        if not (y.shape[0] == d.shape[0] == X.shape[0]):
            raise ValueError("responses, treatments and covariates differ in length")
        if d.size and (d.min() == d.max()):
            raise ValueError("labeled data must contain both treated and control rows")
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "treatments", d)
        object.__setattr__(self, "covariates", X)

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1] + 1

    def swap_arms(self) -> "CausalLabeledSet":
        return CausalLabeledSet(self.responses, 1.0 - self.treatments, self.covariates)


@dataclass(frozen=True)
class CausalUnlabeledSet:
    treatments: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        d = _as_binary(self.treatments, "treatments")
        X = _as_matrix(self.covariates, "covariates")
        if d.shape[0] != X.shape[0]:
            raise ValueError("treatments and covariates differ in length")
        if X.shape[0] < 2:
            raise ValueError("the unlabeled set needs at least 2 rows")
        object.__setattr__(self, "treatments", d)
        object.__setattr__(self, "covariates", X)

    @property
    def m(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1] + 1

    def swap_arms(self) -> "CausalUnlabeledSet":
        return CausalUnlabeledSet(1.0 - self.treatments, self.covariates)


def make_rng(*key: int) -> np.random.Generator:
    """Philox4x64 counter-based generator keyed by a tuple of integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


@dataclass(frozen=True)
class FoldPartition:
    K: int
    assignment: np.ndarray
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64).reshape(-1)
        if self.K < 1:
            raise ValueError("K must be positive")
        if a.size and (a.min() < 0 or a.max() >= self.K):
            raise ValueError("fold labels must lie in 0..K-1")
        counts = np.bincount(a, minlength=self.K)
        if np.any(counts == 0):
            raise ValueError("every fold must be nonempty")
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    def fold(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)

    def complement(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != k)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)


def make_partition(n: int, K: int, seed: int = 0) -> FoldPartition:
    """Uniformly random balanced K-way split of ``range(n)``.

    A random permutation is drawn from ``make_rng(seed)`` and position ``i`` of
    the permutation goes to fold ``i mod K``, so fold sizes differ by at most one.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > n:
        raise ValueError(f"K={K} exceeds n={n}")
    perm = make_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % K
    return FoldPartition(K, assignment, seed)


@dataclass(frozen=True)
class RunConfig:
    K: int = 2
    alpha: float = 0.05
    partitions: int = 1
    seed: int = 0
    learner: "object" = None  # LearnerSpec; None means the default sqrt-Lasso
    propensity: "object" = None  # LearnerSpec for the logistic propensity fit
    trim: tuple = field(default=(0.01, 0.99))

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("k must be a positive integer")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.partitions < 1:
            raise ValueError("t_partitions must be a positive integer")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        lo, hi = self.trim
        if not (0 < lo < 1 and 0 < hi < 1):
            raise ValueError("trim bounds must lie in (0, 1)")
        if lo >= hi:
            raise ValueError("trim lower >= upper")
        object.__setattr__(self, "trim", (float(lo), float(hi)))
