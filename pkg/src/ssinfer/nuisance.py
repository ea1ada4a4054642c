"""Regularised regression and classification fits for the nuisance slopes.

Every slope fitter takes raw covariates ``X`` (r x (p-1)) and returns a
length-p coefficient vector with the unpenalised intercept at index 0.
Covariates are standardised internally (and the response rescaled to unit
standard deviation) and coefficients are reported on the raw scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _kernels
from .data import make_partition

VARIANTS = ("lasso", "sqrt_lasso", "lasso_cv", "ridge", "ols", "zero")


@dataclass(frozen=True)
class LearnerSpec:
    """Which nuisance solver to run and how.

    ``lam`` is a nonnegative float, ``"cv"`` (cross-validated) or ``"auto"``
    (``sqrt(log p / r)`` for r training rows, the square-root Lasso default).
    """

    variant: str = "sqrt_lasso"
    lam: Union[float, str] = "auto"
    cv_folds: int = 10
    tolerance: float = 1e-7
    max_iters: int = 10_000
    cv_tolerance: float = 1e-4
    n_lambdas: int = 100
    lambda_min_ratio: float = 1e-3
    standardize: bool = True
    cv_seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown learner variant {self.variant!r}")
        if isinstance(self.lam, str):
            if self.lam not in ("cv", "auto"):
                raise ValueError(f"lambda must be a number, 'cv' or 'auto', got {self.lam!r}")
        elif not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be nonnegative")
        if self.tolerance <= 0 or self.cv_tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        if self.n_lambdas < 1:
            raise ValueError("n_lambdas must be positive")
        if not 0 < self.lambda_min_ratio < 1:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class SlopeFit:
    coefficients: np.ndarray
    solver: str
    lam: float = 0.0
    iterations: int = 0
    converged: bool = True
    info: dict = field(default_factory=dict, compare=False)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.coefficients[0] + X @ self.coefficients[1:]


@dataclass(frozen=True)
class PropensityFit:
    coefficients: np.ndarray
    trim: tuple = (0.01, 0.99)
    lam: float = 0.0
    iterations: int = 0
    converged: bool = True

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        eta = self.coefficients[0] + X @ self.coefficients[1:]
        return np.clip(_sigmoid(eta), *self.trim)


def _sigmoid(eta):
    return np.exp(-np.logaddexp(0.0, -eta))


def auto_lambda(r: int, p: int) -> float:
    """Square-root Lasso penalty ``sqrt(log p / r)``."""
    return math.sqrt(math.log(p) / r)


class _Standardized:
    """Centred/scaled copy of a design and response."""

    def __init__(self, X, y, standardize=True):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X and y have incompatible shapes")
        r = X.shape[0]
        if r == 0:
            raise ValueError("cannot fit on zero rows")
        self.r = r
        self.x_mean = X.mean(axis=0)
        Xc = X - self.x_mean
        sd = np.sqrt((Xc**2).mean(axis=0))
        if standardize:
            scale = np.where(sd > 1e-12 * (1.0 + np.abs(self.x_mean)), sd, 0.0)
        else:
            scale = np.where(sd > 0, 1.0, 0.0)
        self.x_scale = scale
        safe = np.where(scale > 0, scale, 1.0)
        self.X = np.asfortranarray(np.where(scale > 0, Xc / safe, 0.0))
        self.col_sq = (self.X**2).mean(axis=0)
        self.y_mean = y.mean()
        yc = y - self.y_mean
        y_sd = math.sqrt(float(np.mean(yc**2)))
        self.y_scale = y_sd if y_sd > 1e-300 else 0.0
        self.y = yc / self.y_scale if self.y_scale > 0 else yc

    def lambda_max(self) -> float:
        """Smallest penalty (raw response units) that zeroes every slope."""
        if self.y_scale == 0:
            return 0.0
        return float(np.max(np.abs(self.X.T @ self.y)) / self.r * self.y_scale) if self.X.shape[1] else 0.0

    def unscale(self, beta_std) -> np.ndarray:
        safe = np.where(self.x_scale > 0, self.x_scale, 1.0)
        slopes = np.where(self.x_scale > 0, beta_std * self.y_scale / safe, 0.0)
        out = np.empty(slopes.shape[0] + 1)
        out[1:] = slopes
        out[0] = self.y_mean - self.x_mean @ slopes
        return out


def lambda_max(X, y, standardize: bool = True) -> float:
    """Kill threshold of the Lasso: max |X_c' (y - ybar)| / r on the solver's scale."""
    return _Standardized(X, y, standardize).lambda_max()


def _zero_fit(st: _Standardized, solver: str, lam: float) -> SlopeFit:
    coef = np.zeros(st.X.shape[1] + 1)
    coef[0] = st.y_mean
    return SlopeFit(coef, solver, lam, 0, True)


def _lasso_std(st: _Standardized, lam_internal: float, spec: LearnerSpec, beta=None, trace=None):
    q = st.X.shape[1]
    beta = np.zeros(q) if beta is None else beta
    trace = np.empty(0) if trace is None else trace
    sweeps, ok = _kernels.lasso_cd(
        st.X, st.y, float(lam_internal), beta, st.col_sq, spec.tolerance, spec.max_iters, trace
    )
    return beta, int(sweeps), bool(ok)


def fit_lasso(X, y, lam: float, spec: LearnerSpec = LearnerSpec("lasso"), trace=None) -> SlopeFit:
    """Lasso with unpenalised intercept.

    Minimises ``(2r)^-1 ||y - b0 - X b||^2 + lam * sum_j s_j |b_j|`` where
    ``s_j`` is the standard deviation of column j (1 when ``standardize`` is off).
    Pass a float array as ``trace`` to record the objective after each sweep
    (on the solver's internal scale).
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    st = _Standardized(X, y, spec.standardize)
    if st.y_scale == 0 or st.X.shape[1] == 0:
        return _zero_fit(st, "lasso", lam)
    beta, sweeps, ok = _lasso_std(st, lam / st.y_scale, spec, trace=trace)
    return SlopeFit(st.unscale(beta), "lasso", lam, sweeps, ok)


def fit_sqrt_lasso(X, y, lam, spec: LearnerSpec = LearnerSpec("sqrt_lasso")) -> SlopeFit:
    """Square-root Lasso via the scaled-Lasso fixed point.

    Alternates the noise level ``sigma = ||resid|| / sqrt(r)`` with a Lasso at
    penalty ``lam * sigma`` until sigma moves by less than 1e-8.
    """
    st = _Standardized(X, y, spec.standardize)
    if lam == "auto":
        lam = auto_lambda(st.r, st.X.shape[1] + 1)
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if st.y_scale == 0 or st.X.shape[1] == 0:
        return _zero_fit(st, "sqrt_lasso", lam)
    beta = np.zeros(st.X.shape[1])
    sigma = math.sqrt(float(np.mean(st.y**2)))
    total = 0
    ok = False
    for outer in range(200):
        beta, sweeps, inner_ok = _lasso_std(st, lam * sigma, spec, beta)
        total += sweeps
        resid = st.y - st.X @ beta
        new_sigma = math.sqrt(float(np.mean(resid**2)))
        if new_sigma <= 1e-12:
            # exact interpolation: fall back to the vanishing-penalty Lasso
            beta, sweeps, inner_ok = _lasso_std(st, 1e-6 * st.lambda_max() / st.y_scale, spec, beta)
            total += sweeps
            ok = inner_ok
            break
        if abs(new_sigma - sigma) < 1e-8:
            sigma = new_sigma
            ok = inner_ok
            break
        sigma = new_sigma
    return SlopeFit(st.unscale(beta), "sqrt_lasso", lam, total, ok, {"sigma": sigma * st.y_scale})


def _lambda_grid(lmax: float, n: int, ratio: float) -> np.ndarray:
    if n == 1:
        return np.array([lmax])
    return lmax * np.logspace(0.0, math.log10(ratio), n)


# A path stops once the fit explains this much of the response variance;
# smaller penalties only chase interpolation.
PATH_MIN_RSS_FRAC = 1e-3


def _path(st: _Standardized, lams, tol, max_sweeps):
    """Solutions along ``lams`` and how many were fitted before the path stopped."""
    r, q = st.X.shape
    if q <= 5 * r:
        G = np.ascontiguousarray(st.X.T @ st.X) / r
        out, fitted = _kernels.lasso_path_gram(
            G, st.X.T @ st.y / r, float(st.y @ st.y) / r, lams, st.col_sq, tol, max_sweeps, PATH_MIN_RSS_FRAC
        )
    else:
        out, fitted = _kernels.lasso_path(st.X, st.y, lams, st.col_sq, tol, max_sweeps, PATH_MIN_RSS_FRAC)
    return out, int(fitted)


def fit_lasso_cv(X, y, spec: LearnerSpec = LearnerSpec("lasso_cv", "cv")) -> SlopeFit:
    """Lasso with the penalty chosen by K-fold cross-validation.

    Grid: ``n_lambdas`` log-spaced points from the kill threshold down to
    ``lambda_min_ratio`` times it, cut where the full-data path stops (the
    fit explains 99.9% of the response variance). Fold paths that stop
    earlier carry their last solution forward. Ties go to the smallest penalty.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    r = X.shape[0]
    if r < spec.cv_folds:
        raise ValueError(f"{r} rows cannot support {spec.cv_folds}-fold cross-validation")
    st = _Standardized(X, y, spec.standardize)
    if st.y_scale == 0 or st.X.shape[1] == 0:
        return _zero_fit(st, "lasso_cv", 0.0)
    grid = _lambda_grid(st.lambda_max(), spec.n_lambdas, spec.lambda_min_ratio)
    full_path, fitted = _path(st, grid / st.y_scale, spec.cv_tolerance, spec.max_iters)
    grid = grid[:fitted]
    folds = make_partition(r, spec.cv_folds, spec.cv_seed)
    sse = np.zeros(grid.shape[0])
    for k in range(spec.cv_folds):
        tr, te = folds.complement(k), folds.fold(k)
        sk = _Standardized(X[tr], y[tr], spec.standardize)
        if sk.y_scale == 0:
            pred = np.full((grid.shape[0], te.shape[0]), sk.y_mean)
        else:
            path = _path(sk, grid / sk.y_scale, spec.cv_tolerance, spec.max_iters)[0]
            safe = np.where(sk.x_scale > 0, sk.x_scale, 1.0)
            slopes = np.where(sk.x_scale > 0, path * sk.y_scale / safe, 0.0)
            intercepts = sk.y_mean - slopes @ sk.x_mean
            pred = intercepts[:, None] + slopes @ X[te].T
        sse += ((pred - y[te]) ** 2).sum(axis=1)
    mse = sse / r
    best = int(np.flatnonzero(mse <= mse.min())[-1])
    beta = full_path[best].copy()
    beta, sweeps, ok = _lasso_std(st, grid[best] / st.y_scale, spec, beta)
    return SlopeFit(
        st.unscale(beta), "lasso_cv", float(grid[best]), sweeps, ok,
        {"cv_mse": mse, "grid": grid, "best_index": best},
    )


def fit_ridge(X, y, lam: float, spec: LearnerSpec = LearnerSpec("ridge", 1.0)) -> SlopeFit:
    """Ridge: minimises ``(2r)^-1 ||y - b0 - X b||^2 + (lam/2) ||b||^2`` on the standardised scale."""
    st = _Standardized(X, y, spec.standardize)
    if st.y_scale == 0 or st.X.shape[1] == 0:
        return _zero_fit(st, "ridge", lam)
    q = st.X.shape[1]
    G = st.X.T @ st.X / st.r + lam * np.eye(q)
    beta = np.linalg.solve(G, st.X.T @ st.y / st.r) if lam > 0 else np.linalg.lstsq(st.X, st.y, rcond=None)[0]
    return SlopeFit(st.unscale(beta), "ridge", float(lam), 1, True)


def fit_ols(X, y, spec: LearnerSpec = LearnerSpec("ols", 0.0)) -> SlopeFit:
    """Least squares with intercept; minimum-norm solution when rank deficient."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    A = np.column_stack([np.ones(X.shape[0]), X])
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    return SlopeFit(coef, "ols", 0.0, 1, True)


def fit_zero(X, y=None, spec=None) -> SlopeFit:
    """All-zero coefficients, intercept included."""
    X = np.asarray(X)
    return SlopeFit(np.zeros(X.shape[1] + 1), "zero", 0.0, 0, True)


SlopeLearner = Union[LearnerSpec, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def fit_slope(X, y, learner: SlopeLearner) -> np.ndarray:
    """Dispatch to the solver named by ``learner`` and return its coefficients.

    A callable ``learner(X, y)`` may be supplied instead of a spec; it must
    return a length-p coefficient vector (or a ``SlopeFit``).
    """
    if not isinstance(learner, LearnerSpec):
        out = learner(X, y)
        coef = out.coefficients if isinstance(out, SlopeFit) else np.asarray(out, dtype=float)
        if coef.shape != (np.shape(X)[1] + 1,):
            raise ValueError(f"learner returned coefficients of shape {coef.shape}")
        if not np.all(np.isfinite(coef)):
            raise FloatingPointError("learner returned non-finite coefficients")
        return coef
    v = learner.variant
    if v == "zero":
        fit = fit_zero(X)
    elif v == "ols":
        fit = fit_ols(X, y, learner)
    elif v == "lasso_cv" or (v == "lasso" and learner.lam == "cv"):
        fit = fit_lasso_cv(X, y, learner)
    elif v == "sqrt_lasso":
        fit = fit_sqrt_lasso(X, y, learner.lam, learner)
    elif v == "lasso":
        lam = auto_lambda(len(y), np.shape(X)[1] + 1) if learner.lam == "auto" else learner.lam
        fit = fit_lasso(X, y, lam, learner)
    elif v == "ridge":
        lam = 1.0 if isinstance(learner.lam, str) else learner.lam
        fit = fit_ridge(X, y, lam, learner)
    else:  # pragma: no cover - guarded by LearnerSpec
        raise ValueError(v)
    if not np.all(np.isfinite(fit.coefficients)):
        raise FloatingPointError(f"{v} produced non-finite coefficients")
    return fit.coefficients


# ---------------------------------------------------------------- propensity


def _logistic_std(Xs, d, lam, spec, b0=0.0, beta=None, tol=None):
    beta = np.zeros(Xs.shape[1]) if beta is None else beta
    tol = spec.tolerance if tol is None else tol
    b0, its, ok = _kernels.logistic_cd(Xs, d, float(lam), float(b0), beta, tol, 200, spec.max_iters)
    return b0, beta, int(its), bool(ok)


def _logit_lambda_max(Xs, d):
    return float(np.max(np.abs(Xs.T @ (d - d.mean()))) / Xs.shape[0]) if Xs.shape[1] else 0.0


def _logistic_unscale(st: _Standardized, b0, beta):
    safe = np.where(st.x_scale > 0, st.x_scale, 1.0)
    slopes = np.where(st.x_scale > 0, beta / safe, 0.0)
    out = np.empty(slopes.shape[0] + 1)
    out[1:] = slopes
    out[0] = b0 - st.x_mean @ slopes
    return out


LOGISTIC_MIN_RATIO = 1e-2


def fit_logistic_lasso(X, d, spec: LearnerSpec = LearnerSpec("lasso", "cv"), trim=(0.01, 0.99)) -> PropensityFit:
    """L1-penalised logistic propensity model; predictions clipped to ``trim``.

    ``spec.lam`` is a penalty on the standardised scale or ``"cv"``/``"auto"``
    for ``spec.cv_folds``-fold cross-validated deviance over a log grid from
    the kill threshold down to 1e-2 of it.
    """
    X = np.asarray(X, dtype=float)
    d = np.asarray(d, dtype=float).reshape(-1)
    if not np.all((d == 0) | (d == 1)):
        raise ValueError("treatments must be binary")
    if d.min() == d.max():
        raise ValueError("propensity unidentified: only one treatment class present")
    st = _Standardized(X, d, spec.standardize)
    Xs = st.X
    base = math.log(d.mean() / (1 - d.mean()))
    if isinstance(spec.lam, str):
        r = X.shape[0]
        if r < spec.cv_folds:
            raise ValueError(f"{r} rows cannot support {spec.cv_folds}-fold cross-validation")
        grid = _lambda_grid(_logit_lambda_max(Xs, d), spec.n_lambdas, max(spec.lambda_min_ratio, LOGISTIC_MIN_RATIO))
        folds = make_partition(r, spec.cv_folds, spec.cv_seed)
        dev = np.zeros(grid.shape[0])
        for k in range(spec.cv_folds):
            tr, te = folds.complement(k), folds.fold(k)
            dk = d[tr]
            sk = _Standardized(X[tr], dk, spec.standardize)
            if dk.min() == dk.max():
                p_te = np.full((grid.shape[0], te.shape[0]), dk.mean())
            else:
                b0 = math.log(dk.mean() / (1 - dk.mean()))
                beta = np.zeros(sk.X.shape[1])
                p_te = np.empty((grid.shape[0], te.shape[0]))
                for l, lam in enumerate(grid):
                    b0, beta, _, _ = _logistic_std(sk.X, dk, lam, spec, b0, beta, spec.cv_tolerance)
                    coef = _logistic_unscale(sk, b0, beta)
                    p_te[l] = _sigmoid(coef[0] + X[te] @ coef[1:])
            p_te = np.clip(p_te, *trim)
            dev -= (d[te] * np.log(p_te) + (1 - d[te]) * np.log1p(-p_te)).sum(axis=1)
        best = int(np.flatnonzero(dev <= dev.min())[-1])
        b0, beta, its = base, np.zeros(Xs.shape[1]), 0
        for lam in grid[:best]:
            b0, beta, it, _ = _logistic_std(Xs, d, lam, spec, b0, beta, spec.cv_tolerance)
            its += it
        b0, beta, it, ok = _logistic_std(Xs, d, grid[best], spec, b0, beta)
        its += it
        lam = float(grid[best])
    else:
        lam = float(spec.lam)
        b0, beta, its, ok = _logistic_std(Xs, d, lam, spec, base)
    return PropensityFit(_logistic_unscale(st, b0, beta), tuple(trim), lam, its, ok)
