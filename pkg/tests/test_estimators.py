import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ssinfer.data import FoldError, FoldPartition, LabeledSet, UnlabeledSet, make_partition, make_rng
from ssinfer.estimators import (
    estimate_mean,
    estimate_mean_multi,
    estimate_variance,
    moment_cache,
    sample_kurtosis,
    sample_mean_ci,
    sample_variance_ci,
    z_quantile,
)
from ssinfer.nuisance import LearnerSpec

ZERO = LearnerSpec("zero")


def tiny(seed, n=6, m=4, q=3):
    rng = make_rng(seed)
    X = rng.normal(size=(n, q))
    U = rng.normal(size=(m, q))
    y = rng.normal(size=n) + X[:, 0]
    return LabeledSet(y, X), UnlabeledSet(U)


def test_z_quantile():
    assert z_quantile(0.05) == pytest.approx(1.959964, abs=1e-6)
    assert z_quantile(0.10) == pytest.approx(1.644854, abs=1e-6)
    with pytest.raises(ValueError):
        z_quantile(0.0)


def test_moment_cache_examples():
    c = moment_cache(UnlabeledSet([[0.0], [2.0]]))
    np.testing.assert_array_equal(c.mu_hat, [1.0, 1.0])
    assert c.C_hat[1, 1] == 1.0
    same = moment_cache(UnlabeledSet([[3.0, -1.0]] * 4))
    np.testing.assert_array_equal(same.mu_hat, [1.0, 3.0, -1.0])
    assert np.all(same.C_hat == 0)


@settings(max_examples=30)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 2**32))
def test_moment_cache_invariants(m, q, seed):
    U = make_rng(seed).normal(size=(m, q)) * 10
    c = moment_cache(UnlabeledSet(U))
    assert c.mu_hat[0] == 1.0
    assert np.all(c.C_hat[0] == 0) and np.all(c.C_hat[:, 0] == 0)
    np.testing.assert_array_equal(c.C_hat, c.C_hat.T)
    assert np.linalg.eigvalsh(c.C_hat).min() >= -1e-10 * max(1.0, np.abs(c.C_hat).max())


def test_zero_learner_worked_example():
    lab = LabeledSet([1.0, 2.0, 3.0, 4.0], np.zeros((4, 1)))
    cache = moment_cache(UnlabeledSet(np.arange(6.0).reshape(3, 2)[:, :1]))
    part = FoldPartition(2, [0, 0, 1, 1])
    mean = estimate_mean(lab, cache, part, ZERO)
    np.testing.assert_array_equal(mean.per_fold, [1.5, 3.5])
    assert mean.theta_hat == 2.5
    assert mean.b_sq == 0.0
    assert mean.sigma_eps_sq == 1.25
    var = estimate_variance(lab, cache, part, mean)
    assert var.sigma_y_sq_hat == 1.25
    assert var.sigma_xi_sq == 0.0


def test_constant_response_has_zero_width():
    lab = LabeledSet(np.full(6, 4.0), make_rng(1).normal(size=(6, 2)))
    cache = moment_cache(UnlabeledSet(make_rng(2).normal(size=(5, 2))))
    mean = estimate_mean(lab, cache, make_partition(6, 2, 0), ZERO)
    assert mean.theta_hat == 4.0 and mean.sigma_eps_sq == 0.0
    assert mean.ci == (4.0, 4.0)


@settings(max_examples=40)
@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32))
def test_zero_learner_reduces_to_sample_moments(K, per_fold, seed):
    n = K * per_fold
    rng = make_rng(seed)
    y = rng.normal(size=n) * 3 + 1
    lab = LabeledSet(y, rng.normal(size=(n, 2)))
    cache = moment_cache(UnlabeledSet(rng.normal(size=(4, 2))))
    part = make_partition(n, K, seed)
    mean = estimate_mean(lab, cache, part, ZERO)
    assert abs(mean.theta_hat - y.mean()) <= 1e-12 * max(1.0, abs(y.mean()))
    var = estimate_variance(lab, cache, part, mean)
    assert var.sigma_y_sq_hat == pytest.approx(np.mean((y - mean.theta_hat) ** 2), rel=1e-12, abs=1e-14)


def _random_slopes(rng, K, p):
    return [rng.normal(size=p) for _ in range(K)]


@pytest.mark.parametrize("seed", range(6))
def test_oracle_equivalence_injected_slopes(seed):
    lab, unl = tiny(seed)
    part = make_partition(lab.n, 2, seed)
    slopes = _random_slopes(make_rng(seed, 99), 2, lab.p)
    cache = moment_cache(unl)
    mean = estimate_mean(lab, cache, part, slopes=slopes)
    var = estimate_variance(lab, cache, part, mean)
    ref = oracles.mean_and_variance(
        lab.responses.tolist(), lab.covariates.tolist(), unl.covariates.tolist(),
        part.assignment.tolist(), 2, [s.tolist() for s in slopes],
    )
    for got, want in [
        (mean.theta_hat, ref["theta"]), (mean.sigma_eps_sq, ref["sigma_eps_sq"]), (mean.b_sq, ref["b_sq"]),
        (mean.var_hat, ref["var_mean"]), (var.sigma_y_sq_hat, ref["sigma_y_sq"]),
        (var.sigma_nu_sq, ref["sigma_nu_sq"]), (var.sigma_xi_sq, ref["sigma_xi_sq"]), (var.var_hat, ref["var_var"]),
    ]:
        assert got == pytest.approx(want, abs=1e-10)
    np.testing.assert_allclose(mean.per_fold, ref["per_fold"], atol=1e-10)


def test_oracle_equivalence_fitted_slopes():
    # n=8 with an OLS learner on two covariates: exercises the fitting path as well
    lab, unl = tiny(7, n=8, m=5, q=2)
    part = make_partition(8, 2, 3)
    cache = moment_cache(unl)
    mean = estimate_mean(lab, cache, part, LearnerSpec("ols", 0.0))
    slopes = []
    for k in range(2):
        idx = part.complement(k)
        A = np.column_stack([np.ones(idx.size), lab.covariates[idx]])
        slopes.append(np.linalg.solve(A.T @ A, A.T @ lab.responses[idx]).tolist())
    ref = oracles.mean_and_variance(lab.responses.tolist(), lab.covariates.tolist(), unl.covariates.tolist(),
                                    part.assignment.tolist(), 2, slopes)
    assert mean.theta_hat == pytest.approx(ref["theta"], abs=1e-10)
    assert estimate_variance(lab, cache, part, mean).sigma_y_sq_hat == pytest.approx(ref["sigma_y_sq"], abs=1e-10)


@settings(max_examples=40)
@given(st.integers(0, 2**32), st.floats(-100, 100))
def test_shift_equivariance_fixed_slopes(seed, c):
    lab, unl = tiny(seed, n=10)
    part = make_partition(10, 2, seed)
    slopes = _random_slopes(make_rng(seed, 1), 2, lab.p)
    cache = moment_cache(unl)
    a = estimate_mean(lab, cache, part, slopes=slopes)
    shifted = LabeledSet(lab.responses + c, lab.covariates)
    b = estimate_mean(shifted, cache, part, slopes=slopes)
    tol = 1e-9 * (1 + abs(c))
    assert b.theta_hat == pytest.approx(a.theta_hat + c, abs=tol)
    assert b.sigma_eps_sq == pytest.approx(a.sigma_eps_sq, abs=tol)
    assert b.b_sq == pytest.approx(a.b_sq, abs=tol)
    va, vb = estimate_variance(lab, cache, part, a), estimate_variance(shifted, cache, part, b)
    for name in ("sigma_y_sq_hat", "sigma_xi_sq", "sigma_nu_sq"):
        assert getattr(vb, name) == pytest.approx(getattr(va, name), abs=tol * (1 + abs(getattr(va, name))))


@settings(max_examples=40)
@given(st.integers(0, 2**32), st.floats(0.01, 100))
def test_scale_equivariance_fixed_slopes(seed, a):
    lab, unl = tiny(seed, n=10)
    part = make_partition(10, 2, seed)
    slopes = _random_slopes(make_rng(seed, 2), 2, lab.p)
    cache = moment_cache(unl)
    m1 = estimate_mean(lab, cache, part, slopes=slopes)
    scaled = LabeledSet(a * lab.responses, lab.covariates)
    m2 = estimate_mean(scaled, cache, part, slopes=[a * s for s in slopes])
    assert m2.theta_hat == pytest.approx(a * m1.theta_hat, rel=1e-9, abs=1e-12)
    assert m2.sigma_eps_sq == pytest.approx(a * a * m1.sigma_eps_sq, rel=1e-9)
    assert m2.b_sq == pytest.approx(a * a * m1.b_sq, rel=1e-9, abs=1e-12 * a * a)
    v1, v2 = estimate_variance(lab, cache, part, m1), estimate_variance(scaled, cache, part, m2)
    assert v2.sigma_y_sq_hat == pytest.approx(a * a * v1.sigma_y_sq_hat, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_unlabeled_permutation_invariance(seed):
    rng = make_rng(seed)
    lab, _ = tiny(seed, n=20, q=4)
    U = rng.normal(size=(15, 4))
    part = make_partition(20, 2, seed)
    learner = LearnerSpec("ridge", 0.5)
    c1 = moment_cache(UnlabeledSet(U))
    c2 = moment_cache(UnlabeledSet(U[rng.permutation(15)]))
    a = estimate_mean(lab, c1, part, learner)
    b = estimate_mean(lab, c2, part, learner)
    assert b.theta_hat == pytest.approx(a.theta_hat, abs=1e-12)
    assert estimate_variance(lab, c2, part, b).sigma_y_sq_hat == pytest.approx(
        estimate_variance(lab, c1, part, a).sigma_y_sq_hat, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4))
def test_nonnegativity_and_ci_brackets(seed, K):
    lab, unl = tiny(seed, n=12, q=3)
    part = make_partition(12, K + 1, seed)
    slopes = _random_slopes(make_rng(seed, 3), K + 1, lab.p)
    cache = moment_cache(unl)
    mean = estimate_mean(lab, cache, part, slopes=slopes)
    var = estimate_variance(lab, cache, part, mean)
    assert mean.sigma_eps_sq >= 0 and var.sigma_xi_sq >= 0 and var.sigma_nu_sq >= 0
    assert mean.var_hat >= 0 and var.var_hat >= 0
    assert mean.ci[0] <= mean.theta_hat <= mean.ci[1]
    assert var.ci[0] <= var.sigma_y_sq_hat <= var.ci[1]


def test_negative_b_sq_is_reported_but_clipped_in_width():
    # a slope anti-aligned with the data drives the cross term negative
    rng = make_rng(4)
    X = rng.normal(size=(40, 1))
    y = X[:, 0] + 0.1 * rng.normal(size=40)
    lab = LabeledSet(y, X)
    cache = moment_cache(UnlabeledSet(rng.normal(size=(400, 1)) * 0.01))
    part = make_partition(40, 2, 0)
    mean = estimate_mean(lab, cache, part, slopes=[np.array([0.0, -1.0])] * 2)
    assert mean.b_sq < 0
    assert mean.var_hat == mean.sigma_eps_sq


def test_learner_failure_names_the_fold():
    lab, unl = tiny(0, n=6)

    def broken(X, y):
        raise ValueError("boom")

    with pytest.raises(FoldError, match="fold 0") as info:
        estimate_mean(lab, moment_cache(unl), make_partition(6, 2, 0), broken)
    assert info.value.fold == 0


def test_dimension_mismatch():
    lab, _ = tiny(0, q=3)
    with pytest.raises(ValueError, match="p="):
        estimate_mean(lab, moment_cache(UnlabeledSet(np.zeros((3, 2)))), make_partition(6, 2, 0), ZERO)


def test_multi_partition():
    rng = make_rng(12)
    X = rng.normal(size=(40, 5))
    lab = LabeledSet(X[:, 0] + rng.normal(size=40), X)
    cache = moment_cache(UnlabeledSet(rng.normal(size=(200, 5))))
    learner = LearnerSpec("ridge", 0.1)
    part = make_partition(40, 2, 5)
    single = estimate_mean(lab, cache, part, learner)
    one = estimate_mean_multi(lab, cache, 1, 2, learner, partitions=[part])
    assert one.theta_bar == single.theta_hat and one.var_bar == single.var_hat
    assert one.ci == single.ci
    same = estimate_mean_multi(lab, cache, 3, 2, learner, partitions=[part] * 3)
    assert same.var_bar == pytest.approx(single.var_hat, rel=1e-15)
    five = estimate_mean_multi(lab, cache, 5, 2, learner, seed=3)
    assert len(set(five.estimates.tolist())) > 1
    assert five.var_bar >= five.variances.mean()
    spread = np.mean((five.estimates - five.theta_bar) ** 2)
    assert five.var_bar == pytest.approx(five.variances.mean() + spread, rel=1e-14)
    with pytest.raises(ValueError):
        estimate_mean_multi(lab, cache, 0, 2, learner)


def test_baselines_worked_example():
    lab = LabeledSet([1.0, 2.0, 3.0, 4.0], np.zeros((4, 1)))
    m = sample_mean_ci(lab)
    assert m.estimate == 2.5 and m.var_hat == 1.25
    half = z_quantile(0.05) * math.sqrt(1.25) / 2
    assert m.ci == pytest.approx((2.5 - half, 2.5 + half))
    v = sample_variance_ci(lab)
    assert v.estimate == 1.25
    assert v.ci[0] < 1.25 < v.ci[1]


def test_kurtosis_oracle_and_errors():
    y = np.array([0.0, 1.0, 1.0, 2.0, 5.0, -1.0])
    n = 6
    d = y - y.mean()
    s = math.sqrt(np.mean(d**2))
    want = n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * np.sum(d**4) / s**4 - 3 * (n - 1) ** 2 / ((n - 2) * (n - 3)) + 3
    assert sample_kurtosis(y) == pytest.approx(want, rel=1e-14)
    with pytest.raises(ValueError):
        sample_kurtosis([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        sample_kurtosis(np.ones(10))


def test_variance_interval_shape():
    y = make_rng(3).normal(size=300)
    v = sample_variance_ci(y)
    g = sample_kurtosis(y)
    h = z_quantile(0.05) * math.sqrt(g - 1) / math.sqrt(300)
    assert v.ci == pytest.approx((v.estimate / (1 + h), v.estimate / (1 - h)))


def test_baseline_coverage_gaussian():
    # Monte Carlo oracle: both baselines are calibrated for Gaussian data
    reps, n = 500, 500
    cover_m = cover_v = 0
    for r in range(reps):
        y = make_rng(77, r).normal(size=n) * 2 + 1
        lo, hi = sample_mean_ci(y).ci
        cover_m += lo <= 1 <= hi
        lo, hi = sample_variance_ci(y).ci
        cover_v += lo <= 4 <= hi
    assert abs(cover_m / reps - 0.95) <= 0.03
    assert abs(cover_v / reps - 0.95) <= 0.03
