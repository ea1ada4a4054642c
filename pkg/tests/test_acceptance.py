"""Acceptance criteria A1-A8.

Each test prints one ``A# PASS/FAIL`` line (also collected in the terminal
summary) and then asserts the criterion with its fixed tolerances.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from ssinfer.nuisance import LearnerSpec
from ssinfer.sim import EstimatorBundle, SimModel, k_sweep, run_mc

pytestmark = pytest.mark.slow

SQRT_LASSO = EstimatorBundle(K=2, learner=LearnerSpec("sqrt_lasso", "auto"))
LASSO_CV = LearnerSpec("lasso", "cv")


@pytest.fixture(scope="session")
def m51_run():
    model = SimModel("m51", n=100, m=1000, p=500, s0=1, seed=2024)
    return run_mc(model, SQRT_LASSO, 200)


@pytest.fixture(scope="session")
def causal_run():
    model = SimModel("causal_synth", n=300, m=3000, p=100, s0=3, s_d=3, seed=4)
    return run_mc(model, EstimatorBundle(K=2, learner=LASSO_CV, propensity=LASSO_CV), 300)


def mc_se(report, name):
    return math.sqrt(report.metrics[name].var_estimate / (report.reps - report.failures))


def test_a1_mean_table(m51_run, verdicts):
    ss, base = m51_run.metrics["theta_hat"], m51_run.metrics["ybar"]
    checks = [
        ss.mse < base.mse,
        0.007 <= ss.mse <= 0.020,
        0.90 <= ss.avg_coverage <= 0.98,
        ss.avg_length < base.avg_length,
    ]
    ok = verdicts.record("A1", all(checks),
                         f"MSE {ss.mse:.5f} vs {base.mse:.5f}, AC {ss.avg_coverage:.3f}, "
                         f"AL {ss.avg_length:.3f} vs {base.avg_length:.3f}")
    assert ok


def test_a2_variance_table(m51_run, verdicts):
    ss, base = m51_run.metrics["sigma_y_sq_hat"], m51_run.metrics["s_y_sq"]
    ok = verdicts.record("A2", ss.mse < base.mse and 0.87 <= ss.avg_coverage <= 0.97,
                         f"MSE {ss.mse:.5f} vs {base.mse:.5f}, AC {ss.avg_coverage:.3f}")
    assert ok


def test_a3_variance_calibration(verdicts):
    model = SimModel("m51", n=200, m=2000, p=500, s0=1, seed=3)
    rep = run_mc(model, SQRT_LASSO, 500)
    scaled = model.n * rep.metrics["theta_hat"].var_estimate
    ok = verdicts.record("A3", abs(scaled - 1.1) <= 0.2 * 1.1, f"n Var(theta_hat) = {scaled:.4f} (target 1.1 +- 20%)")
    assert ok


def test_a4_ate_coverage(causal_run, verdicts):
    m = causal_run.metrics["delta_hat"]
    se = mc_se(causal_run, "delta_hat")
    bias = m.mean_estimate - causal_run.truth.theta
    ok = verdicts.record("A4", 0.91 <= m.avg_coverage <= 0.98 and abs(bias) < 2 * se,
                         f"coverage {m.avg_coverage:.3f}, bias {bias:+.4f} (2 MC SE = {2 * se:.4f})")
    assert ok


def test_a5_effect_size(causal_run, verdicts):
    m = causal_run.metrics["d_hat"]
    se = mc_se(causal_run, "d_hat")
    gap = m.mean_estimate - causal_run.truth.effect_size
    ok = verdicts.record("A5", abs(gap) < 3 * se and 0.90 <= m.avg_coverage <= 0.98,
                         f"mean d {m.mean_estimate:.4f} vs {causal_run.truth.effect_size:.4f} "
                         f"(3 MC SE = {3 * se:.4f}), coverage {m.avg_coverage:.3f}")
    assert ok


def test_a6_k_stability(verdicts):
    model = SimModel("m53", n=48, m=96, p=50, s0=3, seed=6)
    rows = k_sweep(model, [2, 4, 8, 16, 48], EstimatorBundle(learner=LASSO_CV), 300)
    mse = {r["K"]: r["MSE_theta"] for r in rows}
    trail = ", ".join(f"K={k}: {v:.4f}" for k, v in mse.items())
    ok = verdicts.record("A6", mse[48] <= 1.25 * mse[2], trail)
    assert ok


def test_a7_property_suites(verdicts):
    here = os.path.dirname(__file__)
    files = [os.path.join(here, f) for f in
             ("test_data.py", "test_nuisance.py", "test_estimators.py", "test_causal.py", "test_sim.py")]
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
                          capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    ok = verdicts.record("A7", proc.returncode == 0 and elapsed < 60, f"{tail} ({elapsed:.1f} s)")
    assert ok, proc.stdout[-3000:]


def test_a8_misspecified_mean(verdicts):
    model = SimModel("m52", n=100, m=1000, p=500, s0=1, seed=2024)
    rep = run_mc(model, SQRT_LASSO, 200)
    ss, base = rep.metrics["theta_hat"], rep.metrics["ybar"]
    ok = verdicts.record("A8", ss.mse < base.mse and 0.89 <= ss.avg_coverage <= 0.98,
                         f"MSE {ss.mse:.5f} vs {base.mse:.5f}, AC {ss.avg_coverage:.3f}")
    assert ok
