"""Compiled coordinate-descent kernels.

All kernels expect column-centred design matrices in Fortran order and work in
place on the coefficient vector they are given (warm starts).
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True, fastmath=True)
def lasso_objective(resid, beta, lam):
    r = resid.shape[0]
    s = 0.0
    for i in range(r):
        s += resid[i] * resid[i]
    return 0.5 * s / r + lam * np.sum(np.abs(beta))


@njit(cache=True, fastmath=True)
def lasso_cd(X, y, lam, beta, col_sq, tol, max_sweeps, trace):
    """Minimise (2r)^-1 ||y - X beta||^2 + lam ||beta||_1 by cyclic CD.

    Alternates full sweeps with sweeps over the active set; converged when a
    full sweep moves no coordinate by more than ``tol`` (scaled by the column
    norm). ``trace`` receives the objective after every sweep.
    Returns (sweeps, converged).
    """
    r, q = X.shape
    resid = y.copy()
    for j in range(q):
        if beta[j] != 0.0:
            for i in range(r):
                resid[i] -= X[i, j] * beta[j]
    sweeps = 0
    active_only = False
    while sweeps < max_sweeps:
        max_delta = 0.0
        for j in range(q):
            if col_sq[j] == 0.0:
                continue
            bj = beta[j]
            if active_only and bj == 0.0:
                continue
            g = 0.0
            for i in range(r):
                g += X[i, j] * resid[i]
            new = _soft(col_sq[j] * bj + g / r, lam) / col_sq[j]
            if new != bj:
                d = new - bj
                for i in range(r):
                    resid[i] -= d * X[i, j]
                beta[j] = new
                ad = abs(d) * np.sqrt(col_sq[j])
                if ad > max_delta:
                    max_delta = ad
        if sweeps < trace.shape[0]:
            trace[sweeps] = lasso_objective(resid, beta, lam)
        sweeps += 1
        if max_delta < tol:
            if active_only:
                active_only = False
            else:
                return sweeps, True
        else:
            active_only = True
    return sweeps, False


@njit(cache=True, fastmath=True)
def lasso_path(X, y, lams, col_sq, tol, max_sweeps, min_rss_frac):
    """Warm-started Lasso solutions along a decreasing penalty grid.

    The path stops once the residual sum of squares falls below
    ``min_rss_frac`` times that of the null fit; the remaining rows repeat the
    last solution. Returns (solutions, number of penalties actually fitted).
    """
    r, q = X.shape
    out = np.zeros((lams.shape[0], q))
    beta = np.zeros(q)
    trace = np.empty(0)
    tss = 0.0
    for i in range(r):
        tss += y[i] * y[i]
    fitted = lams.shape[0]
    for l in range(lams.shape[0]):
        lasso_cd(X, y, lams[l], beta, col_sq, tol, max_sweeps, trace)
        out[l] = beta
        rss = 0.0
        for i in range(r):
            e = y[i]
            for j in range(q):
                e -= X[i, j] * beta[j]
            rss += e * e
        if rss < min_rss_frac * tss:
            fitted = l + 1
            for k in range(l + 1, lams.shape[0]):
                out[k] = beta
            break
    return out, fitted


@njit(cache=True, fastmath=True)
def lasso_path_gram(G, c, yy, lams, col_sq, tol, max_sweeps, min_rss_frac):
    """Same as ``lasso_path`` but driven by the Gram matrix ``G = X'X/r``,
    ``c = X'y/r`` and ``yy = y'y/r``; the gradient is kept up to date with
    one axpy per change."""
    q = G.shape[0]
    out = np.zeros((lams.shape[0], q))
    beta = np.zeros(q)
    grad = c.copy()
    fitted = lams.shape[0]
    for l in range(lams.shape[0]):
        lam = lams[l]
        sweeps = 0
        active_only = False
        while sweeps < max_sweeps:
            max_delta = 0.0
            for j in range(q):
                if col_sq[j] == 0.0:
                    continue
                bj = beta[j]
                if active_only and bj == 0.0:
                    continue
                new = _soft(col_sq[j] * bj + grad[j], lam) / col_sq[j]
                if new != bj:
                    d = new - bj
                    for k in range(q):
                        grad[k] -= d * G[j, k]
                    beta[j] = new
                    ad = abs(d) * np.sqrt(col_sq[j])
                    if ad > max_delta:
                        max_delta = ad
            sweeps += 1
            if max_delta < tol:
                if active_only:
                    active_only = False
                else:
                    break
            else:
                active_only = True
        out[l] = beta
        # rss / r = yy - 2 beta'c + beta'G beta and G beta = c - grad
        rss = yy
        for j in range(q):
            rss -= beta[j] * (c[j] + grad[j])
        if rss < min_rss_frac * yy:
            fitted = l + 1
            for k in range(l + 1, lams.shape[0]):
                out[k] = beta
            break
    return out, fitted


@njit(cache=True, fastmath=True)
def _logistic_penalized_nll(d, eta, beta, lam):
    r = d.shape[0]
    s = 0.0
    for i in range(r):
        e = eta[i]
        # log(1 + exp(e)) - d e, computed stably
        if e > 0:
            s += e + np.log1p(np.exp(-e)) - d[i] * e
        else:
            s += np.log1p(np.exp(e)) - d[i] * e
    return s / r + lam * np.sum(np.abs(beta))


@njit(cache=True, fastmath=True)
def logistic_cd(X, d, lam, b0, beta, tol, max_outer, max_inner):
    """L1-penalised logistic regression by proximal Newton steps.

    Each outer step builds the weighted quadratic approximation of the mean
    negative log-likelihood and solves its Lasso problem by CD (unpenalised
    intercept), then backtracks until the penalised objective does not rise.
    Returns (b0, outer_iterations, converged).
    """
    r, q = X.shape
    eta = np.empty(r)
    for i in range(r):
        s = b0
        for j in range(q):
            s += X[i, j] * beta[j]
        eta[i] = s
    obj = _logistic_penalized_nll(d, eta, beta, lam)
    w = np.empty(r)
    resid = np.empty(r)
    xwx = np.empty(q)
    for it in range(max_outer):
        for i in range(r):
            pi = 1.0 / (1.0 + np.exp(-eta[i]))
            wi = pi * (1.0 - pi)
            if wi < 1e-5:
                wi = 1e-5
            w[i] = wi
            resid[i] = (d[i] - pi) / wi
        sw = 0.0
        for i in range(r):
            sw += w[i]
        for j in range(q):
            s = 0.0
            for i in range(r):
                s += w[i] * X[i, j] * X[i, j]
            xwx[j] = s / r
        nb0 = b0
        nbeta = beta.copy()
        for _ in range(max_inner):
            max_delta = 0.0
            s = 0.0
            for i in range(r):
                s += w[i] * resid[i]
            dd = s / sw
            if dd != 0.0:
                nb0 += dd
                for i in range(r):
                    resid[i] -= dd
                if abs(dd) > max_delta:
                    max_delta = abs(dd)
            for j in range(q):
                if xwx[j] == 0.0:
                    continue
                bj = nbeta[j]
                g = 0.0
                for i in range(r):
                    g += w[i] * X[i, j] * resid[i]
                new = _soft(xwx[j] * bj + g / r, lam) / xwx[j]
                if new != bj:
                    dj = new - bj
                    for i in range(r):
                        resid[i] -= dj * X[i, j]
                    nbeta[j] = new
                    if abs(dj) > max_delta:
                        max_delta = abs(dj)
            if max_delta < tol:
                break
        # backtracking on the step from (b0, beta) to (nb0, nbeta)
        step = 1.0
        new_eta = np.empty(r)
        cand_b0 = nb0
        cand = nbeta.copy()
        new_obj = obj
        for _ in range(30):
            cand_b0 = b0 + step * (nb0 - b0)
            for j in range(q):
                cand[j] = beta[j] + step * (nbeta[j] - beta[j])
            for i in range(r):
                s = cand_b0
                for j in range(q):
                    s += X[i, j] * cand[j]
                new_eta[i] = s
            new_obj = _logistic_penalized_nll(d, new_eta, cand, lam)
            if new_obj <= obj + 1e-12:
                break
            step *= 0.5
        change = abs(cand_b0 - b0)
        for j in range(q):
            c = abs(cand[j] - beta[j])
            if c > change:
                change = c
        b0 = cand_b0
        for j in range(q):
            beta[j] = cand[j]
        for i in range(r):
            eta[i] = new_eta[i]
        obj = new_obj
        if change < tol:
            return b0, it + 1, True
    return b0, max_outer, False
