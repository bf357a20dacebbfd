"""Reference estimators for the benchmark harness.

Oracle least squares on a known support, ridge (primal or dual form as
dimensions dictate), lasso / elastic net by cyclic coordinate descent
with warm starts, marginal-correlation screening, and dense principal
component regression.  All expect centered (and, for the lasso,
standardized) inputs, as produced by the pipeline standardizer.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConvergenceFailure, InvalidInput
from .glm import FitResult, _sigmoid, _support
from .admm import soft_threshold

LASSO_MAX_PASSES = 100_000
LASSO_TOL = 1e-9


def fit_oracle(x, y, support):
    """Least squares restricted to the given feature set."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    support = np.asarray(sorted(set(int(j) for j in support)), dtype=int)
    if support.size == 0:
        raise InvalidInput("oracle support must be nonempty")
    if support.size >= x.shape[0]:
        raise InvalidInput(
            f"oracle support of size {support.size} needs fewer than n={x.shape[0]} features"
        )
    coef, *_ = np.linalg.lstsq(x[:, support], y, rcond=None)
    beta = np.zeros(x.shape[1])
    beta[support] = coef
    return FitResult(
        beta=beta, intercept=0.0, family="gaussian", selected=support
    )


def _ridge_primal(x, y, penalty):
    p = x.shape[1]
    a = x.T @ x
    a[np.arange(p), np.arange(p)] += penalty
    return np.linalg.solve(a, x.T @ y)


def _ridge_dual(x, y, penalty):
    n = x.shape[0]
    k = x @ x.T
    k[np.arange(n), np.arange(n)] += penalty
    return x.T @ np.linalg.solve(k, y)


def fit_ridge(x, y, penalties):
    """Exact ridge solutions, one FitResult per penalty.

    Uses the p x p normal equations when p <= n and the n x n dual form
    otherwise; the two agree to rounding whenever both are computable.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    penalties = np.atleast_1d(np.asarray(penalties, dtype=float))
    if np.any(penalties <= 0):
        raise InvalidInput("ridge penalties must be positive")
    n, p = x.shape
    solver = _ridge_primal if p <= n else _ridge_dual
    results = []
    for eta in penalties:
        beta = solver(x, y, float(eta))
        results.append(
            FitResult(
                beta=beta,
                intercept=0.0,
                family="gaussian",
                selected=np.arange(p),
                extras={"penalty": float(eta)},
            )
        )
    return results


def fit_lasso(x, y, lambdas, mixing=1.0):
    """Lasso / elastic-net path by cyclic coordinate descent.

    Minimizes (1/2n)||y - X b||^2 + lam*mixing*||b||_1
    + lam*(1-mixing)/2*||b||^2 along a descending grid, warm-starting each
    solution from the previous one.  At every grid point the returned
    coefficients satisfy the stationarity conditions to within rounding
    (checked in tests via the subgradient certificate).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if not 0 < mixing <= 1:
        raise InvalidInput("mixing must lie in (0, 1]")
    if np.any(np.diff(lambdas) > 0):
        raise InvalidInput("lambda grid must be descending")
    n, p = x.shape
    gram = x.T @ x / n
    xty = x.T @ y / n
    colsq = np.diag(gram).copy()
    if np.any(colsq <= 0):
        raise InvalidInput("lasso requires no zero-variance columns")

    beta = np.zeros(p)
    results = []
    for lam in lambdas:
        thr = lam * mixing
        denom = colsq + lam * (1.0 - mixing)
        grad = xty - gram @ beta  # X^T (y - X beta) / n, refreshed per point
        for sweep in range(LASSO_MAX_PASSES):
            max_delta = 0.0
            for j in range(p):
                old = beta[j]
                zj = grad[j] + colsq[j] * old
                new = soft_threshold(zj, thr) / denom[j]
                if new != old:
                    grad -= (new - old) * gram[:, j]
                    beta[j] = new
                    max_delta = max(max_delta, abs(new - old))
            if max_delta <= LASSO_TOL * max(1.0, np.abs(beta).max()):
                break
        else:
            raise ConvergenceFailure(
                f"coordinate descent did not converge at lam={lam}",
                residual=max_delta,
            )
        results.append(
            FitResult(
                beta=beta.copy(),
                intercept=0.0,
                family="gaussian",
                selected=_support(beta),
                extras={"penalty": float(lam), "mixing": float(mixing)},
            )
        )
    return results


def screen_features(x, y, k):
    """Indices of the k features most correlated (in magnitude) with y.

    Ties break toward the lower index.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = x.shape[1]
    if not 1 <= k <= p:
        raise InvalidInput(f"k must be in [1, {p}], got {k}")
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    denom = np.linalg.norm(xc, axis=0) * np.linalg.norm(yc)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, (xc.T @ yc) / denom, 0.0)
    order = np.lexsort((np.arange(p), -np.abs(corr)))
    return np.sort(order[:k])


def fit_dense_pcr(x, y, d):
    """PCA to the top-d right singular directions, then least squares."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 1 <= d <= min(x.shape):
        raise InvalidInput(f"d must be in [1, {min(x.shape)}], got {d}")
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    loadings = vt[:d].T
    from .glm import ols_on_subspace

    fit = ols_on_subspace(x, y, loadings)
    fit.selected = _support(fit.beta)
    return fit


def fit_logistic_ridge(x, y, penalties):
    """L2-penalized logistic regression, one fit per penalty.

    Penalizes coefficients but not the intercept; IRLS with step halving.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    penalties = np.atleast_1d(np.asarray(penalties, dtype=float))
    if np.any(penalties <= 0):
        raise InvalidInput("ridge penalties must be positive")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))) or classes.size < 2:
        raise InvalidInput("binomial response must contain both classes, coded 0/1")
    n, p = x.shape
    design = np.column_stack([np.ones(n), x])
    results = []
    for eta_pen in penalties:
        coef = np.zeros(p + 1)
        lin = design @ coef
        reg = np.zeros(p + 1)
        reg[1:] = float(eta_pen)

        def objective(c, linpred):
            return float(
                np.sum(y * linpred - np.logaddexp(0.0, linpred))
                - 0.5 * float(eta_pen) * np.sum(c[1:] ** 2)
            )

        obj = objective(coef, lin)
        for _ in range(200):
            mu = _sigmoid(lin)
            w = np.maximum(mu * (1.0 - mu), 1e-12)
            grad = design.T @ (y - mu) - reg * coef
            hess = (design * w[:, None]).T @ design
            hess[np.arange(p + 1), np.arange(p + 1)] += reg + 1e-10
            step = np.linalg.solve(hess, grad)
            coef_new = coef + step
            lin_new = design @ coef_new
            obj_new = objective(coef_new, lin_new)
            backtrack = 0
            while obj_new < obj - 1e-12 and backtrack < 30:
                coef_new = 0.5 * (coef + coef_new)
                lin_new = design @ coef_new
                obj_new = objective(coef_new, lin_new)
                backtrack += 1
            coef, lin = coef_new, lin_new
            if abs(obj_new - obj) <= 1e-10:
                obj = obj_new
                break
            obj = obj_new
        results.append(
            FitResult(
                beta=coef[1:].copy(),
                intercept=float(coef[0]),
                family="binomial",
                selected=np.arange(p),
                extras={"penalty": float(eta_pen)},
            )
        )
    return results
