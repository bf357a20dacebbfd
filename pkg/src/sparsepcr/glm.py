"""Regression on a recovered subspace and prediction from the result.

Coefficients are fit on the reduced design X @ V and mapped back to
feature space as beta = V @ gamma, so the support of beta is confined to
the nonzero rows of V.  The gaussian path is minimum-norm least squares;
the binomial path is iteratively reweighted least squares with a small
ridge jitter so separable data stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyModel, InvalidInput

IRLS_MAX_ITER = 100
IRLS_TOL = 1e-10
IRLS_JITTER = 1e-8


@dataclass
class FitResult:
    """A fitted linear model, optionally factored through a subspace.

    For subspace fits `beta == loadings @ gamma` by construction.  Dense
    baselines leave loadings/gamma as None.  The standardization fields
    record the training-set transform so prediction on raw data reproduces
    in-sample behavior.
    """

    beta: np.ndarray
    intercept: float
    family: str
    selected: np.ndarray
    loadings: np.ndarray | None = None
    gamma: np.ndarray | None = None
    x_center: np.ndarray | None = None
    x_scale: np.ndarray | None = None
    y_center: float = 0.0
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "beta": self.beta.tolist(),
            "intercept": float(self.intercept),
            "family": self.family,
            "selected": [int(j) for j in self.selected],
            "loadings": None if self.loadings is None else self.loadings.tolist(),
            "gamma": None if self.gamma is None else self.gamma.tolist(),
            "x_center": None if self.x_center is None else self.x_center.tolist(),
            "x_scale": None if self.x_scale is None else self.x_scale.tolist(),
            "y_center": float(self.y_center),
        }
        return d

    @classmethod
    def from_dict(cls, d):
        arr = lambda v: None if v is None else np.asarray(v, dtype=float)  # noqa: E731
        return cls(
            beta=np.asarray(d["beta"], dtype=float),
            intercept=float(d["intercept"]),
            family=d["family"],
            selected=np.asarray(d["selected"], dtype=int),
            loadings=arr(d.get("loadings")),
            gamma=arr(d.get("gamma")),
            x_center=arr(d.get("x_center")),
            x_scale=arr(d.get("x_scale")),
            y_center=float(d.get("y_center", 0.0)),
        )


def _support(beta, tol=0.0):
    return np.flatnonzero(np.abs(beta) > tol)


def _check_loadings(x, loadings):
    loadings = np.asarray(loadings, dtype=float)
    if loadings.ndim == 1:
        loadings = loadings[:, None]
    if loadings.shape[0] != x.shape[1]:
        raise InvalidInput(
            f"loadings have {loadings.shape[0]} rows for {x.shape[1]} features"
        )
    if not np.any(loadings):
        raise EmptyModel("all loadings are zero; nothing to regress on")
    return loadings


def ols_on_subspace(x, y, loadings):
    """Least squares of y on x @ loadings, minimum-norm when rank-deficient.

    Expects column-centered x and centered y (the pipeline's standardizer
    takes care of that); the in-sample intercept is then zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    loadings = _check_loadings(x, loadings)
    z = x @ loadings
    gamma, *_ = np.linalg.lstsq(z, y, rcond=None)
    beta = loadings @ gamma
    return FitResult(
        beta=beta,
        intercept=0.0,
        family="gaussian",
        selected=_support(np.einsum("ij,ij->i", loadings, loadings)),
        loadings=loadings,
        gamma=gamma,
    )


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _log_likelihood(y, eta):
    # Stable log(1 + exp(eta)) - y*eta form.
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic_on_subspace(x, y, loadings):
    """Binomial fit on the reduced design with an explicit intercept.

    IRLS with a ridge jitter of 1e-8 on the normal equations; converged
    when the log-likelihood moves by at most 1e-10, capped at 100 sweeps.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise InvalidInput("binomial response must be coded 0/1")
    if classes.size < 2:
        raise InvalidInput("both classes must be present")
    loadings = _check_loadings(x, loadings)

    z = x @ loadings
    n, d = z.shape
    design = np.column_stack([np.ones(n), z])
    coef = np.zeros(d + 1)
    eta = design @ coef
    ll = _log_likelihood(y, eta)
    for _ in range(IRLS_MAX_ITER):
        mu = _sigmoid(eta)
        w = np.maximum(mu * (1.0 - mu), 1e-12)
        grad = design.T @ (y - mu)
        hess = (design * w[:, None]).T @ design
        hess[np.arange(d + 1), np.arange(d + 1)] += IRLS_JITTER
        step = np.linalg.solve(hess, grad)
        coef_new = coef + step
        eta_new = design @ coef_new
        ll_new = _log_likelihood(y, eta_new)
        # Halve the step until the likelihood stops deteriorating.
        backtrack = 0
        while ll_new < ll - 1e-12 and backtrack < 30:
            coef_new = 0.5 * (coef + coef_new)
            eta_new = design @ coef_new
            ll_new = _log_likelihood(y, eta_new)
            backtrack += 1
        coef, eta = coef_new, eta_new
        if abs(ll_new - ll) <= IRLS_TOL:
            ll = ll_new
            break
        ll = ll_new

    gamma = coef[1:]
    beta = loadings @ gamma
    return FitResult(
        beta=beta,
        intercept=float(coef[0]),
        family="binomial",
        selected=_support(np.einsum("ij,ij->i", loadings, loadings)),
        loadings=loadings,
        gamma=gamma,
    )


def predict(fit, x_new):
    """Predictions on new data: means for gaussian, probabilities for binomial.

    Applies the stored training standardization when present.
    """
    x_new = np.asarray(x_new, dtype=float)
    if x_new.ndim == 1:
        x_new = x_new[None, :]
    if x_new.shape[1] != fit.beta.shape[0]:
        raise InvalidInput(
            f"expected {fit.beta.shape[0]} columns, got {x_new.shape[1]}"
        )
    if fit.x_center is not None:
        x_new = x_new - fit.x_center
    if fit.x_scale is not None:
        x_new = x_new / fit.x_scale
    eta = x_new @ fit.beta + fit.intercept
    if fit.family == "binomial":
        return _sigmoid(eta)
    return eta + fit.y_center
