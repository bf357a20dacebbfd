"""ADMM solver for sparse subspace estimation.

Maximizes tr(S B) - lambda * ||B||_1,1 over the trace-d spectral polytope
by alternating a Fantope projection, elementwise soft-thresholding, and a
dual update.  The final iterate is decomposed into a loading matrix whose
squared row norms (leverage) feed the thresholding step downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import InvalidInput
from .fantope import project_approx, project_exact
from .linalg import check_symmetric, eig_truncated


def soft_threshold(m, a):
    """Elementwise sign(m) * max(|m| - a, 0); preserves symmetry."""
    if a < 0:
        raise InvalidInput("soft-threshold amount must be nonnegative")
    return np.sign(m) * np.maximum(np.abs(m) - a, 0.0)


@dataclass
class FpsConfig:
    """Solver settings.

    Tolerances default to 1e-4 * sqrt(p * d), scaling with the Frobenius
    norm of feasible points; rho defaults to 1.0, which is well matched to
    correlation-scaled input matrices.
    """

    lam: float
    d: int
    rho: float = 1.0
    max_iter: int = 1000
    primal_tol: float | None = None
    dual_tol: float | None = None
    projection_mode: str = "exact"
    eig_tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInput("lam must be nonnegative")
        if self.rho <= 0:
            raise InvalidInput("rho must be positive")
        if self.d < 1:
            raise InvalidInput("d must be at least 1")
        if self.max_iter < 1:
            raise InvalidInput("max_iter must be at least 1")
        if self.projection_mode not in ("exact", "approximate"):
            raise InvalidInput(
                f"projection_mode must be 'exact' or 'approximate', got {self.projection_mode!r}"
            )
        for name in ("primal_tol", "dual_tol"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise InvalidInput(f"{name} must be positive")

    def resolved_tols(self, p):
        scale = 1e-4 * np.sqrt(p * self.d)
        return (
            self.primal_tol if self.primal_tol is not None else scale,
            self.dual_tol if self.dual_tol is not None else scale,
        )


@dataclass
class FpsState:
    """ADMM iterates and residual histories."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    iterations: int
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)
    converged: bool = False
    projection_basis: np.ndarray | None = None


@dataclass
class SubspaceEstimate:
    """Loadings, their projector, and per-feature leverage."""

    loadings: np.ndarray
    projector: np.ndarray
    leverage: np.ndarray


def fps_fit(s, config, init=None):
    """Run the ADMM loop on a covariance/correlation matrix.

    Returns (SubspaceEstimate, FpsState).  `init` may carry a previous
    (b, c) pair to warm-start a path of penalties.  Non-convergence within
    max_iter returns the best iterate with converged=False.
    """
    s = check_symmetric(s, name="covariance")
    p = s.shape[0]
    if config.d >= p:
        raise InvalidInput(f"d must be below the dimension {p}")
    if np.any(np.diag(s) <= 0):
        raise InvalidInput("covariance diagonal must be positive")
    primal_tol, dual_tol = config.resolved_tols(p)
    rho = config.rho
    thr = config.lam / rho
    s_over_rho = s / rho

    if init is not None:
        b = init[0].copy()
        c = init[1].copy()
    else:
        b = np.zeros((p, p))
        c = np.zeros((p, p))

    basis = None
    a = b
    primal_hist: list = []
    dual_hist: list = []
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        q = b - c + s_over_rho
        if config.projection_mode == "exact":
            proj = project_exact(q, config.d)
        else:
            proj = project_approx(q, config.d, warm_start=basis, eig_tol=config.eig_tol)
        basis = proj.basis
        a = proj.matrix
        b_prev = b
        b = soft_threshold(a + c, thr)
        c = c + a - b
        primal = float(np.linalg.norm(a - b))
        dual = float(rho * np.linalg.norm(b - b_prev))
        primal_hist.append(primal)
        dual_hist.append(dual)
        if primal <= primal_tol and dual <= dual_tol:
            converged = True
            break

    state = FpsState(
        a=a,
        b=b,
        c=c,
        iterations=it,
        primal_residuals=primal_hist,
        dual_residuals=dual_hist,
        converged=converged,
        projection_basis=basis,
    )
    estimate = _decompose(b, config, basis)
    return estimate, state


def _decompose(b, config, warm):
    """Top-d eigenpairs of the final iterate define the subspace."""
    if not np.any(b):
        # Fully annihilated iterate: an arbitrary orthonormal basis with an
        # all-zero leverage, which callers must reject before regression.
        p = b.shape[0]
        loadings = np.zeros((p, config.d))
        loadings[np.arange(config.d), np.arange(config.d)] = 1.0
        return SubspaceEstimate(
            loadings=loadings, projector=b.copy(), leverage=np.zeros(p)
        )
    pairs = eig_truncated(b, config.d, warm_start=warm, tol=config.eig_tol)
    loadings = pairs.vectors
    leverage = np.einsum("ij,ij->i", loadings, loadings)
    return SubspaceEstimate(loadings=loadings, projector=b.copy(), leverage=leverage)


def fps_path(s, lambdas, config, callback=None):
    """Fit a descending penalty path, warm-starting each fit from the last.

    Returns a list of (SubspaceEstimate, FpsState) in the order given.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) > 0):
        order = np.argsort(lambdas)[::-1]
    else:
        order = np.arange(lambdas.size)
    results: dict[int, tuple] = {}
    init = None
    for idx in order:
        cfg = replace(config, lam=float(lambdas[idx]))
        est, state = fps_fit(s, cfg, init=init)
        init = (state.b, state.c)
        results[int(idx)] = (est, state)
        if callback is not None:
            callback(int(idx), est, state)
    return [results[i] for i in range(lambdas.size)]


def lambda_grid(s, count):
    """Log-linear descending penalty grid from max |off-diagonal| down 100x."""
    s = check_symmetric(s, name="covariance")
    if s.shape[0] == 1:
        raise InvalidInput("penalty grid needs at least two features")
    if count < 1:
        raise InvalidInput("count must be at least 1")
    off = np.abs(s - np.diag(np.diag(s)))
    lam_max = float(off.max())
    if lam_max == 0.0:
        return np.zeros(count) if count > 1 else np.array([0.0])
    if count == 1:
        return np.array([lam_max])
    return np.geomspace(lam_max, lam_max / 100.0, count)
