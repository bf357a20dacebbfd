"""Euclidean projection onto the trace-d spectral polytope.

The feasible set is the convex hull of rank-d orthogonal projectors:
symmetric matrices with eigenvalues in [0, 1] and trace exactly d.
Projection clamps the eigenvalues at a water level tau solving a
piecewise-linear equation; the approximate variant computes only as many
eigenpairs as needed to certify that all remaining ones clamp to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput
from .linalg import check_symmetric, eig_full, eig_truncated

# Extra eigenpairs requested beyond d on the first attempt of the
# approximate path; doubled until certification succeeds.
APPROX_BUFFER = 10

# Smallest computed eigenvalue must sit this far below the water level to
# certify that every uncomputed eigenvalue clamps to zero.
CERT_MARGIN = 1e-10


@dataclass
class FantopeProjection:
    """Projected matrix plus diagnostics of the spectral computation.

    `basis` holds the computed eigenvector block, useful for warm-starting
    the next projection in an iterative solver.
    """

    matrix: np.ndarray
    water_level: float
    rank_used: int
    eigen_pairs_computed: int
    exact_fallback: bool = False
    basis: np.ndarray | None = None


def solve_water_level(values, d):
    """Water level tau with sum_i clip(values_i - tau, 0, 1) == d.

    `values` must be sorted descending.  The clamped spectrum is unique
    even when tau is an interval; any solution is returned.  Exact
    breakpoint-sort algorithm, no tolerance coupling.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInput("values must be a nonempty vector")
    if not 1 <= d <= v.size:
        raise InvalidInput(f"d must be in [1, {v.size}], got {d}")
    # The clamp sum is continuous, piecewise linear and nonincreasing in
    # tau, with kinks only at values_i (term activates) and values_i - 1
    # (term saturates).  Evaluate at all breakpoints and interpolate.
    bps = np.unique(np.concatenate([v, v - 1.0]))[::-1]
    sums = np.clip(v[None, :] - bps[:, None], 0.0, 1.0).sum(axis=1)
    # sums is nondecreasing as bps descend; find the crossing segment.
    idx = int(np.searchsorted(sums, d, side="left"))
    if idx >= sums.size:
        return float(bps[-1])
    if sums[idx] == d:
        return float(bps[idx])
    hi_tau, lo_tau = bps[idx - 1], bps[idx]
    hi_sum, lo_sum = sums[idx - 1], sums[idx]
    frac = (d - hi_sum) / (lo_sum - hi_sum)
    return float(hi_tau + frac * (lo_tau - hi_tau))


def clamp_spectrum(values, tau):
    """Eigenvalue modification applied at the water level."""
    return np.clip(np.asarray(values, dtype=float) - tau, 0.0, 1.0)


def _assemble(vectors, clamped, p):
    nz = clamped > 0.0
    if not np.any(nz):
        return np.zeros((p, p))
    v = vectors[:, nz]
    a = (v * clamped[nz]) @ v.T
    return 0.5 * (a + a.T)


def project_exact(q, d):
    """Frobenius-nearest feasible point via a full eigendecomposition."""
    q = check_symmetric(q)
    p = q.shape[0]
    if not 1 <= d < p:
        raise InvalidInput(f"d must be in [1, {p - 1}], got {d}")
    pairs = eig_full(q)
    tau = solve_water_level(pairs.values, d)
    clamped = clamp_spectrum(pairs.values, tau)
    rank_used = int(np.count_nonzero(clamped))
    return FantopeProjection(
        matrix=_assemble(pairs.vectors, clamped, p),
        water_level=tau,
        rank_used=rank_used,
        eigen_pairs_computed=p,
        basis=pairs.vectors[:, : max(rank_used, d)].copy(),
    )


def project_approx(q, d, warm_start=None, eig_tol=1e-10):
    """Projection from a truncated eigendecomposition.

    Grows the number of computed pairs geometrically until the smallest
    computed eigenvalue sits below the water level, which forces every
    uncomputed clamped value to zero.  Falls back to the exact path
    (flagged) if no truncated computation can certify.
    """
    q = check_symmetric(q)
    p = q.shape[0]
    if not 1 <= d < p:
        raise InvalidInput(f"d must be in [1, {p - 1}], got {d}")
    k = min(d + APPROX_BUFFER, p)
    while True:
        if k > p - 2:
            exact = project_exact(q, d)
            exact.exact_fallback = True
            return exact
        pairs = eig_truncated(q, k, warm_start=warm_start, tol=eig_tol)
        tau = solve_water_level(pairs.values, d)
        if pairs.values[-1] <= tau - CERT_MARGIN:
            clamped = clamp_spectrum(pairs.values, tau)
            return FantopeProjection(
                matrix=_assemble(pairs.vectors, clamped, p),
                water_level=tau,
                rank_used=int(np.count_nonzero(clamped)),
                eigen_pairs_computed=k,
                basis=pairs.vectors,
            )
        warm_start = pairs.vectors
        k = min(2 * k, p)
