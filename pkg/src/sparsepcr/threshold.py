"""Automatic leverage threshold via variance-elbow detection.

Given per-feature leverage (squared row norms of the loading matrix,
sorted descending), every candidate cut splits the curve into a high
group and a low group.  The weighted sum of within-group variances traces
a curve whose empirical second difference spikes at the elbow separating
signal rows from noise rows; the first index where that spike exceeds the
running mean of earlier increments is the cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInput

# The elbow condition needs two curve increments and a nonempty running
# mean, so evaluation starts at the third cut.
_FIRST_CANDIDATE = 3


@dataclass
class ThresholdReport:
    """Everything the elbow search looked at, for diagnostics output."""

    sorted_leverage: np.ndarray
    weighted_variance: np.ndarray
    first_difference: np.ndarray
    cut_index: int
    threshold: float
    selected: np.ndarray
    elbow_found: bool

    def to_dict(self):
        return {
            "sorted_leverage": self.sorted_leverage.tolist(),
            "weighted_variance": self.weighted_variance.tolist(),
            "first_difference": self.first_difference.tolist(),
            "cut_index": self.cut_index,
            "threshold": self.threshold,
            "selected": self.selected.tolist(),
            "elbow_found": self.elbow_found,
        }


def _group_variances(l_sorted):
    """Sample variances of every prefix and suffix in O(p).

    Variance of a single element (or of the empty suffix) is 0.  Centering
    by the global mean leaves every variance unchanged but avoids the
    cancellation that would otherwise turn a constant vector into noise.
    """
    p = l_sorted.size
    centered = l_sorted - l_sorted.mean()
    s1 = np.cumsum(centered)
    s2 = np.cumsum(centered**2)
    counts = np.arange(1, p + 1, dtype=float)

    head = np.zeros(p)
    mask = counts > 1
    head[mask] = (s2[mask] - s1[mask] ** 2 / counts[mask]) / (counts[mask] - 1)

    tail = np.zeros(p)
    rs1 = s1[-1] - s1
    rs2 = s2[-1] - s2
    rcounts = p - counts
    mask = rcounts > 1
    tail[mask] = (rs2[mask] - rs1[mask] ** 2 / rcounts[mask]) / (rcounts[mask] - 1)
    return np.maximum(head, 0.0), np.maximum(tail, 0.0)


def find_threshold(leverage):
    """Locate the elbow in a leverage vector and report the cut.

    Returns a ThresholdReport whose `selected` holds the indices of the
    retained features (positions in the input vector).  When no index
    satisfies the elbow condition, all features are retained and
    elbow_found is False.  Requires at least 4 entries.
    """
    l = np.asarray(leverage, dtype=float)
    if l.ndim != 1:
        raise DegenerateInput("leverage must be a vector")
    p = l.size
    if p < 4:
        raise DegenerateInput(f"need at least 4 leverage values, got {p}")

    order = np.argsort(-l, kind="stable")
    l_sorted = l[order]

    head_var, tail_var = _group_variances(l_sorted)
    counts = np.arange(1, p + 1, dtype=float)
    weighted = counts * head_var + (p - counts) * tail_var
    # First differences: delta[i] = T[i] - T[i-1], defined from the second
    # cut onward (stored with a leading NaN to keep 1-based alignment out
    # of the code; index i of `delta` refers to cut i+1).
    delta = np.diff(weighted)

    cut = p
    found = False
    for i in range(_FIRST_CANDIDATE, p + 1):
        # Scan position i (1-based): increment delta[i] - delta[i-1] against
        # the mean magnitude of all earlier increments.  The spike marks the
        # curve turning upward just past its minimum, so the cut (the point
        # of maximal variance separation) is the preceding index.
        jump = delta[i - 2] - delta[i - 3]
        history = np.abs(delta[: i - 2])
        if jump > history.mean():
            cut = i - 1
            found = True
            break

    threshold = float(l_sorted[cut - 1])
    selected = np.sort(order[:cut])
    return ThresholdReport(
        sorted_leverage=l_sorted,
        weighted_variance=weighted,
        first_difference=delta,
        cut_index=cut,
        threshold=threshold,
        selected=selected,
        elbow_found=found,
    )


def zero_rows(loadings, leverage, threshold):
    """Zero the rows whose leverage falls below the threshold."""
    loadings = np.asarray(loadings, dtype=float)
    leverage = np.asarray(leverage, dtype=float)
    out = loadings.copy()
    out[leverage < threshold] = 0.0
    return out
