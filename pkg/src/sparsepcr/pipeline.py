"""End-to-end fitting protocol: standardize, tune on validation, score on test.

Every method fits a grid of candidates on the training fold only; the
validation fold picks the winner (ties prefer sparser models, then the
earlier grid point) and the test fold is scored with the already-fitted
winner, never refit.  Standardization statistics come from the training
fold alone and ride along inside each FitResult, so prediction on raw
held-out rows reproduces the training transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .admm import FpsConfig, fps_path, lambda_grid
from .baselines import (
    fit_dense_pcr,
    fit_lasso,
    fit_logistic_ridge,
    fit_oracle,
    fit_ridge,
    screen_features,
)
from .exceptions import EmptyModel, InvalidInput, PipelineError
from .glm import FitResult, logistic_on_subspace, ols_on_subspace, predict
from .threshold import find_threshold, zero_rows

METHOD_NAMES = (
    "sparse_pcr",
    "fps_pcr",
    "oracle",
    "ridge",
    "lasso",
    "elastic_net",
    "dense_pcr",
    "screen_pcr",
)


@dataclass
class Standardizer:
    """Per-column centering and scaling learned on the training fold."""

    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    def fit(self, x):
        x = np.asarray(x, dtype=float)
        self.center = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        self.scale = scale
        return self

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.scale


def split_indices(n, proportions, seed, min_size=5):
    """Disjoint, exhaustive train/validation/test index sets."""
    proportions = np.asarray(proportions, dtype=float)
    if proportions.size != 3:
        raise InvalidInput("need exactly three proportions")
    if abs(proportions.sum() - 1.0) > 1e-9:
        raise InvalidInput("proportions must sum to 1")
    perm = np.random.default_rng(seed).permutation(n)
    bounds = np.round(np.cumsum(proportions) * n).astype(int)
    folds = (perm[: bounds[0]], perm[bounds[0] : bounds[1]], perm[bounds[1] :])
    for f in folds:
        if f.size < min_size:
            raise InvalidInput(
                f"fold of size {f.size} below the minimum {min_size}; "
                f"n={n} is too small for proportions {proportions.tolist()}"
            )
    return tuple(np.sort(f) for f in folds)


@dataclass
class MethodSpec:
    """What to fit and over which grids."""

    name: str
    family: str = "gaussian"
    d_values: tuple = (3,)
    lambda_count: int = 8
    lambda_values: tuple | None = None
    threshold: str | float = "auto"
    projection: str = "approximate"
    oracle_support: tuple | None = None
    screen_sizes: tuple = (10, 20, 40)
    ridge_penalty_count: int = 13
    lasso_count: int = 30
    mixing: float = 1.0
    fps_max_iter: int = 1000

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise InvalidInput(
                f"unknown method {self.name!r}; expected one of {METHOD_NAMES}"
            )
        if self.family not in ("gaussian", "binomial"):
            raise InvalidInput(f"unknown family {self.family!r}")
        if self.name == "oracle" and self.oracle_support is None:
            raise InvalidInput("oracle method needs oracle_support")


@dataclass
class Candidate:
    fit: FitResult
    hyper: dict
    diagnostics: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    """Held-out score of the tuned model plus the full grid trace."""

    test_metric: float
    metric_name: str
    n_selected: int
    chosen_hyper: dict
    precision: float | None = None
    recall: float | None = None
    roc_points: list = field(default_factory=list)
    grid_trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def _regress(xs, ys, loadings, family):
    if family == "binomial":
        return logistic_on_subspace(xs, ys, loadings)
    return ols_on_subspace(xs, ys, loadings)


def _sparse_pcr_candidates(spec, xs, ys, sweep_cuts=False):
    """Grid of subspace fits: penalty path per d, then threshold and regress.

    With sweep_cuts=True every leverage cut of every path point becomes a
    candidate (used by the ROC sweep).
    """
    n, p = xs.shape
    s = xs.T @ xs / n
    s = 0.5 * (s + s.T)
    if spec.lambda_values is not None:
        lams = np.asarray(spec.lambda_values, dtype=float)
    else:
        lams = lambda_grid(s, spec.lambda_count)
    if spec.name == "fps_pcr":
        threshold_mode = "none"
    else:
        threshold_mode = spec.threshold
    mode = "exact" if spec.projection == "exact" else "approximate"

    candidates = []
    failures = []
    for d in spec.d_values:
        cfg = FpsConfig(lam=0.0, d=int(d), projection_mode=mode, max_iter=spec.fps_max_iter)
        path = fps_path(s, lams, cfg)
        for idx, (est, state) in enumerate(path):
            lam = float(lams[idx])
            leverage = est.leverage
            cuts: list[tuple] = []
            if sweep_cuts:
                order = np.argsort(-leverage, kind="stable")
                lev_sorted = leverage[order]
                for c in range(1, p + 1):
                    if c < p and lev_sorted[c - 1] <= 0:
                        break
                    cuts.append((float(lev_sorted[c - 1]), {"cut": c}))
            elif threshold_mode == "auto":
                report = find_threshold(leverage)
                cuts.append((report.threshold, {"threshold_report": report}))
            elif threshold_mode == "none":
                cuts.append((0.0, {}))
            else:
                cuts.append((float(threshold_mode), {}))
            for tval, extra in cuts:
                trimmed = zero_rows(est.loadings, leverage, tval)
                try:
                    fit = _regress(xs, ys, trimmed, spec.family)
                except EmptyModel as exc:
                    failures.append((f"lam={lam:.4g} d={d} t={tval:.4g}", exc))
                    continue
                hyper = {"lam": lam, "d": int(d), "threshold": tval}
                hyper.update({k: v for k, v in extra.items() if k == "cut"})
                diag = {
                    "admm_iterations": state.iterations,
                    "admm_converged": state.converged,
                }
                if "threshold_report" in extra:
                    diag["threshold_report"] = extra["threshold_report"]
                candidates.append(Candidate(fit=fit, hyper=hyper, diagnostics=diag))
    return candidates, failures


def _baseline_candidates(spec, xs, ys):
    n, p = xs.shape
    name = spec.name
    if name == "oracle":
        support = np.asarray(spec.oracle_support, dtype=int)
        if spec.family == "binomial":
            loadings = np.zeros((p, support.size))
            loadings[support, np.arange(support.size)] = 1.0
            fit = logistic_on_subspace(xs, ys, loadings)
            fit.selected = np.sort(support)
        else:
            fit = fit_oracle(xs, ys, support)
        return [Candidate(fit=fit, hyper={"tuning": "none"})], []

    if name == "ridge":
        pens = xs.shape[0] * np.geomspace(1e-4, 1e3, spec.ridge_penalty_count)
        if spec.family == "binomial":
            fits = fit_logistic_ridge(xs, ys, pens)
        else:
            fits = fit_ridge(xs, ys, pens)
        return [
            Candidate(fit=f, hyper={"penalty": f.extras["penalty"]}) for f in fits
        ], []

    if name in ("lasso", "elastic_net"):
        if spec.family == "binomial":
            raise InvalidInput(f"{name} supports the gaussian family only")
        mixing = 0.5 if name == "elastic_net" else spec.mixing
        lam_max = float(np.abs(xs.T @ ys).max() / n) / mixing
        lams = np.geomspace(lam_max, lam_max / 1000.0, spec.lasso_count)
        fits = fit_lasso(xs, ys, lams, mixing=mixing)
        return [
            Candidate(
                fit=f,
                hyper={"penalty": f.extras["penalty"], "mixing": f.extras["mixing"]},
            )
            for f in fits
        ], []

    if name == "dense_pcr":
        out = []
        failures = []
        for d in spec.d_values:
            d = int(min(d, min(xs.shape)))
            try:
                if spec.family == "binomial":
                    _, _, vt = np.linalg.svd(xs, full_matrices=False)
                    fit = logistic_on_subspace(xs, ys, vt[:d].T)
                else:
                    fit = fit_dense_pcr(xs, ys, d)
            except (EmptyModel, InvalidInput) as exc:
                failures.append((f"d={d}", exc))
                continue
            out.append(Candidate(fit=fit, hyper={"d": d}))
        return out, failures

    if name == "screen_pcr":
        out = []
        failures = []
        for k in spec.screen_sizes:
            k = int(min(k, p))
            kept = screen_features(xs, ys, k)
            for d in spec.d_values:
                d = int(min(d, min(n, kept.size)))
                sub = xs[:, kept]
                try:
                    _, _, vt = np.linalg.svd(sub, full_matrices=False)
                    loadings = np.zeros((p, d))
                    loadings[kept] = vt[:d].T
                    fit = _regress(xs, ys, loadings, spec.family)
                    fit.selected = kept
                except (EmptyModel, InvalidInput) as exc:
                    failures.append((f"k={k} d={d}", exc))
                    continue
                out.append(Candidate(fit=fit, hyper={"screen_k": k, "d": d}))
        return out, failures

    raise InvalidInput(f"unhandled method {name!r}")


def candidate_fits(spec, xs, ys, sweep_cuts=False):
    if spec.name in ("sparse_pcr", "fps_pcr"):
        return _sparse_pcr_candidates(spec, xs, ys, sweep_cuts=sweep_cuts)
    return _baseline_candidates(spec, xs, ys)


def mse(pred, y):
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.mean((pred - y) ** 2))


def accuracy(prob, y):
    return float(np.mean((np.asarray(prob) > 0.5) == (np.asarray(y) > 0.5)))


def selection_scores(selected, true_support, p):
    """Precision, recall, FPR of a selected set against the known support."""
    sel = set(int(j) for j in selected)
    truth = set(int(j) for j in true_support)
    tp = len(sel & truth)
    fp = len(sel - truth)
    fn = len(truth - sel)
    negatives = p - len(truth)
    precision = tp / len(sel) if sel else 1.0
    recall = tp / (tp + fn) if truth else 1.0
    fpr = fp / negatives if negatives else 0.0
    return precision, recall, fpr


def tune_and_fit(spec, x, y, folds, true_support=None):
    """Fit spec's grid on train, select on validation, score on test.

    Returns (FitResult, EvalReport).  Raises PipelineError when every
    candidate failed.
    """
    train, val, test = folds
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    std = Standardizer().fit(x[train])
    xs = std.transform(x[train])
    if spec.family == "gaussian":
        y_center = float(y[train].mean())
        ys = y[train] - y_center
    else:
        y_center = 0.0
        ys = y[train]

    candidates, failures = candidate_fits(spec, xs, ys)
    if not candidates:
        raise PipelineError(
            f"all {spec.name} fits failed", causes=[f"{w}: {e}" for w, e in failures]
        )
    for cand in candidates:
        cand.fit.x_center = std.center
        cand.fit.x_scale = std.scale
        cand.fit.y_center = y_center

    metric_name = "mse" if spec.family == "gaussian" else "accuracy"
    scored = []
    for idx, cand in enumerate(candidates):
        pred = predict(cand.fit, x[val])
        if spec.family == "gaussian":
            score = mse(pred, y[val])
        else:
            score = 1.0 - accuracy(pred, y[val])
        scored.append((score, len(cand.fit.selected), idx))
    scored.sort()
    best_idx = scored[0][2]
    winner = candidates[best_idx]

    pred_test = predict(winner.fit, x[test])
    if spec.family == "gaussian":
        test_metric = mse(pred_test, y[test])
    else:
        test_metric = accuracy(pred_test, y[test])

    precision = recall = None
    if true_support is not None:
        precision, recall, _ = selection_scores(
            winner.fit.selected, true_support, x.shape[1]
        )

    trace = [
        {
            "hyper": candidates[i].hyper,
            "validation_score": s,
            "n_selected": nsel,
        }
        for s, nsel, i in sorted(scored, key=lambda t: t[2])
    ]
    report = EvalReport(
        test_metric=test_metric,
        metric_name=metric_name,
        n_selected=len(winner.fit.selected),
        chosen_hyper=dict(winner.hyper),
        precision=precision,
        recall=recall,
        grid_trace=trace,
        diagnostics=dict(winner.diagnostics),
    )
    return winner.fit, report


def roc_sweep(spec, x, y, true_support):
    """Selection-set operating points over a fine hyperparameter sweep.

    Records (FPR, TPR) of every candidate's selected set against the known
    support, deduplicated and sorted by FPR.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = x.shape[1]
    std = Standardizer().fit(x)
    xs = std.transform(x)
    ys = y - y.mean() if spec.family == "gaussian" else y

    if spec.name in ("sparse_pcr", "fps_pcr"):
        sweep_spec = replace(
            spec,
            lambda_count=max(spec.lambda_count, 12),
            threshold="auto",
        )
        candidates, _ = candidate_fits(sweep_spec, xs, ys, sweep_cuts=True)
    elif spec.name in ("lasso", "elastic_net"):
        sweep_spec = replace(spec, lasso_count=max(spec.lasso_count, 60))
        candidates, _ = candidate_fits(sweep_spec, xs, ys)
    elif spec.name == "screen_pcr":
        sizes = sorted(set(list(spec.screen_sizes) + list(range(1, min(p, 60) + 1, 2))))
        sweep_spec = replace(spec, screen_sizes=tuple(s for s in sizes if s <= p))
        candidates, _ = candidate_fits(sweep_spec, xs, ys)
    else:
        candidates, _ = candidate_fits(spec, xs, ys)

    points = set()
    for cand in candidates:
        _, tpr, fpr = _tpr_fpr(cand.fit.selected, true_support, p)
        points.add((round(fpr, 12), round(tpr, 12)))
    return sorted(points)


def _tpr_fpr(selected, true_support, p):
    precision, recall, fpr = selection_scores(selected, true_support, p)
    return precision, recall, fpr
