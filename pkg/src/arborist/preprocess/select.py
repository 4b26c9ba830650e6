"""Feature selection: greedy mutual information, Boruta, MCFS and
permutation variable importance."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import binomtest

from ..engines import fit_random_forest, fit_tree, oob_permutation_importance
from ..frame import Column, Frame, FrameError, TaskType, detect_task
from ..stats import discretize, equal_frequency_bins, mutual_information

N_BINS = 10
SHADOW_PREFIX = "shadow__"


def _task_and_labels(frame: Frame, target: str) -> tuple[TaskType, list[str]]:
    task = detect_task(frame, target)
    labels = frame.column(target).levels() if task.is_classification else []
    return task, labels


def _target_codes(frame: Frame, target: str, task: TaskType) -> np.ndarray:
    col = frame.column(target)
    if task is TaskType.REGRESSION:
        return equal_frequency_bins(col.values.astype(float), N_BINS)
    return discretize(col)


def _require_complete(frame: Frame, names: list[str]) -> None:
    for n in names:
        if frame.column(n).n_missing:
            raise FrameError(f"feature {n!r} has missing values; impute before selection")


def select_mutual_info(frame: Frame, target: str, top_k: int = 10) -> list[str]:
    """Greedy relevance-minus-redundancy ranking; returns up to ``top_k``
    names in selection order."""
    features = [n for n in frame.names if n != target]
    _require_complete(frame, features)
    task = detect_task(frame, target)
    y = _target_codes(frame, target, task)
    codes = {n: discretize(frame.column(n), N_BINS) for n in features}
    relevance = {n: mutual_information(codes[n], y) for n in features}
    redundancy: dict[tuple[str, str], float] = {}
    selected: list[str] = []
    remaining = list(features)
    while remaining and len(selected) < top_k:
        best, best_score = None, -np.inf
        for n in remaining:
            if selected:
                for s in selected:
                    if (n, s) not in redundancy:
                        redundancy[(n, s)] = mutual_information(codes[n], codes[s])
                penalty = float(np.mean([redundancy[(n, s)] for s in selected]))
            else:
                penalty = 0.0
            score = relevance[n] - penalty
            if score > best_score:
                best, best_score = n, score
        selected.append(best)
        remaining.remove(best)
    return selected


def _shadow(col: Column, rng: np.random.Generator) -> Column:
    perm = rng.permutation(len(col))
    return Column(SHADOW_PREFIX + col.name, col.kind, col.values[perm], col.missing[perm])


def boruta_history(
    frame: Frame,
    target: str,
    max_iter: int = 100,
    alpha: float = 0.05,
    seed: int = 0,
    n_trees: int = 100,
) -> dict:
    """Run Boruta and return the full decision record.

    Each iteration appends a shuffled copy of every still-undecided or
    confirmed feature, fits a random forest and scores a hit for each real
    feature whose out-of-bag permutation importance beats the best shadow. A two-sided binomial test
    (p=0.5) at level ``alpha`` confirms or rejects a feature.
    """
    if max_iter < 1:
        raise ValueError("Boruta needs at least one iteration")
    features = [n for n in frame.names if n != target]
    _require_complete(frame, features)
    task, labels = _task_and_labels(frame, target)
    rng = np.random.default_rng(seed)
    status = dict.fromkeys(features, "tentative")
    hits = dict.fromkeys(features, 0)
    trials = dict.fromkeys(features, 0)
    importances: dict[str, list[float]] = {n: [] for n in features}
    shadow_max: list[float] = []
    for it in range(max_iter):
        active = [n for n in features if status[n] != "rejected"]
        shadows = [_shadow(frame.column(n), rng) for n in active]
        view = Frame([frame.column(n) for n in active] + shadows + [frame.column(target)], target)
        fit_seed = int(rng.integers(2**31))
        model = fit_random_forest(view, target, {"n_trees": n_trees}, seed=fit_seed, task=task, labels=labels)
        imp = oob_permutation_importance(model, view, fit_seed)
        if not all(math.isfinite(v) for v in imp.values()):
            raise FrameError("non-finite importance in Boruta iteration")
        best_shadow = max(imp[s.name] for s in shadows)
        shadow_max.append(best_shadow)
        for n in active:
            importances[n].append(imp[n])
            trials[n] += 1
            if imp[n] > best_shadow:
                hits[n] += 1
        for n in active:
            if status[n] != "tentative":
                continue
            if binomtest(hits[n], trials[n], 0.5).pvalue < alpha:
                status[n] = "confirmed" if hits[n] * 2 > trials[n] else "rejected"
        if all(s != "tentative" for s in status.values()):
            break
    final = dict(status)
    shadow_median = float(np.median(shadow_max))
    for n, s in status.items():
        if s == "tentative":
            final[n] = "confirmed" if np.median(importances[n]) > shadow_median else "rejected"
    return {
        "status": status,
        "final": final,
        "hits": hits,
        "iterations": it + 1,
        "importances": importances,
        "shadow_max": shadow_max,
    }


def select_boruta(
    frame: Frame,
    target: str,
    max_iter: int = 100,
    alpha: float = 0.05,
    seed: int = 0,
    n_trees: int = 100,
) -> list[str]:
    record = boruta_history(frame, target, max_iter, alpha, seed, n_trees)
    return [n for n, s in record["final"].items() if s == "confirmed"]


def mcfs_scores(
    frame: Frame,
    target: str,
    projections: int = 100,
    fraction: float = 0.3,
    seed: int = 0,
) -> dict[str, float]:
    """Accumulated MCFS score per feature.

    Projection ``r`` uses a generator seeded with ``(seed, r)``: it draws
    ``ceil(fraction * p)`` features, then a bootstrap sample of rows.
    """
    if projections < 1:
        raise ValueError("projections must be at least 1")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    features = [n for n in frame.names if n != target]
    _require_complete(frame, features)
    task, labels = _task_and_labels(frame, target)
    p, n = len(features), frame.n_rows
    m = max(1, math.ceil(fraction * p))
    target_col = frame.column(target)
    scores = dict.fromkeys(features, 0.0)
    for r in range(projections):
        rng = np.random.default_rng([seed, r])
        chosen = [features[j] for j in np.sort(rng.choice(p, m, replace=False))]
        boot = rng.integers(0, n, n)
        oob = np.setdiff1d(np.arange(n), boot)
        if len(oob) == 0:
            continue
        sub = Frame([frame.column(f) for f in chosen] + [target_col], target)
        train = sub.take(boot)
        model = fit_tree(train, target, seed=seed, task=task, labels=labels)
        weight = _oob_gain(model, train, sub.take(oob), target, task)
        if weight <= 0:
            continue
        for f, ri in model.feature_importance().items():
            scores[f] += weight * ri
    return scores


def _oob_gain(model, train: Frame, oob: Frame, target: str, task: TaskType) -> float:
    """Out-of-bag improvement over a constant baseline, floored at zero."""
    pred = model.predict(oob)
    y_oob = model.recipe.encode_target(oob)
    y_train = model.recipe.encode_target(train)
    if task is TaskType.REGRESSION:
        sse = float(((y_oob - pred) ** 2).sum())
        base = float(((y_oob - y_train.mean()) ** 2).sum())
        return max(0.0, 1.0 - sse / base) if base > 0 else 0.0
    acc = float((np.argmax(pred, axis=1) == y_oob).mean())
    majority = int(np.argmax(np.bincount(y_train, minlength=pred.shape[1])))
    return max(0.0, acc - float((y_oob == majority).mean()))


def select_mcfs(
    frame: Frame,
    target: str,
    projections: int = 100,
    fraction: float = 0.3,
    top_k: int = 10,
    seed: int = 0,
) -> list[str]:
    scores = mcfs_scores(frame, target, projections, fraction, seed)
    order = sorted(scores, key=lambda f: -scores[f])  # stable: ties keep column order
    return order[:top_k]


def select_permutation_vi(frame: Frame, target: str, n_repeats: int = 5, seed: int = 0) -> list[str]:
    """Keep features whose permutation importance on a 25% hold-out beats
    the mean importance (accuracy for classification, RMSE for regression)."""
    from ..explain import permutation_importance

    features = [n for n in frame.names if n != target]
    _require_complete(frame, features)
    if len(features) == 1:
        return features
    task, labels = _task_and_labels(frame, target)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(frame.n_rows)
    n_hold = max(1, int(round(0.25 * frame.n_rows)))
    hold, fit_rows = np.sort(perm[:n_hold]), np.sort(perm[n_hold:])
    model = fit_random_forest(frame.take(fit_rows), target, seed=seed, task=task, labels=labels)
    metric = "rmse" if task is TaskType.REGRESSION else "accuracy"
    result = permutation_importance(model, frame.take(hold), metric, n_repeats, seed)
    imp = result.importance
    mean = float(np.mean(list(imp.values())))
    return [f for f in features if imp[f] > mean]


def apply_selection(frame: Frame, target: str, method, seed: int = 0) -> list[str]:
    """Dispatch on a :class:`SelectMethod`; returns the kept feature names."""
    kind = method.kind
    if kind == "none":
        return [n for n in frame.names if n != target]
    if kind == "mutual_info":
        return select_mutual_info(frame, target, method.top_k)
    if kind == "boruta":
        return select_boruta(frame, target, method.max_iter, method.alpha, seed)
    if kind == "mcfs":
        return select_mcfs(frame, target, method.projections, method.fraction, method.top_k, seed)
    return select_permutation_vi(frame, target, method.n_repeats, seed)


__all__ = [
    "apply_selection",
    "boruta_history",
    "mcfs_scores",
    "select_boruta",
    "select_mcfs",
    "select_mutual_info",
    "select_permutation_vi",
]
