"""Missing-value imputation: median/other, median/mode, Gower KNN and MICE."""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..frame import Column, ColumnKind, Frame, FrameError, TaskType
from .config import ImputeMethod

OTHER_LEVEL = "other"


class ImputationError(FrameError):
    pass


def _mode(values) -> str:
    counts = Counter(values)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def _columns_to_impute(frame: Frame, target: str | None) -> list[str]:
    names = [n for n in frame.names if n != target and frame.column(n).n_missing]
    for n in names:
        if frame.column(n).n_missing == frame.n_rows:
            raise ImputationError(f"unimputable column {n!r}: no present cells")
    return names


def _fill(col: Column, fill_values) -> Column:
    values = col.values.copy()
    values[col.missing] = fill_values
    mask = np.zeros(len(col), dtype=bool)
    if col.kind is ColumnKind.NUMERIC:
        return Column(col.name, col.kind, values.astype(float), mask)
    return Column(col.name, col.kind, values, mask)


def impute_simple(frame: Frame, other: bool, target: str | None = None) -> Frame:
    """Numeric cells get the column median; categorical cells get ``"other"``
    (``other=True``) or the modal level."""
    out = []
    for name in _columns_to_impute(frame, target):
        col = frame.column(name)
        if col.kind is ColumnKind.NUMERIC:
            fill = float(np.median(col.present()))
        else:
            fill = OTHER_LEVEL if other else _mode(col.present().tolist())
        out.append(_fill(col, fill))
    return frame.with_columns(out)


def _gower_parts(frame: Frame, names: list[str]):
    """Per-feature arrays for vectorized Gower distances."""
    num, cat = [], []
    for n in names:
        col = frame.column(n)
        if col.kind is ColumnKind.NUMERIC:
            present = col.present()
            span = float(present.max() - present.min()) if len(present) else 0.0
            scaled = col.values / span if span > 0 else np.where(col.missing, np.nan, 0.0)
            num.append(scaled)
        else:
            levels = {lv: i for i, lv in enumerate(col.levels())}
            codes = np.array([np.nan if v is None else levels[v] for v in col.values], dtype=float)
            cat.append(codes)
    num_m = np.array(num) if num else np.zeros((0, frame.n_rows))
    cat_m = np.array(cat) if cat else np.zeros((0, frame.n_rows))
    return num_m, cat_m


def gower_distances(num: np.ndarray, cat: np.ndarray, i: int) -> np.ndarray:
    """Distance from row ``i`` to every row over features present in both."""
    with np.errstate(invalid="ignore"):
        d_num = np.abs(num - num[:, i : i + 1])
        d_cat = (cat != cat[:, i : i + 1]).astype(float)
    d_cat[np.isnan(cat) | np.isnan(cat[:, i : i + 1])] = np.nan
    d = np.vstack([d_num, d_cat])
    valid = ~np.isnan(d)
    count = valid.sum(axis=0)
    total = np.where(valid, d, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = np.where(count > 0, total / count, 1.0)
    return dist


def impute_knn(frame: Frame, k_neighbors: int = 5, target: str | None = None) -> Frame:
    """Fill each missing cell from the ``k`` nearest donor rows (Gower distance
    over the features present in both rows; ties resolved by row order)."""
    to_fill = _columns_to_impute(frame, target)
    if not to_fill:
        return frame
    features = [n for n in frame.names if n != target]
    num, cat = _gower_parts(frame, features)
    cols = {n: frame.column(n) for n in to_fill}
    fills: dict[str, dict[int, object]] = {n: {} for n in to_fill}
    rows_with_gaps = np.flatnonzero(np.any([cols[n].missing for n in to_fill], axis=0))
    order_idx = np.arange(frame.n_rows)
    for i in rows_with_gaps:
        dist = gower_distances(num, cat, i)
        dist[i] = np.inf
        for name in to_fill:
            col = cols[name]
            if not col.missing[i]:
                continue
            donors = np.flatnonzero(~col.missing)
            ranked = donors[np.lexsort((order_idx[donors], dist[donors]))][:k_neighbors]
            vals = col.values[ranked]
            if col.kind is ColumnKind.NUMERIC:
                fills[name][i] = float(np.mean(vals))
            else:
                fills[name][i] = _mode(vals.tolist())
    out = []
    for name in to_fill:
        col = cols[name]
        miss = np.flatnonzero(col.missing)
        out.append(_fill(col, [fills[name][int(i)] for i in miss]))
    return frame.with_columns(out)


_MICE_TREE = {"max_depth": 8, "min_samples_leaf": 5}


def impute_mice(frame: Frame, iterations: int = 5, target: str | None = None, seed: int = 0) -> Frame:
    """Chained equations: start from median/mode, then for ``iterations``
    sweeps re-predict each incomplete column from all other features with a
    regression (or classification) tree fit on its observed rows."""
    from ..engines import fit_tree  # engines import preprocessing-free modules only

    to_fill = _columns_to_impute(frame, target)
    if not to_fill:
        return frame
    original = {n: frame.column(n) for n in to_fill}
    current = impute_simple(frame, other=False, target=target)
    features = [n for n in frame.names if n != target]
    for sweep in range(iterations):
        for name in to_fill:
            col = original[name]
            others = [f for f in features if f != name]
            if not others or col.n_missing == 0 or len(col) - col.n_missing < 2:
                continue
            observed = np.flatnonzero(~col.missing)
            missing = np.flatnonzero(col.missing)
            view = Frame([current.column(f) for f in others] + [current.column(name)], name)
            train = view.take(observed)
            if col.kind is ColumnKind.NUMERIC:
                model = fit_tree(train, name, _MICE_TREE, seed, task=TaskType.REGRESSION)
                filled = model.predict(view.take(missing)).astype(float)
            else:
                levels = col.levels()
                if len(levels) == 1:
                    filled = np.array([levels[0]] * len(missing), dtype=object)
                else:
                    task = TaskType.BINARY if len(levels) == 2 else TaskType.MULTICLASS
                    model = fit_tree(train, name, _MICE_TREE, seed + sweep, task=task, labels=levels)
                    filled = np.array(model.predict_labels(view.take(missing)), dtype=object)
            values = current.column(name).values.copy()
            values[missing] = filled
            current = current.with_columns(
                [Column(name, col.kind, values, np.zeros(len(values), dtype=bool))]
            )
    return current


def impute(frame: Frame, method: ImputeMethod, seed: int = 0, target: str | None = None) -> Frame:
    """Fill every missing feature cell; present cells are never changed.

    The target column (``target`` or ``frame.target``) is never imputed.
    """
    target = target if target is not None else frame.target
    if method.kind == "median_other":
        return impute_simple(frame, other=True, target=target)
    if method.kind == "median_frequency":
        return impute_simple(frame, other=False, target=target)
    if method.kind == "knn":
        return impute_knn(frame, method.k_neighbors, target=target)
    return impute_mice(frame, method.iterations, target=target, seed=seed)
