"""Custom and basic preprocessing pipelines."""

from __future__ import annotations

import numpy as np

from ..data_check import (
    correlated_pairs,
    corrupted_rows,
    detect_duplicate_columns,
    detect_id_like,
    detect_sparse,
    detect_static,
)
from ..frame import Column, ColumnKind, Frame, FrameError, normalize_label
from ..stats import cramers_v, pearson_complete
from .config import ImputeMethod, PreprocessConfig, PreprocessLog
from .impute import impute
from .select import apply_selection


class NoFeaturesError(FrameError):
    pass


def _mean_association(frame: Frame, name: str, others: list[str]) -> float:
    col = frame.column(name)
    vals = []
    for o in others:
        other = frame.column(o)
        if o == name or other.kind is not col.kind:
            continue
        r = pearson_complete(col, other) if col.kind is ColumnKind.NUMERIC else cramers_v(col, other)
        if r is not None:
            vals.append(abs(r))
    return float(np.mean(vals)) if vals else 0.0


def remove_correlated(
    frame: Frame, n: float = 0.7, target: str | None = None
) -> tuple[Frame, list[str]]:
    """Greedily drop features until no pair's |association| reaches ``n``.

    Each step removes the column in the most violating pairs; ties go to the
    larger mean |association| with the remaining columns, then to the later
    column.
    """
    if not 0 < n <= 1:
        raise ValueError("correlation threshold must lie in (0, 1]")
    target = target if target is not None else frame.target
    names = [c for c in frame.names if c != target]
    pairs = [(a, b) for a, b, _ in correlated_pairs(frame, names, n)]
    removed: list[str] = []
    while pairs:
        remaining = [c for c in names if c not in removed]
        degree: dict[str, int] = {}
        for a, b in pairs:
            degree[a] = degree.get(a, 0) + 1
            degree[b] = degree.get(b, 0) + 1
        top = max(degree.values())
        tied = [c for c in remaining if degree.get(c) == top]
        if len(tied) > 1:
            assoc = {c: _mean_association(frame, c, remaining) for c in tied}
            best = max(assoc.values())
            tied = [c for c in tied if assoc[c] == best]
        victim = tied[-1]
        removed.append(victim)
        pairs = [(a, b) for a, b in pairs if victim not in (a, b)]
    return frame.drop(removed), removed


def _drop_columns(frame: Frame, names: list[str], reason: str, log: PreprocessLog, stats=None) -> Frame:
    present = [n for n in names if n in frame]
    for n in present:
        log.add("remove_columns", n, reason, None if stats is None else stats.get(n))
    return frame.drop(present)


def _check_features(frame: Frame, target: str) -> None:
    if not [n for n in frame.names if n != target]:
        raise NoFeaturesError("no features remain after preprocessing")


def remove_missing_target(frame: Frame, target: str, log: PreprocessLog) -> Frame:
    miss = frame.column(target).missing
    if not miss.any():
        return frame
    for rid in frame.row_ids[miss]:
        log.add("remove_rows", int(rid), "missing target")
    return frame.take(np.flatnonzero(~miss))


def run_removal(frame: Frame, target: str, config: PreprocessConfig, log: PreprocessLog) -> Frame:
    t = config.thresholds
    if config.remove_corrupted_rows:
        bad = corrupted_rows(frame, target, t.m)
        if len(bad):
            miss_t = frame.column(target).missing
            for i in bad:
                reason = "missing target" if miss_t[i] else f"fewer than {t.m:.0%} present cells"
                log.add("remove_rows", int(frame.row_ids[i]), reason)
            frame = frame.take(np.setdiff1d(np.arange(frame.n_rows), bad))
    frame = remove_missing_target(frame, target, log)
    if config.remove_duplicates:
        for issue in detect_duplicate_columns(frame, target):
            keep, *dupes = issue.subjects
            frame = _drop_columns(frame, dupes, f"duplicate of {keep}", log)
    if config.remove_id_like:
        names = [i.subjects[0] for i in detect_id_like(frame, config.id_names, target)]
        frame = _drop_columns(frame, names, "id-like column", log)
    if config.remove_static:
        issues = detect_static(frame, t.k, target)
        stats = {i.subjects[0]: i.statistic for i in issues}
        frame = _drop_columns(frame, list(stats), f"static: modal share >= {t.k:g}", log, stats)
    if config.remove_sparse:
        issues = detect_sparse(frame, t.l, target)
        stats = {i.subjects[0]: i.statistic for i in issues}
        frame = _drop_columns(frame, list(stats), f"sparse: present share < {t.l:g}", log, stats)
    if config.remove_correlated:
        frame, gone = remove_correlated(frame, t.n, target)
        for n in gone:
            log.add("remove_columns", n, f"correlated: |association| >= {t.n:g}")
    return frame


def run_imputation(frame: Frame, target: str, method: ImputeMethod | None, seed: int, log: PreprocessLog) -> Frame:
    if method is None:
        return frame
    counts = {n: frame.column(n).n_missing for n in frame.names if n != target}
    out = impute(frame, method, seed, target)
    for n, c in counts.items():
        if c:
            log.add("impute", n, f"{method.kind} filled {c} cell(s)", float(c))
    return out


def run_selection(frame: Frame, target: str, config: PreprocessConfig, log: PreprocessLog) -> Frame:
    if config.select.kind == "none":
        return frame
    kept = set(apply_selection(frame, target, config.select, config.seed))
    dropped = [n for n in frame.names if n != target and n not in kept]
    for n in dropped:
        log.add("select", n, f"not selected by {config.select.kind}")
    frame = frame.drop(dropped)
    _check_features(frame, target)
    return frame


def custom_preprocessing(
    frame: Frame, target: str, config: PreprocessConfig | None = None
) -> tuple[Frame, PreprocessLog]:
    """Removal, then imputation, then feature selection.

    Rows with a missing target are always dropped; the target is never
    removed or imputed.
    """
    config = config or PreprocessConfig()
    if target not in frame:
        raise FrameError(f"target {target!r} is not a column")
    frame = frame.with_target(target)
    log = PreprocessLog()
    frame = run_removal(frame, target, config, log)
    _check_features(frame, target)
    frame = run_imputation(frame, target, config.impute, config.seed, log)
    frame = run_selection(frame, target, config, log)
    return frame, log


def normalize_labels(frame: Frame, target: str, log: PreprocessLog) -> Frame:
    """Trim and case-fold categorical target labels when raw labels collide
    after normalization (e.g. ``"Yes "`` and ``" yes"``)."""
    col = frame.column(target)
    if col.kind is not ColumnKind.CATEGORICAL:
        return frame
    raw = col.levels()
    normalized = {lv: normalize_label(lv) for lv in raw}
    if len(set(normalized.values())) == len(raw):
        return frame
    for lv in raw:
        if normalized[lv] != lv:
            log.add("labels", lv, f"normalized to {normalized[lv]!r}")
    values = [None if v is None else normalized[v] for v in col.values]
    return frame.with_columns([Column.categorical(target, values, col.missing)])


def basic_preprocessing(frame: Frame, target: str) -> tuple[Frame, PreprocessLog]:
    """Fallback used when no custom recipe was given: drop missing-target
    rows, drop static columns (k=0.99), KNN-impute (k=5), normalize labels."""
    if target not in frame:
        raise FrameError(f"target {target!r} is not a column")
    frame = frame.with_target(target)
    log = PreprocessLog()
    frame = remove_missing_target(frame, target, log)
    issues = detect_static(frame, 0.99, target)
    stats = {i.subjects[0]: i.statistic for i in issues}
    frame = _drop_columns(frame, list(stats), "static: modal share >= 0.99", log, stats)
    _check_features(frame, target)
    frame = run_imputation(frame, target, ImputeMethod.knn(5), 0, log)
    frame = normalize_labels(frame, target, log)
    return frame, log
