"""Data-quality detectors and the aggregated check report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Sequence

import numpy as np

from .frame import ColumnKind, Frame, FrameError, MULTICLASS_LIMIT, name_tokens
from .stats import cramers_v, pearson_complete

DEFAULT_ID_NAMES = ("id", "index", "key", "identifier", "uuid", "guid", "nr", "number")
OUTLIER_IQR_FACTOR = 3.0
IMBALANCE_RATIO = 3.0


class IssueKind(str, Enum):
    DUPLICATE_COLUMNS = "duplicate_columns"
    ID_LIKE_COLUMN = "id_like_column"
    STATIC_COLUMN = "static_column"
    SPARSE_COLUMN = "sparse_column"
    CORRUPTED_ROW = "corrupted_row"
    HIGH_CORRELATION_PAIR = "high_correlation_pair"
    NUMERIC_OUTLIERS = "numeric_outliers"
    MISSING_VALUES = "missing_values"
    TARGET_IMBALANCE = "target_imbalance"


_KIND_ORDER = {k: i for i, k in enumerate(IssueKind)}


@dataclass(frozen=True)
class CheckThresholds:
    """Removal thresholds: static share ``k``, sparse share ``l``,
    corrupted-row share ``m`` and correlation ``n``."""

    k: float = 0.99
    l: float = 0.5
    m: float = 0.5
    n: float = 0.7

    def __post_init__(self) -> None:
        for name in ("k", "l", "m", "n"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"threshold {name}={v} outside [0, 1]")


@dataclass(frozen=True)
class DataIssue:
    kind: IssueKind
    severity: str
    subjects: tuple
    detail: str
    statistic: float | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "severity": self.severity,
            "subjects": list(self.subjects),
            "statistic": self.statistic,
            "detail": self.detail,
        }

    @classmethod
    def from_json(cls, doc: dict) -> DataIssue:
        return cls(
            IssueKind(doc["kind"]),
            doc["severity"],
            tuple(doc["subjects"]),
            doc["detail"],
            doc.get("statistic"),
        )


def _issue_key(issue: DataIssue) -> tuple:
    first = issue.subjects[0]
    return (_KIND_ORDER[issue.kind], isinstance(first, str), first)


@dataclass
class DataCheckReport:
    issues: list[DataIssue]
    summary: dict = field(default_factory=dict)

    def of_kind(self, kind: IssueKind) -> list[DataIssue]:
        return [i for i in self.issues if i.kind is kind]

    def to_json(self) -> dict:
        return {"summary": self.summary, "issues": [i.to_json() for i in self.issues]}

    @classmethod
    def from_json(cls, doc: dict) -> DataCheckReport:
        return cls([DataIssue.from_json(d) for d in doc["issues"]], doc.get("summary", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        s = self.summary
        lines = [
            f"Data check: {s.get('n_rows', 0)} rows, {s.get('n_cols', 0)} columns "
            f"({s.get('n_numeric', 0)} numeric, {s.get('n_categorical', 0)} categorical)"
        ]
        if s.get("target"):
            lines.append(f"Target: {s['target']}")
        if not self.issues:
            lines.append("No issues found.")
        for issue in self.issues:
            stat = "" if issue.statistic is None else f" [{issue.statistic:.4g}]"
            lines.append(f"- {issue.severity.upper()} {issue.kind.value}{stat}: {issue.detail}")
        return "\n".join(lines)


def _features(frame: Frame, target: str | None) -> list[str]:
    return [n for n in frame.names if n != target]


# ---------------------------------------------------------------- detectors


def detect_duplicate_columns(frame: Frame, target: str | None = None) -> list[DataIssue]:
    names = _features(frame, target)
    cols = {n: frame.column(n) for n in names}
    grouped: set[str] = set()
    issues = []
    for i, a in enumerate(names):
        if a in grouped:
            continue
        group = [a] + [b for b in names[i + 1:] if b not in grouped and cols[a].equals(cols[b])]
        if len(group) > 1:
            grouped.update(group)
            issues.append(
                DataIssue(
                    IssueKind.DUPLICATE_COLUMNS,
                    "warning",
                    tuple(group),
                    f"identical columns: {', '.join(group)}",
                )
            )
    return issues


def _is_integer_column(col) -> bool:
    if col.kind is ColumnKind.NUMERIC:
        vals = col.present()
        return len(vals) > 0 and bool(np.all(vals == np.round(vals)))
    try:
        return len(col.present()) > 0 and all(str(int(v)) == v.strip() for v in col.present())
    except ValueError:
        return False


def detect_id_like(
    frame: Frame,
    name_list: Sequence[str] = DEFAULT_ID_NAMES,
    target: str | None = None,
) -> list[DataIssue]:
    wanted = {n.lower() for n in name_list}
    issues = []
    for name in _features(frame, target):
        col = frame.column(name)
        if wanted & set(name_tokens(name)) or name.lower() in wanted:
            reason = "name matches the id-like list"
        elif (
            col.n_missing == 0
            and len(col) > 1
            and _is_integer_column(col)
            and len(set(col.present().tolist())) == len(col)
        ):
            reason = "all-distinct integer values"
        else:
            continue
        issues.append(DataIssue(IssueKind.ID_LIKE_COLUMN, "warning", (name,), f"{name}: {reason}"))
    return issues


def modal_share(col) -> float | None:
    present = col.present()
    if len(present) == 0:
        return None
    _, counts = np.unique(present.astype(str) if col.kind is ColumnKind.CATEGORICAL else present, return_counts=True)
    return float(counts.max() / len(present))


def detect_static(frame: Frame, k: float = 0.99, target: str | None = None) -> list[DataIssue]:
    issues = []
    for name in _features(frame, target):
        share = modal_share(frame.column(name))
        if share is not None and share >= k:
            issues.append(
                DataIssue(
                    IssueKind.STATIC_COLUMN,
                    "warning",
                    (name,),
                    f"{name}: modal value covers {share:.1%} of non-missing cells",
                    share,
                )
            )
    return issues


def detect_sparse(frame: Frame, l: float = 0.5, target: str | None = None) -> list[DataIssue]:
    issues = []
    for name in _features(frame, target):
        col = frame.column(name)
        share = 1.0 - col.n_missing / len(col) if len(col) else 0.0
        if share < l:
            issues.append(
                DataIssue(
                    IssueKind.SPARSE_COLUMN,
                    "warning",
                    (name,),
                    f"{name}: only {share:.1%} of cells are present",
                    share,
                )
            )
    return issues


def corrupted_rows(frame: Frame, target: str | None, m: float = 0.5) -> np.ndarray:
    """Indices of rows with a present-share below ``m`` or a missing target."""
    if frame.n_cols == 0 or frame.n_rows == 0:
        return np.array([], dtype=np.int64)
    missing = np.stack([c.missing for c in frame.columns()], axis=1)
    share = 1.0 - missing.mean(axis=1)
    bad = share < m
    if target is not None:
        bad |= frame.column(target).missing
    return np.flatnonzero(bad)


def detect_corrupted_rows(frame: Frame, target: str | None, m: float = 0.5) -> list[DataIssue]:
    rows = corrupted_rows(frame, target, m)
    if len(rows) == 0:
        return []
    return [
        DataIssue(
            IssueKind.CORRUPTED_ROW,
            "warning",
            tuple(int(r) for r in rows),
            f"{len(rows)} row(s) with a missing target or fewer than {m:.0%} present cells",
            len(rows) / frame.n_rows,
        )
    ]


def correlated_pairs(frame: Frame, names: Sequence[str], n: float) -> list[tuple[str, str, float]]:
    """All numeric/numeric (Pearson) and categorical/categorical (Cramér's V)
    pairs whose absolute association reaches ``n``."""
    out = []
    for a, b in combinations(names, 2):
        ca, cb = frame.column(a), frame.column(b)
        if ca.kind is not cb.kind:
            continue
        if ca.kind is ColumnKind.NUMERIC:
            r = pearson_complete(ca, cb)
        else:
            r = cramers_v(ca, cb)
        if r is not None and abs(r) >= n:
            out.append((a, b, r))
    return out


def detect_high_correlation(frame: Frame, n: float = 0.7, target: str | None = None) -> list[DataIssue]:
    return [
        DataIssue(
            IssueKind.HIGH_CORRELATION_PAIR,
            "warning",
            (a, b),
            f"{a} ~ {b}: association {r:+.3f}",
            r,
        )
        for a, b, r in correlated_pairs(frame, _features(frame, target), n)
    ]


def outlier_mask(values: np.ndarray, factor: float = OUTLIER_IQR_FACTOR) -> np.ndarray:
    if len(values) == 0:
        return np.zeros(0, dtype=bool)
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    if iqr == 0:
        return values != med
    return (values < q1 - factor * iqr) | (values > q3 + factor * iqr)


def detect_outliers(frame: Frame, target: str | None = None) -> list[DataIssue]:
    issues = []
    for name in _features(frame, target):
        col = frame.column(name)
        if col.kind is not ColumnKind.NUMERIC:
            continue
        present = col.present()
        if np.isin(present, (0.0, 1.0)).all():  # 0/1 indicators have no outliers
            continue
        count = int(outlier_mask(present).sum())
        if count:
            issues.append(
                DataIssue(
                    IssueKind.NUMERIC_OUTLIERS,
                    "info",
                    (name,),
                    f"{name}: {count} value(s) beyond {OUTLIER_IQR_FACTOR:g} IQR of the quartiles",
                    float(count),
                )
            )
    return issues


def detect_missing(frame: Frame, target: str | None = None) -> list[DataIssue]:
    issues = []
    for name in frame.names:
        col = frame.column(name)
        if col.n_missing:
            share = col.n_missing / len(col)
            issues.append(
                DataIssue(
                    IssueKind.MISSING_VALUES,
                    "info",
                    (name,),
                    f"{name}: {col.n_missing} missing cell(s)",
                    share,
                )
            )
    return issues


def _is_classification_target(col) -> bool:
    n_levels = len(col.levels())
    return col.kind is ColumnKind.CATEGORICAL or 2 <= n_levels <= MULTICLASS_LIMIT


def detect_imbalance(frame: Frame, target: str) -> list[DataIssue]:
    col = frame.column(target)
    if not _is_classification_target(col):
        return []
    _, counts = np.unique(np.array([t for t in col.text() if t is not None]), return_counts=True)
    if len(counts) < 2:
        return []
    ratio = float(counts.max() / counts.min())
    if ratio <= IMBALANCE_RATIO:
        return []
    return [
        DataIssue(
            IssueKind.TARGET_IMBALANCE,
            "warning",
            (target,),
            f"majority/minority class ratio is {ratio:.2f}",
            ratio,
        )
    ]


def summarize(frame: Frame, target: str | None) -> dict:
    kinds = [frame.kind(n) for n in frame.names]
    summary = {
        "n_rows": frame.n_rows,
        "n_cols": frame.n_cols,
        "n_numeric": sum(k is ColumnKind.NUMERIC for k in kinds),
        "n_categorical": sum(k is ColumnKind.CATEGORICAL for k in kinds),
        "target": target,
    }
    if target is not None and frame.n_rows:
        col = frame.column(target)
        if _is_classification_target(col):
            labels, counts = np.unique(
                np.array([t for t in col.text() if t is not None]), return_counts=True
            )
            summary["target_counts"] = {str(a): int(b) for a, b in zip(labels, counts)}
        else:
            vals = col.present()
            summary["target_mean"] = float(vals.mean())
            summary["target_std"] = float(vals.std())
    return summary


def check_data(
    frame: Frame,
    target: str,
    thresholds: CheckThresholds | None = None,
    id_names: Sequence[str] = DEFAULT_ID_NAMES,
) -> DataCheckReport:
    """Run every detector and collect the findings in a deterministic order."""
    if target not in frame:
        raise FrameError(f"target {target!r} is not a column")
    t = thresholds or CheckThresholds()
    if frame.n_rows == 0:
        return DataCheckReport([], summarize(frame, target))
    issues = (
        detect_duplicate_columns(frame, target)
        + detect_id_like(frame, id_names, target)
        + detect_static(frame, t.k, target)
        + detect_sparse(frame, t.l, target)
        + detect_corrupted_rows(frame, target, t.m)
        + detect_high_correlation(frame, t.n, target)
        + detect_outliers(frame, target)
        + detect_missing(frame, target)
        + detect_imbalance(frame, target)
    )
    issues.sort(key=_issue_key)
    return DataCheckReport(issues, summarize(frame, target))


__all__ = [
    "CheckThresholds",
    "DataCheckReport",
    "DataIssue",
    "IssueKind",
    "check_data",
    "corrupted_rows",
    "correlated_pairs",
    "detect_corrupted_rows",
    "detect_duplicate_columns",
    "detect_high_correlation",
    "detect_id_like",
    "detect_imbalance",
    "detect_missing",
    "detect_outliers",
    "detect_sparse",
    "detect_static",
]
