"""Task-specific metric suites, custom metrics and ranked leaderboards.

Classification metrics receive integer class codes as truths and a
probability matrix (one column per class, in canonical label order) as
predictions. For binary tasks the positive class is column 1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .frame import TaskType

SPLITS = ("train", "test", "valid")

BINARY_METRICS = (
    "accuracy",
    "auc",
    "f1",
    "recall",
    "precision",
    "sensitivity",
    "specificity",
    "balanced_accuracy",
)
MULTICLASS_METRICS = (
    "accuracy",
    "precision_micro",
    "recall_micro",
    "f1_micro",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "precision_weighted",
    "recall_weighted",
    "f1_weighted",
)
REGRESSION_METRICS = ("mse", "rmse", "mae", "r2", "mad")
LOWER_IS_BETTER = {"mse", "rmse", "mae", "mad"}


class MetricError(ValueError):
    pass


class MetricValues(dict):
    """Metric name -> value (``None`` when undefined), plus ``flags`` naming
    metrics whose value came from a zero denominator or is undefined."""

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.flags: set[str] = set()


def _ratio(num: float, den: float, name: str, out: MetricValues) -> float:
    if den == 0:
        out.flags.add(name)
        return 0.0
    return num / den


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def auc_score(truths: np.ndarray, scores: np.ndarray) -> float | None:
    """Mann-Whitney AUC with half credit for tied scores; ``None`` for one class."""
    truths = np.asarray(truths)
    n_pos = int((truths == 1).sum())
    n_neg = len(truths) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)  # average ranks give the half credit
    return float((ranks[truths == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def roc_curve(truths: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(FPR, TPR) vertices; tied scores form one diagonal segment, so the
    trapezoid area equals :func:`auc_score`."""
    truths = np.asarray(truths)
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    s, t = scores[order], truths[order] == 1
    distinct = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps = np.cumsum(t)[distinct]
    fps = np.cumsum(~t)[distinct]
    n_pos, n_neg = max(t.sum(), 1), max((~t).sum(), 1)
    return np.r_[0.0, fps / n_neg], np.r_[0.0, tps / n_pos]


def _positive_scores(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    return probs[:, 1] if probs.ndim == 2 else probs


def binary_metrics(truths: Sequence[int], probs: np.ndarray, threshold: float = 0.5) -> MetricValues:
    y = np.asarray(truths, dtype=np.int64)
    score = _positive_scores(probs)
    pred = score >= threshold
    pos = y == 1
    tp = float((pred & pos).sum())
    tn = float((~pred & ~pos).sum())
    fp = float((pred & ~pos).sum())
    fn = float((~pred & pos).sum())
    out = MetricValues()
    out["accuracy"] = _ratio(tp + tn, len(y), "accuracy", out)
    auc = auc_score(y, score)
    if auc is None:
        out.flags.add("auc")
    out["auc"] = auc
    precision = _ratio(tp, tp + fp, "precision", out)
    recall = _ratio(tp, tp + fn, "recall", out)
    specificity = _ratio(tn, tn + fp, "specificity", out)
    out["f1"] = _f1(precision, recall)
    out["recall"] = recall
    out["precision"] = precision
    out["sensitivity"] = recall
    out["specificity"] = specificity
    out["balanced_accuracy"] = (recall + specificity) / 2
    return out


def confusion_matrix(truths: Sequence[int], pred: Sequence[int], n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(truths, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return cm


def multiclass_metrics(truths: Sequence[int], prob_rows: np.ndarray) -> MetricValues:
    prob_rows = np.asarray(prob_rows, dtype=float)
    y = np.asarray(truths, dtype=np.int64)
    k = prob_rows.shape[1]
    pred = np.argmax(prob_rows, axis=1)
    cm = confusion_matrix(y, pred, k).astype(float)
    tp = np.diag(cm)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    out = MetricValues()
    out["accuracy"] = _ratio(tp.sum(), len(y), "accuracy", out)
    prec = np.array([_ratio(tp[c], predicted[c], "precision_macro", out) for c in range(k)])
    rec = np.array([_ratio(tp[c], support[c], "recall_macro", out) for c in range(k)])
    f1 = np.array([_f1(p, r) for p, r in zip(prec, rec)])
    micro_p = _ratio(tp.sum(), predicted.sum(), "precision_micro", out)
    micro_r = _ratio(tp.sum(), support.sum(), "recall_micro", out)
    out["precision_micro"] = micro_p
    out["recall_micro"] = micro_r
    out["f1_micro"] = _f1(micro_p, micro_r)
    out["precision_macro"] = float(prec.mean())
    out["recall_macro"] = float(rec.mean())
    out["f1_macro"] = float(f1.mean())
    weights = support / support.sum() if support.sum() else np.zeros(k)
    out["precision_weighted"] = float((weights * prec).sum())
    out["recall_weighted"] = float((weights * rec).sum())
    out["f1_weighted"] = float((weights * f1).sum())
    return out


def regression_metrics(truths: Sequence[float], preds: Sequence[float]) -> MetricValues:
    y = np.asarray(truths, dtype=float)
    p = np.asarray(preds, dtype=float)
    resid = y - p
    out = MetricValues()
    mse = float(np.mean(resid**2))
    out["mse"] = mse
    out["rmse"] = math.sqrt(mse)
    out["mae"] = float(np.mean(np.abs(resid)))
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0:
        out.flags.add("r2")
        out["r2"] = None
    else:
        out["r2"] = 1.0 - float((resid**2).sum()) / sst
    out["mad"] = float(np.mean(np.abs(resid - resid.mean())))
    return out


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class Metric:
    name: str
    direction: str  # "higher" or "lower"
    tasks: frozenset
    compute: Callable[[np.ndarray, np.ndarray], float | None] = field(compare=False)
    builtin: bool = False

    def __post_init__(self) -> None:
        if self.direction not in ("higher", "lower"):
            raise MetricError(f"direction must be 'higher' or 'lower', got {self.direction!r}")

    @property
    def higher_is_better(self) -> bool:
        return self.direction == "higher"

    def applies_to(self, task: TaskType) -> bool:
        return task in self.tasks

    def describe(self) -> dict:
        return {
            "name": self.name,
            "direction": self.direction,
            "tasks": sorted(t.value for t in self.tasks),
            "builtin": self.builtin,
        }


_SUITES = {
    TaskType.BINARY: (BINARY_METRICS, lambda t, p: binary_metrics(t, p)),
    TaskType.MULTICLASS: (MULTICLASS_METRICS, lambda t, p: multiclass_metrics(t, p)),
    TaskType.REGRESSION: (REGRESSION_METRICS, lambda t, p: regression_metrics(t, p)),
}


def _builtin(name: str) -> Metric:
    tasks = frozenset(task for task, (names, _) in _SUITES.items() if name in names)

    def compute(truths, preds, _name=name):
        preds = np.asarray(preds)
        if preds.ndim == 1:
            task = TaskType.REGRESSION if TaskType.REGRESSION in tasks else TaskType.BINARY
        elif preds.shape[1] == 2 and TaskType.BINARY in tasks:
            task = TaskType.BINARY
        else:
            task = TaskType.MULTICLASS
        return _SUITES[task][1](truths, preds)[_name]

    direction = "lower" if name in LOWER_IS_BETTER else "higher"
    return Metric(name, direction, tasks, compute, builtin=True)


class MetricRegistry:
    def __init__(self) -> None:
        self._metrics: dict[str, Metric] = {}
        for names, _ in _SUITES.values():
            for name in names:
                if name not in self._metrics:
                    self._metrics[name] = _builtin(name)

    def register(self, metric: Metric) -> None:
        if metric.name in self._metrics:
            raise MetricError(f"metric {metric.name!r} is already registered")
        self._metrics[metric.name] = metric

    def unregister(self, name: str) -> None:
        metric = self.get(name)
        if metric.builtin:
            raise MetricError(f"cannot remove built-in metric {name!r}")
        del self._metrics[name]

    def get(self, name: str) -> Metric:
        try:
            return self._metrics[name]
        except KeyError:
            raise MetricError(f"unknown metric {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._metrics

    def for_task(self, task: TaskType) -> list[Metric]:
        return [m for m in self._metrics.values() if m.applies_to(task)]

    def check(self, name: str, task: TaskType) -> Metric:
        metric = self.get(name)
        if not metric.applies_to(task):
            raise MetricError(f"metric {name!r} does not apply to {task.value} tasks")
        return metric

    def evaluate(self, task: TaskType, truths: np.ndarray, preds: np.ndarray) -> MetricValues:
        """Every metric applicable to ``task``; non-finite results become ``None``."""
        names, suite = _SUITES[task]
        values = suite(truths, preds)
        for metric in self.for_task(task):
            if metric.builtin:
                continue
            v = metric.compute(truths, preds)
            if v is None or not math.isfinite(v):
                values.flags.add(metric.name)
                v = None
            values[metric.name] = float(v) if v is not None else None
        return values

    def snapshot(self) -> list[dict]:
        return [m.describe() for m in self._metrics.values()]


DEFAULT_REGISTRY = MetricRegistry()


def register_custom_metric(metric: Metric, registry: MetricRegistry = DEFAULT_REGISTRY) -> None:
    registry.register(metric)


def default_sort_metric(task: TaskType) -> str:
    return "rmse" if task is TaskType.REGRESSION else "accuracy"


# ------------------------------------------------------------- leaderboard


@dataclass
class LeaderboardRow:
    model: str
    engine: str
    origin: str
    values: dict[tuple[str, str], float | None] = field(default_factory=dict)

    def get(self, metric: str, split: str) -> float | None:
        return self.values.get((metric, split))

    def metrics(self) -> list[str]:
        seen: dict[str, None] = {}
        for m, _ in self.values:
            seen.setdefault(m, None)
        return list(seen)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "engine": self.engine,
            "origin": self.origin,
            "values": [[m, s, v] for (m, s), v in self.values.items()],
        }

    @classmethod
    def from_json(cls, doc: dict) -> LeaderboardRow:
        return cls(doc["model"], doc["engine"], doc["origin"], {(m, s): v for m, s, v in doc["values"]})


@dataclass
class Leaderboard:
    rows: list[LeaderboardRow]
    sort_metric: str
    split: str
    higher_is_better: bool

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> list[str]:
        return [r.model for r in self.rows]

    def best(self) -> LeaderboardRow:
        return self.rows[0]

    def column_keys(self) -> list[tuple[str, str]]:
        keys: dict[tuple[str, str], None] = {}
        for r in self.rows:
            for k in r.values:
                keys.setdefault(k, None)
        metrics = list(dict.fromkeys(m for m, _ in keys))
        return [(m, s) for m in metrics for s in SPLITS if (m, s) in keys]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        keys = self.column_keys()
        writer.writerow(["model", "engine", "origin"] + [f"{m}@{s}" for m, s in keys])
        for r in self.rows:
            cells = []
            for k in keys:
                v = r.values.get(k)
                cells.append("" if v is None else repr(float(v)))
            writer.writerow([r.model, r.engine, r.origin] + cells)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "sort_metric": self.sort_metric,
            "split": self.split,
            "higher_is_better": self.higher_is_better,
            "rows": [r.to_json() for r in self.rows],
        }

    @classmethod
    def from_json(cls, doc: dict) -> Leaderboard:
        return cls(
            [LeaderboardRow.from_json(r) for r in doc["rows"]],
            doc["sort_metric"],
            doc["split"],
            doc["higher_is_better"],
        )

    def to_text(self, metrics: Sequence[str] | None = None, splits: Sequence[str] = ("test", "valid"), top: int | None = None) -> str:
        rows = self.rows if top is None else self.rows[:top]
        metrics = list(metrics) if metrics else [self.sort_metric]
        header = ["rank", "model", "engine", "origin"] + [f"{m}@{s}" for m in metrics for s in splits]
        lines = [header]
        for i, r in enumerate(rows, 1):
            cells = [str(i), r.model, r.engine, r.origin]
            for m in metrics:
                for s in splits:
                    v = r.get(m, s)
                    cells.append("" if v is None else f"{v:.4f}")
            lines.append(cells)
        widths = [max(len(line[j]) for line in lines) for j in range(len(header))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in lines)


def rank_models(
    rows: Iterable[LeaderboardRow],
    sort_metric: str,
    split: str = "test",
    higher_is_better: bool | None = None,
    registry: MetricRegistry = DEFAULT_REGISTRY,
) -> Leaderboard:
    """Sort rows by ``sort_metric`` on ``split``; undefined values go last,
    ties are broken by model name."""
    if split not in SPLITS:
        raise MetricError(f"unknown split {split!r}")
    if higher_is_better is None:
        higher_is_better = registry.get(sort_metric).higher_is_better
    sign = -1.0 if higher_is_better else 1.0

    def key(row: LeaderboardRow):
        v = row.get(sort_metric, split)
        return (v is None, 0.0 if v is None else sign * v, row.model)

    return Leaderboard(sorted(rows, key=key), sort_metric, split, higher_is_better)
