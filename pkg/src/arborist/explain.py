"""Model-agnostic explanations: permutation importance and partial dependence."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import charts
from .engines import SchemaError, TrainedModel
from .evaluation import DEFAULT_REGISTRY, MetricError, MetricRegistry, default_sort_metric
from .frame import Column, ColumnKind, Frame, format_number

DEFAULT_GRID_SIZE = 20


@dataclass(frozen=True)
class ImportanceResult:
    metric: str
    baseline: float
    importance: dict[str, float]  # mean score drop, in feature order
    std: dict[str, float]
    n_repeats: int
    seed: int

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.importance.items(), key=lambda kv: -kv[1])

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "baseline": self.baseline,
            "n_repeats": self.n_repeats,
            "seed": self.seed,
            "features": [
                {"feature": f, "importance": self.importance[f], "std": self.std[f]} for f in self.importance
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> ImportanceResult:
        feats = doc["features"]
        return cls(
            doc["metric"],
            doc["baseline"],
            {d["feature"]: d["importance"] for d in feats},
            {d["feature"]: d["std"] for d in feats},
            doc["n_repeats"],
            doc["seed"],
        )

    def to_svg(self, title: str = "Permutation importance") -> str:
        ranked = self.ranked()
        return charts.bar_chart(
            [f for f, _ in ranked], [v for _, v in ranked], title, f"drop in {self.metric}"
        )


@dataclass(frozen=True)
class PdpProfile:
    feature: str
    kind: str  # "numeric" or "categorical"
    grid: list  # floats or level strings
    values: dict[str, list[float]]  # one curve per class label, or {"prediction": ...}

    def to_json(self) -> dict:
        return {"feature": self.feature, "kind": self.kind, "grid": list(self.grid), "values": self.values}

    @classmethod
    def from_json(cls, doc: dict) -> PdpProfile:
        return cls(doc["feature"], doc["kind"], list(doc["grid"]), {k: list(v) for k, v in doc["values"].items()})

    def to_svg(self) -> str:
        title = f"Partial dependence: {self.feature}"
        if self.kind == "numeric":
            return charts.line_chart(self.grid, self.values, title, self.feature, "mean prediction")
        return charts.step_or_line([str(g) for g in self.grid], self.values, title, "mean prediction")


def _score(model: TrainedModel, frame: Frame, truths: np.ndarray, metric) -> float:
    value = metric.compute(truths, model.predict(frame))
    if value is None or not np.isfinite(value):
        raise MetricError(f"metric {metric.name!r} is undefined on this frame")
    return float(value)


def _shuffled(col: Column, perm: np.ndarray) -> Column:
    return Column(col.name, col.kind, col.values[perm], col.missing[perm])


def permutation_importance(
    model: TrainedModel,
    frame: Frame,
    metric: str | None = None,
    n_repeats: int = 5,
    seed: int = 0,
    registry: MetricRegistry = DEFAULT_REGISTRY,
) -> ImportanceResult:
    """Mean score drop when each feature is shuffled, ``n_repeats`` times.

    For lower-is-better metrics the sign is flipped so that larger always
    means more important. Repeat ``r`` of feature ``j`` uses the generator
    seeded with ``(seed, j, r)``.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be at least 1")
    metric = metric or default_sort_metric(model.task)
    m = registry.check(metric, model.task)
    sign = 1.0 if m.higher_is_better else -1.0
    truths = model.recipe.encode_target(frame)
    model.recipe.transform(frame)  # schema check up front
    baseline = _score(model, frame, truths, m)
    imp, std = {}, {}
    for j, name in enumerate(model.feature_names):
        col = frame.column(name)
        drops = []
        for r in range(n_repeats):
            perm = np.random.default_rng([seed, j, r]).permutation(frame.n_rows)
            score = _score(model, frame.with_columns([_shuffled(col, perm)]), truths, m)
            drops.append(sign * (baseline - score))
        imp[name] = float(np.mean(drops))
        std[name] = float(np.std(drops))
    return ImportanceResult(metric, baseline, imp, std, n_repeats, seed)


def _grid(col: Column, grid_size: int) -> list:
    if col.kind is ColumnKind.CATEGORICAL:
        return col.levels()
    present = col.present().astype(float)
    qs = np.quantile(present, np.linspace(0, 1, grid_size))
    return [float(v) for v in np.unique(qs)]


def partial_dependence(
    model: TrainedModel, frame: Frame, feature: str, grid_size: int = DEFAULT_GRID_SIZE
) -> PdpProfile:
    """Mean prediction with ``feature`` overwritten by each grid value.

    Numeric grids are ``grid_size`` equally spaced quantiles (duplicates
    merged); categorical grids are the observed levels.
    """
    if feature not in model.feature_names:
        raise SchemaError(f"unknown feature {feature!r} for model {model.name or model.engine.value!r}")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    col = frame.column(feature)
    grid = _grid(col, grid_size)
    n = frame.n_rows
    curves: dict[str, list[float]] = {}
    keys = model.labels if model.task.is_classification else ["prediction"]
    for key in keys:
        curves[key] = []
    for g in grid:
        if col.kind is ColumnKind.NUMERIC:
            filled = Column.numeric(feature, np.full(n, g))
        else:
            filled = Column.categorical(feature, [g] * n)
        pred = model.predict(frame.with_columns([filled]))
        if pred.ndim == 1:
            curves["prediction"].append(float(pred.mean()))
        else:
            for k, key in enumerate(keys):
                curves[key].append(float(pred[:, k].mean()))
    return PdpProfile(feature, col.kind.value, grid, curves)


def dumps(result: ImportanceResult | PdpProfile) -> str:
    return json.dumps(result.to_json(), indent=2, sort_keys=True)


def importance_text(result: ImportanceResult) -> str:
    lines = [f"Permutation importance ({result.metric}, baseline {format_number(round(result.baseline, 6))})"]
    for f, v in result.ranked():
        lines.append(f"  {f:<24} {v:+.4f} ± {result.std[f]:.4f}")
    return "\n".join(lines)
