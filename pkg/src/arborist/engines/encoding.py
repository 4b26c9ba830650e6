"""Conversion of frames to the numeric matrices the learners consume.

Low-cardinality categoricals become integer level codes that the trees split
natively; columns with more than ``MAX_NATIVE_LEVELS`` levels are replaced by
ordered target statistics (each training row only sees the target values of
rows before it in a random permutation, which keeps the encoding from
leaking its own label).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..frame import ColumnKind, Frame, FrameError, TaskType, format_number

MAX_NATIVE_LEVELS = 16
TS_PRIOR_WEIGHT = 1.0


class SchemaError(FrameError):
    pass


@dataclass
class FeatureRecipe:
    name: str
    kind: str  # "numeric" | "categorical" | "target_stat"
    levels: list[str] = field(default_factory=list)
    # target_stat only: per-level statistic rows and the prior row
    stats: list[list[float]] = field(default_factory=list)
    prior: list[float] = field(default_factory=list)

    @property
    def width(self) -> int:
        return len(self.prior) if self.kind == "target_stat" else 1

    def to_json(self) -> dict:
        doc = {"name": self.name, "kind": self.kind}
        if self.kind != "numeric":
            doc["levels"] = list(self.levels)
        if self.kind == "target_stat":
            doc["stats"] = self.stats
            doc["prior"] = self.prior
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> FeatureRecipe:
        return cls(doc["name"], doc["kind"], doc.get("levels", []), doc.get("stats", []), doc.get("prior", []))


@dataclass
class Recipe:
    target: str
    task: TaskType
    labels: list[str]
    features: list[FeatureRecipe]

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def n_classes(self) -> int:
        return len(self.labels) if self.task.is_classification else 0

    def matrix_layout(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        """Per matrix column: categorical flag, level count, source feature."""
        is_cat, n_levels, owner = [], [], []
        for f in self.features:
            for _ in range(f.width):
                is_cat.append(f.kind == "categorical")
                n_levels.append(len(f.levels) if f.kind == "categorical" else 0)
                owner.append(f.name)
        return np.array(is_cat, dtype=bool), np.array(n_levels, dtype=np.int64), owner

    def transform(self, frame: Frame) -> np.ndarray:
        """Encode ``frame`` for prediction (target column not required)."""
        blocks = []
        for f in self.features:
            if f.name not in frame:
                raise SchemaError(f"missing feature column {f.name!r}")
            col = frame.column(f.name)
            if f.kind == "numeric":
                if col.kind is not ColumnKind.NUMERIC:
                    raise SchemaError(f"feature {f.name!r} must be numeric")
                if col.n_missing:
                    raise SchemaError(f"feature {f.name!r} has missing values")
                blocks.append(col.values.astype(float)[:, None])
                continue
            text = col.text()
            lookup = {lv: i for i, lv in enumerate(f.levels)}
            codes = np.array([lookup.get(t, -1) if t is not None else -1 for t in text], dtype=np.int64)
            if f.kind == "categorical":
                blocks.append(codes.astype(float)[:, None])
            else:
                table = np.vstack([np.asarray(f.stats, dtype=float).reshape(len(f.levels), -1), np.asarray(f.prior)[None, :]])
                blocks.append(table[codes])  # code -1 picks the prior row
        if not blocks:
            return np.zeros((frame.n_rows, 0))
        return np.hstack(blocks)

    def encode_target(self, frame: Frame) -> np.ndarray:
        col = frame.column(self.target)
        if col.n_missing:
            raise SchemaError(f"target {self.target!r} has missing values")
        if self.task is TaskType.REGRESSION:
            return col.values.astype(float)
        lookup = {lv: i for i, lv in enumerate(self.labels)}
        try:
            return np.array([lookup[t] for t in col.text()], dtype=np.int64)
        except KeyError as exc:
            raise SchemaError(f"unknown target label {exc.args[0]!r}") from None

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "task": self.task.value,
            "labels": list(self.labels),
            "features": [f.to_json() for f in self.features],
        }

    @classmethod
    def from_json(cls, doc: dict) -> Recipe:
        return cls(
            doc["target"],
            TaskType(doc["task"]),
            list(doc["labels"]),
            [FeatureRecipe.from_json(f) for f in doc["features"]],
        )


def _target_matrix(y: np.ndarray, task: TaskType, n_classes: int) -> np.ndarray:
    if task is TaskType.REGRESSION:
        return y[:, None].astype(float)
    if task is TaskType.BINARY:
        return (y == 1).astype(float)[:, None]
    return np.eye(n_classes)[y]


def fit_recipe(
    frame: Frame,
    target: str,
    task: TaskType,
    labels: list[str] | None = None,
    seed: int = 0,
) -> tuple[Recipe, np.ndarray, np.ndarray]:
    """Learn the encoding on training rows; returns (recipe, X_train, y_train)."""
    features = [n for n in frame.names if n != target]
    if not features:
        raise FrameError("no features")
    if task.is_classification:
        labels = list(labels) if labels is not None else frame.column(target).levels()
    else:
        labels = []
    recipe = Recipe(target, task, labels, [])
    y = recipe.encode_target(frame)
    ymat = _target_matrix(y, task, len(labels))
    prior = ymat.mean(axis=0)
    rng = np.random.default_rng(seed)
    blocks = []
    for name in features:
        col = frame.column(name)
        if col.n_missing:
            raise SchemaError(f"feature {name!r} has missing values; impute first")
        if col.kind is ColumnKind.NUMERIC:
            recipe.features.append(FeatureRecipe(name, "numeric"))
            blocks.append(col.values.astype(float)[:, None])
            continue
        text = col.text()
        levels = sorted(set(text))
        lookup = {lv: i for i, lv in enumerate(levels)}
        codes = np.array([lookup[t] for t in text], dtype=np.int64)
        if len(levels) <= MAX_NATIVE_LEVELS:
            recipe.features.append(FeatureRecipe(name, "categorical", levels))
            blocks.append(codes.astype(float)[:, None])
            continue
        # ordered target statistics for training rows
        k = ymat.shape[1]
        sums = np.zeros((len(levels), k))
        counts = np.zeros(len(levels))
        encoded = np.zeros((len(codes), k))
        for i in rng.permutation(len(codes)):
            c = codes[i]
            encoded[i] = (sums[c] + TS_PRIOR_WEIGHT * prior) / (counts[c] + TS_PRIOR_WEIGHT)
            sums[c] += ymat[i]
            counts[c] += 1
        full = (sums + TS_PRIOR_WEIGHT * prior) / (counts[:, None] + TS_PRIOR_WEIGHT)
        recipe.features.append(
            FeatureRecipe(name, "target_stat", levels, full.tolist(), prior.tolist())
        )
        blocks.append(encoded)
    return recipe, np.hstack(blocks), y


def label_text(value: float | str) -> str:
    return value if isinstance(value, str) else format_number(float(value))
