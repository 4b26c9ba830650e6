"""Engines: decision tree, random forest and second-order boosting."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ..frame import Frame, FrameError, TaskType, detect_task
from .core import (
    EntropyCriterion,
    GiniCriterion,
    GrowthSettings,
    NewtonCriterion,
    Tree,
    VarianceCriterion,
    grow_tree,
)
from .encoding import Recipe, fit_recipe


class EngineKind(str, Enum):
    TREE = "tree"
    RANDOM_FOREST = "random_forest"
    GBDT_DEPTHWISE = "gbdt_depthwise"
    GBDT_LEAFWISE = "gbdt_leafwise"

    @property
    def is_boosting(self) -> bool:
        return self in (EngineKind.GBDT_DEPTHWISE, EngineKind.GBDT_LEAFWISE)


_TREE_DEFAULTS = {"max_depth": 10, "min_samples_leaf": 5, "criterion": "gini"}
_GBDT_COMMON = {
    "n_rounds": 100,
    "learning_rate": 0.1,
    "min_child_weight": 1.0,
    "reg_lambda": 1.0,
    "subsample": 1.0,
    "colsample": 1.0,
}

DEFAULT_PARAMS: dict[EngineKind, dict[str, Any]] = {
    EngineKind.TREE: dict(_TREE_DEFAULTS),
    EngineKind.RANDOM_FOREST: {
        "n_trees": 100,
        "mtry": None,
        "mtry_fraction": None,
        "sample_fraction": 0.632,
        "replace": False,
        "max_depth": None,
        "min_samples_leaf": 1,
        "criterion": "gini",
    },
    EngineKind.GBDT_DEPTHWISE: {**_GBDT_COMMON, "max_depth": 6},
    EngineKind.GBDT_LEAFWISE: {**_GBDT_COMMON, "max_leaves": 31, "max_depth": None},
}


class ParamError(ValueError):
    pass


def resolve_params(engine: EngineKind, params: dict | None) -> dict:
    """Defaults overlaid with ``params``; unknown keys are rejected."""
    merged = dict(DEFAULT_PARAMS[engine])
    for key, value in (params or {}).items():
        if key not in merged:
            raise ParamError(f"unknown parameter {key!r} for engine {engine.value}")
        merged[key] = value
    if merged.get("criterion", "gini") not in ("gini", "entropy"):
        raise ParamError(f"criterion must be 'gini' or 'entropy', got {merged['criterion']!r}")
    if engine.is_boosting:
        if not merged["learning_rate"] > 0:
            raise ParamError("learning_rate must be positive")
        if not merged["n_rounds"] >= 1:
            raise ParamError("n_rounds must be positive")
        if not 0 < merged["subsample"] <= 1 or not 0 < merged["colsample"] <= 1:
            raise ParamError("subsample and colsample must lie in (0, 1]")
        if merged["reg_lambda"] < 0:
            raise ParamError("reg_lambda must be non-negative")
    if engine is EngineKind.RANDOM_FOREST:
        if merged["n_trees"] < 1:
            raise ParamError("n_trees must be positive")
        if not 0 < merged["sample_fraction"] <= 1 and not merged["replace"]:
            raise ParamError("sample_fraction must lie in (0, 1] without replacement")
    return merged


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@dataclass(eq=False)
class TrainedModel:
    engine: EngineKind
    task: TaskType
    params: dict
    recipe: Recipe
    trees: list[Tree]
    base_score: np.ndarray
    name: str = ""
    loss_history: list[float] = field(default_factory=list)
    oob_prediction: np.ndarray | None = None  # in-memory only
    oob_masks: list[np.ndarray] | None = None  # in-memory only, one per tree

    @property
    def labels(self) -> list[str]:
        return self.recipe.labels

    @property
    def feature_names(self) -> list[str]:
        return self.recipe.feature_names

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        out = np.tile(self.base_score, (X.shape[0], 1))
        for tree in self.trees:
            out[:, tree.output] += tree.predict(X)[:, 0]
        return out

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        if self.engine.is_boosting:
            raw = self.raw_scores(X)
            if self.task is TaskType.REGRESSION:
                return raw[:, 0]
            if self.task is TaskType.BINARY:
                p = _sigmoid(raw[:, 0])
                return np.column_stack([1.0 - p, p])
            return _softmax(raw)
        out = self.trees[0].predict(X).copy()
        for tree in self.trees[1:]:
            out += tree.predict(X)
        out /= len(self.trees)
        if self.task is TaskType.REGRESSION:
            return out[:, 0]
        return out / out.sum(axis=1, keepdims=True)

    def predict(self, frame: Frame) -> np.ndarray:
        """Class-probability rows (classification) or real values (regression)."""
        return self.predict_matrix(self.recipe.transform(frame))

    def predict_labels(self, frame: Frame) -> list[str]:
        probs = self.predict(frame)
        return [self.labels[i] for i in np.argmax(probs, axis=1)]

    def feature_importance(self) -> dict[str, float]:
        """Total split gain per original feature, normalized to sum to 1."""
        _, _, owner = self.recipe.matrix_layout()
        per_col = np.zeros(len(owner))
        for tree in self.trees:
            per_col += tree.importance(len(owner))
        result = dict.fromkeys(self.feature_names, 0.0)
        for name, value in zip(owner, per_col):
            result[name] += float(value)
        total = sum(result.values())
        if total > 0:
            result = {k: v / total for k, v in result.items()}
        return result

    def to_json(self) -> dict:
        return {
            "format": "arborist-model",
            "version": 1,
            "name": self.name,
            "engine": self.engine.value,
            "task": self.task.value,
            "params": self.params,
            "recipe": self.recipe.to_json(),
            "base_score": [float(v) for v in self.base_score],
            "loss_history": [float(v) for v in self.loss_history],
            "trees": [t.to_json() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, doc: dict) -> TrainedModel:
        if doc.get("format") != "arborist-model":
            raise ValueError("not a model document")
        return cls(
            engine=EngineKind(doc["engine"]),
            task=TaskType(doc["task"]),
            params=dict(doc["params"]),
            recipe=Recipe.from_json(doc["recipe"]),
            trees=[Tree.from_json(t) for t in doc["trees"]],
            base_score=np.array(doc["base_score"], dtype=float),
            name=doc.get("name", ""),
            loss_history=list(doc.get("loss_history", [])),
        )


# -------------------------------------------------------------- internals


def _prepare(frame, target, task, labels, seed):
    if task is None:
        task = detect_task(frame, target)
    recipe, X, y = fit_recipe(frame, target, task, labels, seed)
    is_cat, n_levels, _ = recipe.matrix_layout()
    return task, recipe, X, y, is_cat, n_levels


def _cart_stats(y: np.ndarray, task: TaskType, n_classes: int) -> np.ndarray:
    if task is TaskType.REGRESSION:
        return np.column_stack([np.ones(len(y)), y])
    return np.column_stack([np.ones(len(y)), np.eye(n_classes)[y]])


def _cart_criterion(task: TaskType, params: dict):
    leaf = params["min_samples_leaf"]
    if task is TaskType.REGRESSION:
        return VarianceCriterion(leaf)
    if params["criterion"] == "entropy":
        return EntropyCriterion(leaf)
    return GiniCriterion(leaf)


def default_mtry(task: TaskType, p: int) -> int:
    if task is TaskType.REGRESSION:
        return max(1, p // 3)
    return max(1, int(math.floor(math.sqrt(p))))


def resolve_mtry(params: dict, task: TaskType, p: int) -> int:
    if params.get("mtry") is not None:
        return int(min(max(1, params["mtry"]), p))
    if params.get("mtry_fraction") is not None:
        return int(min(p, max(1, round(params["mtry_fraction"] * p))))
    return default_mtry(task, p)


# ----------------------------------------------------------------- public


def fit_tree(
    frame: Frame,
    target: str,
    params: dict | None = None,
    seed: int = 0,
    task: TaskType | None = None,
    labels: list[str] | None = None,
) -> TrainedModel:
    """CART: Gini/entropy for classification, variance reduction for regression."""
    params = resolve_params(EngineKind.TREE, params)
    task, recipe, X, y, is_cat, n_levels = _prepare(frame, target, task, labels, seed)
    if len(y) < 2:
        raise FrameError("need at least 2 rows to fit")
    S = _cart_stats(y, task, recipe.n_classes)
    settings = GrowthSettings(max_depth=params["max_depth"])
    tree = grow_tree(X, is_cat, n_levels, S, _cart_criterion(task, params), settings)
    dim = recipe.n_classes or 1
    return TrainedModel(EngineKind.TREE, task, params, recipe, [tree], np.zeros(dim))


def fit_random_forest(
    frame: Frame,
    target: str,
    params: dict | None = None,
    seed: int = 0,
    task: TaskType | None = None,
    labels: list[str] | None = None,
    threads: int = 1,
) -> TrainedModel:
    """Bagged CART trees with per-split feature subsampling.

    Tree ``t`` draws its sample and feature subsets from a generator seeded
    with ``(seed, t)``, so trees are independent of fitting order.
    """
    params = resolve_params(EngineKind.RANDOM_FOREST, params)
    task, recipe, X, y, is_cat, n_levels = _prepare(frame, target, task, labels, seed)
    n, p = X.shape
    if n < 2:
        raise FrameError("need at least 2 rows to fit")
    base = _cart_stats(y, task, recipe.n_classes)
    crit = _cart_criterion(task, params)
    mtry = resolve_mtry(params, task, p)
    m = max(1, int(round(params["sample_fraction"] * n)))

    def one_tree(t: int) -> tuple[Tree, np.ndarray]:
        rng = np.random.default_rng([seed, t])
        if params["replace"]:
            weights = np.bincount(rng.integers(0, n, m), minlength=n).astype(float)
        else:
            weights = np.zeros(n)
            weights[rng.choice(n, m, replace=False)] = 1.0
        rows = np.flatnonzero(weights > 0)
        settings = GrowthSettings(max_depth=params["max_depth"], mtry=mtry)
        tree = grow_tree(X, is_cat, n_levels, base * weights[:, None], crit, settings, rng, rows)
        return tree, weights == 0

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            fitted = list(pool.map(one_tree, range(params["n_trees"])))
    else:
        fitted = [one_tree(t) for t in range(params["n_trees"])]

    dim = recipe.n_classes or 1
    oob_sum = np.zeros((n, dim))
    oob_count = np.zeros(n)
    for tree, oob in fitted:
        if oob.any():
            oob_sum[oob] += tree.predict(X[oob])
            oob_count[oob] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        oob_pred = oob_sum / oob_count[:, None]
    model = TrainedModel(
        EngineKind.RANDOM_FOREST, task, params, recipe, [t for t, _ in fitted], np.zeros(dim)
    )
    model.oob_prediction = oob_pred if task.is_classification else oob_pred[:, 0]
    model.oob_masks = [oob for _, oob in fitted]
    return model


def oob_permutation_importance(model: TrainedModel, frame: Frame, seed: int = 0) -> dict[str, float]:
    """Mean decrease in out-of-bag accuracy (or increase in OOB MSE) when a
    feature is permuted among each tree's out-of-bag rows.

    ``frame`` must be the frame the forest was fit on. Tree ``t`` permutes with
    a generator seeded by ``(seed, t)``.
    """
    if model.oob_masks is None:
        raise ValueError("out-of-bag masks are only kept for freshly fit forests")
    X = model.recipe.transform(frame)
    y = model.recipe.encode_target(frame)
    _, _, owner = model.recipe.matrix_layout()
    totals = np.zeros(X.shape[1])
    used = 0
    for t, (tree, oob) in enumerate(zip(model.trees, model.oob_masks)):
        rows = np.flatnonzero(oob)
        if len(rows) < 2:
            continue
        used += 1
        Xo, yo = X[rows], y[rows]
        rng = np.random.default_rng([seed, t])

        def score(M):
            out = tree.predict(M)
            if model.task is TaskType.REGRESSION:
                return -float(np.mean((out[:, 0] - yo) ** 2))
            return float(np.mean(np.argmax(out, axis=1) == yo))

        base = score(Xo)
        for j in range(X.shape[1]):
            Xp = Xo.copy()
            Xp[:, j] = Xo[rng.permutation(len(rows)), j]
            totals[j] += base - score(Xp)
    result = dict.fromkeys(model.feature_names, 0.0)
    for name, value in zip(owner, totals / max(used, 1)):
        result[name] += float(value)
    return result


def _loss(task: TaskType, raw: np.ndarray, y: np.ndarray) -> float:
    if task is TaskType.REGRESSION:
        return float(np.mean((raw[:, 0] - y) ** 2))
    if task is TaskType.BINARY:
        z = raw[:, 0]
        # log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0
        return float(np.mean(np.logaddexp(0.0, np.where(y == 1, -z, z))))
    shifted = raw - raw.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-np.mean(logp[np.arange(len(y)), y]))


def _gradients(task: TaskType, raw: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if task is TaskType.REGRESSION:
        return raw - y[:, None], np.ones_like(raw)
    if task is TaskType.BINARY:
        p = _sigmoid(raw[:, 0])
        return (p - y)[:, None], np.maximum(p * (1 - p), 1e-16)[:, None]
    prob = _softmax(raw)
    onehot = np.eye(raw.shape[1])[y]
    return prob - onehot, np.maximum(prob * (1 - prob), 1e-16)


def base_score_for(task: TaskType, y: np.ndarray, n_classes: int) -> np.ndarray:
    if task is TaskType.REGRESSION:
        return np.array([float(np.mean(y))])
    if task is TaskType.BINARY:
        p = float(np.clip(np.mean(y == 1), 1e-12, 1 - 1e-12))
        return np.array([math.log(p / (1 - p))])
    prior = np.bincount(y, minlength=n_classes) / len(y)
    return np.log(np.clip(prior, 1e-12, None))


def fit_gbdt(
    frame: Frame,
    target: str,
    params: dict | None = None,
    growth: str = "depthwise",
    seed: int = 0,
    task: TaskType | None = None,
    labels: list[str] | None = None,
) -> TrainedModel:
    """Second-order gradient boosting with depth-wise or leaf-wise growth.

    Logistic loss for binary targets, softmax (one tree per class per round)
    for multiclass, squared error for regression. ``loss_history`` holds the
    training loss before the first round and after every round.
    """
    if growth not in ("depthwise", "leafwise"):
        raise ParamError(f"growth must be 'depthwise' or 'leafwise', got {growth!r}")
    engine = EngineKind.GBDT_DEPTHWISE if growth == "depthwise" else EngineKind.GBDT_LEAFWISE
    params = resolve_params(engine, params)
    task, recipe, X, y, is_cat, n_levels = _prepare(frame, target, task, labels, seed)
    n, p = X.shape
    crit = NewtonCriterion(params["reg_lambda"], params["learning_rate"], params["min_child_weight"])
    base = base_score_for(task, y, recipe.n_classes)
    raw = np.tile(base, (n, 1))
    history = [_loss(task, raw, y)]
    trees: list[Tree] = []
    n_sub = max(1, int(round(params["subsample"] * n)))
    n_col = max(1, int(round(params["colsample"] * p)))
    for r in range(params["n_rounds"]):
        rng = np.random.default_rng([seed, r])
        grad, hess = _gradients(task, raw, y)
        rows = np.arange(n) if n_sub >= n else np.sort(rng.choice(n, n_sub, replace=False))
        for k in range(raw.shape[1]):
            pool = None if n_col >= p else np.sort(rng.choice(p, n_col, replace=False))
            if engine is EngineKind.GBDT_DEPTHWISE:
                settings = GrowthSettings(max_depth=params["max_depth"], feature_pool=pool)
            else:
                settings = GrowthSettings(
                    max_depth=params["max_depth"], max_leaves=params["max_leaves"], feature_pool=pool
                )
            S = np.column_stack([np.ones(n), grad[:, k], hess[:, k]])
            tree = grow_tree(X, is_cat, n_levels, S, crit, settings, rng, rows, output=k)
            trees.append(tree)
        for tree in trees[-raw.shape[1]:]:
            raw[:, tree.output] += tree.predict(X)[:, 0]
        history.append(_loss(task, raw, y))
    model = TrainedModel(engine, task, params, recipe, trees, base)
    model.loss_history = history
    return model


def fit_model(
    engine: EngineKind,
    frame: Frame,
    target: str,
    params: dict | None = None,
    seed: int = 0,
    task: TaskType | None = None,
    labels: list[str] | None = None,
    threads: int = 1,
) -> TrainedModel:
    engine = EngineKind(engine)
    if engine is EngineKind.TREE:
        return fit_tree(frame, target, params, seed, task, labels)
    if engine is EngineKind.RANDOM_FOREST:
        return fit_random_forest(frame, target, params, seed, task, labels, threads)
    growth = "depthwise" if engine is EngineKind.GBDT_DEPTHWISE else "leafwise"
    return fit_gbdt(frame, target, params, growth, seed, task, labels)


def predict(model: TrainedModel, frame: Frame) -> np.ndarray:
    return model.predict(frame)
