"""Fit every candidate, tune on the test split, evaluate on all splits."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from ..engines import EngineKind, TrainedModel, fit_model
from ..evaluation import (
    DEFAULT_REGISTRY,
    SPLITS,
    LeaderboardRow,
    MetricRegistry,
    default_sort_metric,
    rank_models,
)
from ..frame import Frame, SplitSet, access_phase, detect_task, label_set
from ..persist import TrainOutput
from ..preprocess import PreprocessLog
from .search import bayes_opt, default_candidates, random_search
from .space import Candidate, ParamSpace, load_spaces

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TuningConfig:
    defaults: bool = True
    random_n: int = 10
    bayes_budget: int = 20
    init_points: int = 8

    def __post_init__(self) -> None:
        if self.random_n < 0 or self.bayes_budget < 0:
            raise ValueError("random_n and bayes_budget must be non-negative")
        if self.bayes_budget and not self.bayes_budget >= self.init_points >= 2:
            raise ValueError("bayes_budget must be 0 or at least init_points (>= 2)")
        if not (self.defaults or self.random_n or self.bayes_budget):
            raise ValueError("no training regime selected")

    def to_json(self) -> dict:
        return asdict(self)


class _Fitter:
    """Fits candidates on the training view and scores them on the test view.

    Fits are memoized by (engine, params) so the default point evaluated
    inside the Bayesian design reuses the default model exactly.
    """

    def __init__(self, train: Frame, test: Frame, target, task, labels, metric, registry, seed, threads):
        self.train, self.test = train, test
        self.target, self.task, self.labels = target, task, labels
        self.metric = registry.check(metric, task)
        self.seed, self.threads = seed, threads
        self.truths = None
        self.cache: dict[str, tuple[TrainedModel, float | None, float]] = {}

    def fit(self, cand: Candidate) -> tuple[TrainedModel, float | None, float]:
        key = cand.engine.value + repr(sorted(cand.params.items()))
        if key not in self.cache:
            start = time.perf_counter()
            with access_phase("tuning"):
                model = fit_model(
                    cand.engine, self.train, self.target, cand.params, self.seed, self.task, self.labels, self.threads
                )
                if self.truths is None:
                    self.truths = model.recipe.encode_target(self.test)
                value = self.metric.compute(self.truths, model.predict(self.test))
            elapsed = time.perf_counter() - start
            if value is not None and np.isfinite(value):
                value = float(value) if self.metric.higher_is_better else -float(value)
            else:
                value = None
            self.cache[key] = (model, value, elapsed)
        return self.cache[key]

    def objective(self, cand: Candidate) -> float | None:
        return self.fit(cand)[1]


def run_training(
    frame: Frame,
    target: str,
    splits: SplitSet,
    engines: Iterable[EngineKind] = tuple(EngineKind),
    tuning: TuningConfig | None = None,
    metric: str | None = None,
    seed: int = 0,
    spaces: dict[EngineKind, ParamSpace] | None = None,
    registry: MetricRegistry = DEFAULT_REGISTRY,
    threads: int = 1,
    record_timing: bool = True,
    original: Frame | None = None,
    check=None,
    log: PreprocessLog | None = None,
    config: dict | None = None,
) -> TrainOutput:
    """Train candidates from the selected regimes and assemble a TrainOutput.

    Fitting uses the train split and the tuning objective is ``metric`` on the
    test split; the validation split is only read after tuning, for the final
    evaluation. Minimized metrics are negated for the optimizer.
    """
    tuning = tuning or TuningConfig()
    engines = [EngineKind(e) for e in dict.fromkeys(engines)]
    if not engines:
        raise ValueError("no engines selected")
    spaces = spaces or load_spaces(None)
    task = detect_task(frame, target)
    labels = label_set(frame, target) if task.is_classification else []
    metric = metric or default_sort_metric(task)
    registry.check(metric, task)

    train_view = frame.take(splits.train)
    test_view = frame.take(splits.test)
    fitter = _Fitter(train_view, test_view, target, task, labels, metric, registry, seed, threads)

    chosen: list[Candidate] = []
    if tuning.defaults:
        chosen.extend(default_candidates(engines))
    chosen.extend(random_search(engines, spaces, tuning.random_n, seed))
    histories = {}
    if tuning.bayes_budget:
        defaults = {c.engine: c.params for c in default_candidates(engines)}
        for e in engines:
            best, state = bayes_opt(
                e, spaces[e], fitter.objective, tuning.bayes_budget, tuning.init_points, seed, defaults[e]
            )
            chosen.append(best)
            histories[e.value] = state.to_json()

    models: dict[str, TrainedModel] = {}
    info: dict[str, dict] = {}
    timing: dict[str, float] = {}
    for cand in chosen:
        model, value, elapsed = fitter.fit(cand)
        # a memoized fit can be shared by two names; keep a private copy of the name
        named = TrainedModel(**{**model.__dict__, "name": cand.name})
        models[cand.name] = named
        info[cand.name] = {
            "engine": cand.engine.value,
            "origin": cand.origin,
            "params": cand.params,
            "objective_value": value,
        }
        if record_timing:
            timing[cand.name] = round(elapsed, 6)

    predictions: dict[tuple[str, str], np.ndarray] = {}
    rows = {name: LeaderboardRow(name, info[name]["engine"], info[name]["origin"]) for name in models}
    with access_phase("evaluation"):
        for split in SPLITS:
            view = frame.take(splits.indices(split))
            truths = next(iter(models.values())).recipe.encode_target(view)
            per_split = {}
            for name, model in models.items():
                pred = model.predict(view)
                predictions[(name, split)] = pred
                per_split[name] = registry.evaluate(task, truths, pred)
            for name, values in per_split.items():
                for m, v in values.items():
                    rows[name].values[(m, split)] = v
    rows = {n: _ordered(r) for n, r in rows.items()}
    boards = {s: rank_models(rows.values(), metric, s, registry=registry) for s in SPLITS}
    return TrainOutput(
        target=target,
        task=task,
        labels=labels,
        original=original if original is not None else frame,
        data=frame,
        splits=splits,
        check=check,
        log=log or PreprocessLog(),
        models=models,
        model_info=info,
        predictions=predictions,
        leaderboards=boards,
        metrics=registry.snapshot(),
        seed=seed,
        sort_metric=metric,
        timing=timing,
        tuning={"config": tuning.to_json(), "bayes": histories},
        config=config or {},
    )


def _ordered(row: LeaderboardRow) -> LeaderboardRow:
    """Metric-major, split-minor value order for stable tables."""
    metrics = list(dict.fromkeys(m for m, _ in row.values))
    values = {(m, s): row.values[(m, s)] for m in metrics for s in SPLITS if (m, s) in row.values}
    return LeaderboardRow(row.model, row.engine, row.origin, values)


__all__ = ["TuningConfig", "run_training"]
