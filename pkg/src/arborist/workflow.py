"""End-to-end training: check, preprocess, split, train."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

from .data_check import CheckThresholds, check_data
from .engines import EngineKind
from .evaluation import DEFAULT_REGISTRY, MetricRegistry
from .frame import DEFAULT_RATIOS, Frame, FrameError, infer_types, load_csv, split_frame
from .persist import TrainOutput
from .preprocess import (
    PreprocessConfig,
    SelectMethod,
    apply_selection,
    basic_preprocessing,
    custom_preprocessing,
)
from .preprocess.pipeline import NoFeaturesError
from .tuning import ParamSpace, TuningConfig, run_training


def load_dataset(path: str | Path, target: str | None = None, delimiter: str = ",") -> Frame:
    """Read a CSV and infer column types."""
    frame = infer_types(load_csv(path, delimiter=delimiter))
    if target is not None:
        if target not in frame:
            raise FrameError(f"target {target!r} is not a column of {path}")
        frame = frame.with_target(target)
    return frame


def train(
    frame: Frame,
    target: str,
    engines: Iterable[EngineKind] = tuple(EngineKind),
    tuning: TuningConfig | None = None,
    metric: str | None = None,
    seed: int = 0,
    preprocess: PreprocessConfig | None = None,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    stratify: bool | None = None,
    thresholds: CheckThresholds | None = None,
    spaces: dict[EngineKind, ParamSpace] | None = None,
    registry: MetricRegistry = DEFAULT_REGISTRY,
    threads: int = 1,
    record_timing: bool = True,
    config: dict | None = None,
) -> TrainOutput:
    """Check the data, preprocess it (basic unless ``preprocess`` is given),
    split it, then train and rank models.

    Feature selection, when configured, runs on the training split only.
    """
    if target not in frame:
        raise FrameError(f"target {target!r} is not a column")
    original = frame.with_target(target)
    check = check_data(original, target, thresholds)
    if preprocess is None:
        data, log = basic_preprocessing(original, target)
        select = SelectMethod()
    else:
        select = preprocess.select
        data, log = custom_preprocessing(original, target, replace(preprocess, select=SelectMethod()))
    data = data.reset_row_ids()
    splits = split_frame(data, ratios, seed, stratify, target)
    if select.kind != "none":
        kept = set(apply_selection(data.take(splits.train), target, select, preprocess.seed))
        dropped = [n for n in data.names if n != target and n not in kept]
        for n in dropped:
            log.add("select", n, f"not selected by {select.kind} on the training split")
        data = data.drop(dropped)
        if not [n for n in data.names if n != target]:
            raise NoFeaturesError("no features remain after preprocessing")
    return run_training(
        data,
        target,
        splits,
        engines,
        tuning,
        metric,
        seed,
        spaces,
        registry,
        threads,
        record_timing,
        original=original,
        check=check,
        log=log,
        config=config,
    )
