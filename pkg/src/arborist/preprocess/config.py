"""Declarative preprocessing recipe and its audit log."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..data_check import DEFAULT_ID_NAMES, CheckThresholds
from ..frame import Frame

IMPUTE_KINDS = ("median_other", "median_frequency", "knn", "mice")
SELECT_KINDS = ("none", "mutual_info", "boruta", "mcfs", "permutation_vi")


@dataclass(frozen=True)
class ImputeMethod:
    kind: str = "median_frequency"
    k_neighbors: int = 5
    iterations: int = 5

    def __post_init__(self) -> None:
        if self.kind not in IMPUTE_KINDS:
            raise ValueError(f"unknown imputation method {self.kind!r}; choose from {IMPUTE_KINDS}")
        if self.k_neighbors < 1 or self.iterations < 1:
            raise ValueError("k_neighbors and iterations must be at least 1")

    @classmethod
    def median_other(cls) -> ImputeMethod:
        return cls("median_other")

    @classmethod
    def median_frequency(cls) -> ImputeMethod:
        return cls("median_frequency")

    @classmethod
    def knn(cls, k_neighbors: int = 5) -> ImputeMethod:
        return cls("knn", k_neighbors=k_neighbors)

    @classmethod
    def mice(cls, iterations: int = 5) -> ImputeMethod:
        return cls("mice", iterations=iterations)


@dataclass(frozen=True)
class SelectMethod:
    kind: str = "none"
    top_k: int = 10
    max_iter: int = 100
    alpha: float = 0.05
    projections: int = 100
    fraction: float = 0.3
    n_repeats: int = 5

    def __post_init__(self) -> None:
        if self.kind not in SELECT_KINDS:
            raise ValueError(f"unknown selection method {self.kind!r}; choose from {SELECT_KINDS}")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if not 0 < self.fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class PreprocessConfig:
    remove_duplicates: bool = True
    remove_id_like: bool = True
    remove_static: bool = True
    remove_sparse: bool = True
    remove_corrupted_rows: bool = True
    remove_correlated: bool = False
    thresholds: CheckThresholds = field(default_factory=CheckThresholds)
    id_names: tuple[str, ...] = DEFAULT_ID_NAMES
    impute: ImputeMethod | None = field(default_factory=ImputeMethod)
    select: SelectMethod = field(default_factory=SelectMethod)
    seed: int = 0

    @classmethod
    def all_off(cls, **overrides) -> PreprocessConfig:
        base = dict(
            remove_duplicates=False,
            remove_id_like=False,
            remove_static=False,
            remove_sparse=False,
            remove_corrupted_rows=False,
            remove_correlated=False,
        )
        base.update(overrides)
        return cls(**base)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["id_names"] = list(self.id_names)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> PreprocessConfig:
        doc = dict(doc)
        if "thresholds" in doc:
            doc["thresholds"] = CheckThresholds(**doc["thresholds"])
        if doc.get("impute") is not None:
            doc["impute"] = ImputeMethod(**doc["impute"])
        if "select" in doc:
            doc["select"] = SelectMethod(**doc["select"])
        if "id_names" in doc:
            doc["id_names"] = tuple(doc["id_names"])
        return cls(**doc)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class Action:
    stage: str  # "remove_rows" | "remove_columns" | "impute" | "select" | "labels"
    subject: str | int
    reason: str
    statistic: float | None = None

    def to_json(self) -> dict:
        return {"stage": self.stage, "subject": self.subject, "reason": self.reason, "statistic": self.statistic}


@dataclass
class PreprocessLog:
    actions: list[Action] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def add(self, stage: str, subject, reason: str, statistic: float | None = None) -> None:
        if isinstance(statistic, (np.floating, np.integer)):
            statistic = float(statistic)
        if isinstance(subject, np.integer):
            subject = int(subject)
        self.actions.append(Action(stage, subject, reason, statistic))

    def extend(self, other: PreprocessLog) -> None:
        self.actions.extend(other.actions)

    def removed_columns(self) -> list[str]:
        return [a.subject for a in self.actions if a.stage in ("remove_columns", "select")]

    def removed_rows(self) -> list[int]:
        return [a.subject for a in self.actions if a.stage == "remove_rows"]

    def replay(self, frame: Frame) -> Frame:
        """Apply the logged row and column removals to ``frame``."""
        drop_rows = set(self.removed_rows())
        keep = [i for i, rid in enumerate(frame.row_ids) if int(rid) not in drop_rows]
        return frame.take(keep).drop(self.removed_columns())

    def to_json(self) -> list[dict]:
        return [a.to_json() for a in self.actions]

    @classmethod
    def from_json(cls, doc: list[dict]) -> PreprocessLog:
        return cls([Action(d["stage"], d["subject"], d["reason"], d.get("statistic")) for d in doc])

    def to_text(self) -> str:
        if not self.actions:
            return "No preprocessing actions."
        lines = []
        for a in self.actions:
            stat = "" if a.statistic is None else f" ({a.statistic:.4g})"
            lines.append(f"- [{a.stage}] {a.subject}: {a.reason}{stat}")
        return "\n".join(lines)
