"""Typed column-oriented tables, CSV ingestion, task detection and splitting."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_MISSING_MARKERS = ("", "na", "nan", "null")
DEFAULT_RATIOS = (0.6, 0.2, 0.2)
MULTICLASS_LIMIT = 20


class FrameError(ValueError):
    """Raised for malformed tabular input or schema violations."""


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class TaskType(str, Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"
    REGRESSION = "regression"

    @property
    def is_classification(self) -> bool:
        return self is not TaskType.REGRESSION


def format_number(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _parse_float(text: str) -> float | None:
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True, eq=False)
class Column:
    """One named column.

    Numeric columns hold float64 values (NaN where missing); categorical
    columns hold an object array of ``str`` (``None`` where missing).
    """

    name: str
    kind: ColumnKind
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self) -> None:
        if len(self.values) != len(self.missing):
            raise FrameError(f"column {self.name!r}: values and mask lengths differ")
        self.values.setflags(write=False)
        self.missing.setflags(write=False)

    @classmethod
    def numeric(cls, name: str, values: Iterable, missing: Iterable | None = None) -> Column:
        arr = np.array([np.nan if v is None else v for v in values], dtype=float)
        mask = np.isnan(arr) if missing is None else np.asarray(missing, dtype=bool) | np.isnan(arr)
        arr = arr.copy()
        arr[mask] = np.nan
        if not np.all(np.isfinite(arr[~mask])):
            raise FrameError(f"column {name!r}: non-finite numeric cell")
        return cls(name, ColumnKind.NUMERIC, arr, mask)

    @classmethod
    def categorical(cls, name: str, values: Iterable, missing: Iterable | None = None) -> Column:
        raw = list(values)
        mask = np.array([v is None for v in raw], dtype=bool)
        if missing is not None:
            mask |= np.asarray(missing, dtype=bool)
        arr = np.empty(len(raw), dtype=object)
        for i, v in enumerate(raw):
            arr[i] = None if mask[i] else str(v)
        return cls(name, ColumnKind.CATEGORICAL, arr, mask)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())

    def present(self) -> np.ndarray:
        return self.values[~self.missing]

    def take(self, rows: np.ndarray) -> Column:
        return Column(self.name, self.kind, self.values[rows], self.missing[rows])

    def renamed(self, name: str) -> Column:
        return Column(name, self.kind, self.values, self.missing)

    def text(self) -> list[str | None]:
        """Cell values rendered as text, ``None`` for missing cells."""
        if self.kind is ColumnKind.NUMERIC:
            return [None if m else format_number(float(v)) for v, m in zip(self.values, self.missing)]
        return [None if m else v for v, m in zip(self.values, self.missing)]

    def levels(self) -> list[str]:
        """Sorted distinct non-missing levels (textual)."""
        return sorted({t for t in self.text() if t is not None})

    def equals(self, other: Column) -> bool:
        if self.kind is not other.kind or len(self) != len(other):
            return False
        if not np.array_equal(self.missing, other.missing):
            return False
        keep = ~self.missing
        if self.kind is ColumnKind.NUMERIC:
            return bool(np.array_equal(self.values[keep], other.values[keep]))
        return list(self.values[keep]) == list(other.values[keep])


# Row-access instrumentation. Frames report which original rows are read
# and in which phase; used to prove validation rows never reach tuning.
_access_phase: ContextVar[str] = ContextVar("arborist_access_phase", default="default")
_access_recorder: ContextVar["RowAccessRecorder | None"] = ContextVar(
    "arborist_access_recorder", default=None
)


class RowAccessRecorder:
    def __init__(self) -> None:
        self.rows_by_phase: dict[str, set[int]] = {}

    def record(self, row_ids: np.ndarray) -> None:
        bucket = self.rows_by_phase.setdefault(_access_phase.get(), set())
        bucket.update(int(r) for r in row_ids)

    def rows(self, phase: str) -> set[int]:
        return self.rows_by_phase.get(phase, set())


@contextmanager
def record_row_access() -> Iterator[RowAccessRecorder]:
    recorder = RowAccessRecorder()
    token = _access_recorder.set(recorder)
    try:
        yield recorder
    finally:
        _access_recorder.reset(token)


@contextmanager
def access_phase(name: str) -> Iterator[None]:
    token = _access_phase.set(name)
    try:
        yield
    finally:
        _access_phase.reset(token)


class Frame:
    """Immutable ordered collection of equal-length columns.

    ``row_ids`` tracks the position of every row in the frame it was
    derived from, so views keep their provenance.
    """

    def __init__(
        self,
        columns: Sequence[Column],
        target: str | None = None,
        row_ids: np.ndarray | None = None,
    ) -> None:
        names = [c.name for c in columns]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise FrameError(f"duplicate column names: {dupes}")
        lengths = {len(c) for c in columns}
        if len(lengths) > 1:
            raise FrameError("columns have different lengths")
        n_rows = lengths.pop() if lengths else (0 if row_ids is None else len(row_ids))
        if target is not None and target not in names:
            raise FrameError(f"target {target!r} is not a column")
        self._columns = {c.name: c for c in columns}
        self.target = target
        self.n_rows = n_rows
        ids = np.arange(n_rows) if row_ids is None else np.asarray(row_ids, dtype=np.int64)
        if len(ids) != n_rows:
            raise FrameError("row_ids length does not match n_rows")
        ids.setflags(write=False)
        self.row_ids = ids

    def __repr__(self) -> str:
        return f"Frame(n_rows={self.n_rows}, columns={self.names}, target={self.target!r})"

    @property
    def names(self) -> list[str]:
        return list(self._columns)

    @property
    def n_cols(self) -> int:
        return len(self._columns)

    @property
    def feature_names(self) -> list[str]:
        return [n for n in self._columns if n != self.target]

    def kind(self, name: str) -> ColumnKind:
        return self._get(name).kind

    def __contains__(self, name: object) -> bool:
        return name in self._columns

    def _get(self, name: str) -> Column:
        try:
            return self._columns[name]
        except KeyError:
            raise FrameError(f"unknown column {name!r}") from None

    def column(self, name: str) -> Column:
        col = self._get(name)
        recorder = _access_recorder.get()
        if recorder is not None:
            recorder.record(self.row_ids)
        return col

    __getitem__ = column

    def columns(self) -> list[Column]:
        return [self.column(n) for n in self._columns]

    def take(self, rows: Sequence[int] | np.ndarray) -> Frame:
        idx = np.asarray(rows, dtype=np.int64)
        cols = [c.take(idx) for c in self._columns.values()]
        return Frame(cols, self.target, self.row_ids[idx])

    def select(self, names: Sequence[str]) -> Frame:
        keep = list(names)
        if self.target is not None and self.target not in keep:
            keep.append(self.target)
        cols = [self._get(n) for n in self._columns if n in keep]
        return Frame(cols, self.target, self.row_ids)

    def drop(self, names: Iterable[str]) -> Frame:
        gone = set(names)
        if self.target in gone:
            raise FrameError("cannot drop the target column")
        cols = [c for n, c in self._columns.items() if n not in gone]
        return Frame(cols, self.target, self.row_ids)

    def with_columns(self, replacements: Iterable[Column]) -> Frame:
        cols = dict(self._columns)
        for c in replacements:
            cols[c.name] = c
        return Frame(list(cols.values()), self.target, self.row_ids)

    def with_target(self, target: str | None) -> Frame:
        return Frame(list(self._columns.values()), target, self.row_ids)

    def reset_row_ids(self) -> Frame:
        return Frame(list(self._columns.values()), self.target, None)

    def equals(self, other: Frame) -> bool:
        return (
            self.names == other.names
            and self.target == other.target
            and self.n_rows == other.n_rows
            and all(self._columns[n].equals(other._columns[n]) for n in self.names)
        )


# --------------------------------------------------------------------- CSV


def load_csv(
    path: str | Path,
    delimiter: str = ",",
    header: bool = True,
    missing_markers: Sequence[str] = DEFAULT_MISSING_MARKERS,
    target: str | None = None,
) -> Frame:
    """Read a CSV file into a frame whose columns are all text.

    Call :func:`infer_types` afterwards to obtain numeric columns.
    """
    markers = {m.lower() for m in missing_markers}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if header:
        if not rows:
            raise FrameError("empty file: no header row")
        names, body = rows[0], rows[1:]
        start = 2
    else:
        width = len(rows[0]) if rows else 0
        names, body = [f"V{i + 1}" for i in range(width)], rows
        start = 1
    seen: set[str] = set()
    for n in names:
        if n in seen:
            raise FrameError(f"duplicate header name {n!r}")
        seen.add(n)
    for offset, row in enumerate(body):
        if len(row) != len(names):
            raise FrameError(
                f"row {offset + start} has {len(row)} fields, expected {len(names)}"
            )
    columns = []
    for j, name in enumerate(names):
        cells = [row[j] for row in body]
        mask = [c.strip().lower() in markers for c in cells]
        columns.append(Column.categorical(name, cells, mask))
    return Frame(columns, target)


def write_csv(frame: Frame, path: str | Path, delimiter: str = ",") -> None:
    texts = [c.text() for c in frame.columns()]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(frame.names)
        for i in range(frame.n_rows):
            writer.writerow(["" if t[i] is None else t[i] for t in texts])


def infer_types(frame: Frame) -> Frame:
    """Numeric iff every non-missing cell parses as a finite real."""
    out = []
    for col in frame.columns():
        if col.kind is ColumnKind.NUMERIC:
            out.append(col)
            continue
        present = col.present()
        parsed = [_parse_float(v) for v in present]
        if len(present) == 0 or any(p is None for p in parsed):
            out.append(col)
            continue
        values = np.full(len(col), np.nan)
        values[~col.missing] = parsed
        out.append(Column(col.name, ColumnKind.NUMERIC, values, col.missing.copy()))
    return Frame(out, frame.target, frame.row_ids)


def frame_from_dict(data: dict[str, Sequence], target: str | None = None) -> Frame:
    """Build a frame from python sequences; types are inferred per column."""
    cols = []
    for name, values in data.items():
        vals = list(values)
        if all(v is None or (isinstance(v, (int, float, np.number)) and not isinstance(v, bool)) for v in vals):
            cols.append(Column.numeric(name, [np.nan if v is None else float(v) for v in vals]))
        else:
            cols.append(Column.categorical(name, vals))
    return Frame(cols, target)


# ----------------------------------------------------------- task detection


def normalize_label(text: str) -> str:
    return text.strip().casefold()


def label_set(frame: Frame, target: str) -> list[str]:
    """Distinct target labels in canonical (lexicographic) order."""
    return frame.column(target).levels()


def detect_task(frame: Frame, target: str, multiclass_limit: int = MULTICLASS_LIMIT) -> TaskType:
    col = frame.column(target)
    levels = col.levels()
    if len(levels) < 2:
        raise FrameError(f"degenerate target {target!r}: fewer than 2 distinct values")
    if len(levels) == 2:
        return TaskType.BINARY
    if len(levels) <= multiclass_limit:
        return TaskType.MULTICLASS
    if col.kind is ColumnKind.NUMERIC:
        return TaskType.REGRESSION
    raise FrameError(
        f"categorical target {target!r} has {len(levels)} levels, above the limit of {multiclass_limit}"
    )


# ---------------------------------------------------------------- splitting


@dataclass
class SplitSet:
    train: np.ndarray
    test: np.ndarray
    valid: np.ndarray
    seed: int
    ratios: tuple[float, float, float]
    stratified: bool = False
    warnings: list[str] = field(default_factory=list)

    def indices(self, split: str) -> np.ndarray:
        return {"train": self.train, "test": self.test, "valid": self.valid}[split]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "stratified": self.stratified,
            "train": [int(i) for i in self.train],
            "test": [int(i) for i in self.test],
            "valid": [int(i) for i in self.valid],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, doc: dict) -> SplitSet:
        return cls(
            train=np.array(doc["train"], dtype=np.int64),
            test=np.array(doc["test"], dtype=np.int64),
            valid=np.array(doc["valid"], dtype=np.int64),
            seed=int(doc["seed"]),
            ratios=tuple(doc["ratios"]),
            stratified=bool(doc.get("stratified", False)),
            warnings=list(doc.get("warnings", [])),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _allocate(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    n_train = int(round(ratios[0] * n))
    n_test = int(round(ratios[1] * n))
    n_test = min(n_test, n - n_train)
    return n_train, n_test, n - n_train - n_test


def split_frame(
    frame: Frame,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
    stratify: bool | None = None,
    target: str | None = None,
) -> SplitSet:
    """Partition rows into train/test/validation index sets.

    Stratification defaults to on when the target is categorical or has
    few distinct values (classification) and off otherwise.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise FrameError(f"ratios must be three positive fractions summing to 1, got {ratios}")
    if frame.n_rows < 10:
        raise FrameError(f"need at least 10 rows to split, got {frame.n_rows}")
    target = target or frame.target
    rng = np.random.default_rng(seed)
    warnings: list[str] = []

    strata: list[np.ndarray] | None = None
    if target is not None:
        col = frame.column(target)
        is_class = col.kind is ColumnKind.CATEGORICAL or len(col.levels()) <= MULTICLASS_LIMIT
        if stratify is None:
            stratify = is_class
        if stratify:
            texts = np.array(["\0" if t is None else t for t in col.text()], dtype=object)
            strata = [np.flatnonzero(texts == lv) for lv in sorted(set(texts))]
            small = [len(s) for s in strata if len(s) < 3]
            if small:
                msg = "stratum smaller than 3 rows; falling back to unstratified split"
                logger.warning(msg)
                warnings.append(msg)
                strata = None
    if strata is None:
        stratify = False
        strata = [np.arange(frame.n_rows)]

    parts: list[list[np.ndarray]] = [[], [], []]
    for stratum in strata:
        perm = rng.permutation(stratum)
        a, b, _ = _allocate(len(perm), ratios)
        parts[0].append(perm[:a])
        parts[1].append(perm[a:a + b])
        parts[2].append(perm[a + b:])
    train, test, valid = (np.sort(np.concatenate(p)).astype(np.int64) for p in parts)
    return SplitSet(train, test, valid, seed, ratios, bool(stratify), warnings)


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def name_tokens(name: str) -> list[str]:
    """Lowercase alphanumeric tokens, splitting on camelCase boundaries too."""
    spaced = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", name)
    return _TOKEN_RE.findall(spaced.lower())
