"""The training output container and its single-file bundle format.

A bundle is a zip archive whose entries are written in sorted order with a
fixed timestamp, so saving the same output twice gives identical bytes.
``manifest.json`` lists every other entry with its SHA-256 digest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data_check import DataCheckReport
from .engines import TrainedModel
from .evaluation import SPLITS, Leaderboard, LeaderboardRow, rank_models
from .frame import Column, ColumnKind, Frame, SplitSet, TaskType
from .preprocess import PreprocessLog

SCHEMA_VERSION = 1
BUNDLE_FORMAT = "arborist-bundle"
BUNDLE_SUFFIX = ".arborist-bundle"
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


class BundleError(OSError):
    pass


@dataclass
class TrainOutput:
    target: str
    task: TaskType
    labels: list[str]
    original: Frame
    data: Frame  # preprocessed; split indices refer to its rows
    splits: SplitSet
    check: DataCheckReport | None
    log: PreprocessLog
    models: dict[str, TrainedModel]
    model_info: dict[str, dict]  # name -> {engine, origin, params, objective_value}
    predictions: dict[tuple[str, str], np.ndarray]
    leaderboards: dict[str, Leaderboard]
    metrics: list[dict]
    seed: int
    sort_metric: str
    timing: dict[str, float] = field(default_factory=dict)
    tuning: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def model_names(self) -> list[str]:
        return list(self.models)

    def split_frame(self, split: str) -> Frame:
        return self.data.take(self.splits.indices(split))

    def leaderboard(self, split: str = "test") -> Leaderboard:
        return self.leaderboards[split]

    def best_model(self, split: str = "test") -> TrainedModel:
        return self.models[self.leaderboards[split].best().model]

    def validate(self) -> None:
        for split, board in self.leaderboards.items():
            for name in board.names:
                if name not in self.models:
                    raise BundleError(f"leaderboard {split} names unknown model {name!r}")
        for (name, split), pred in self.predictions.items():
            if len(pred) != len(self.splits.indices(split)):
                raise BundleError(f"predictions for {name}/{split} do not match the split size")


# ------------------------------------------------------------------ tables


def _fmt(v: float) -> str:
    return repr(float(v))


def _frame_csv(frame: Frame) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row_id"] + frame.names)
    cols = frame.columns()
    cells = []
    for c in cols:
        if c.kind is ColumnKind.NUMERIC:
            cells.append(["" if m else _fmt(v) for v, m in zip(c.values, c.missing)])
        else:
            cells.append(["" if m else str(v) for v, m in zip(c.values, c.missing)])
    for i in range(frame.n_rows):
        w.writerow([str(int(frame.row_ids[i]))] + [col[i] for col in cells])
    return buf.getvalue()


def _frame_schema(frame: Frame) -> dict:
    return {"target": frame.target, "columns": [[n, frame.kind(n).value] for n in frame.names]}


def _read_frame(text: str, schema: dict) -> Frame:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    names = [n for n, _ in schema["columns"]]
    if header[1:] != names:
        raise BundleError("frame table does not match its schema")
    row_ids = np.array([int(r[0]) for r in body], dtype=np.int64)
    cols = []
    for j, (name, kind) in enumerate(schema["columns"], start=1):
        cells = [r[j] for r in body]
        missing = np.array([c == "" for c in cells], dtype=bool)
        if kind == ColumnKind.NUMERIC.value:
            values = np.array([np.nan if c == "" else float(c) for c in cells], dtype=float)
            cols.append(Column(name, ColumnKind.NUMERIC, values, missing))
        else:
            values = np.array([None if c == "" else c for c in cells], dtype=object)
            cols.append(Column(name, ColumnKind.CATEGORICAL, values, missing))
    return Frame(cols, schema["target"], row_ids)


def _prediction_csv(pred: np.ndarray, row_ids: np.ndarray, labels: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if pred.ndim == 1:
        w.writerow(["row_id", "prediction"])
        for rid, v in zip(row_ids, pred):
            w.writerow([int(rid), _fmt(v)])
    else:
        w.writerow(["row_id"] + [f"p_{lab}" for lab in labels])
        for rid, row in zip(row_ids, pred):
            w.writerow([int(rid)] + [_fmt(v) for v in row])
    return buf.getvalue()


def _read_prediction(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    body = np.array([[float(c) for c in r[1:]] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, -1)
    return body[:, 0] if rows[0][1:] == ["prediction"] else body


def _read_leaderboard(text: str, meta: dict) -> Leaderboard:
    rows = list(csv.reader(io.StringIO(text)))
    keys = [tuple(h.rsplit("@", 1)) for h in rows[0][3:]]
    out = []
    for r in rows[1:]:
        values = {k: (None if c == "" else float(c)) for k, c in zip(keys, r[3:])}
        out.append(LeaderboardRow(r[0], r[1], r[2], values))
    return Leaderboard(out, meta["sort_metric"], meta["split"], meta["higher_is_better"])


# ------------------------------------------------------------- save / load


def _json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _entries(output: TrainOutput) -> dict[str, str]:
    e: dict[str, str] = {
        "data/original.csv": _frame_csv(output.original),
        "data/preprocessed.csv": _frame_csv(output.data),
        "splits.json": _json(output.splits.to_json()),
        "preprocess_log.json": _json(output.log.to_json()),
        "tuning.json": _json(output.tuning),
    }
    if output.check is not None:
        e["check.json"] = _json(output.check.to_json())
    for name, model in output.models.items():
        e[f"models/{name}.json"] = model.dumps() + "\n"
    for (name, split), pred in output.predictions.items():
        rows = output.data.row_ids[output.splits.indices(split)]
        e[f"predictions/{name}/{split}.csv"] = _prediction_csv(pred, rows, output.labels)
    for split, board in output.leaderboards.items():
        e[f"leaderboards/{split}.csv"] = board.to_csv()
    return e


def _manifest(output: TrainOutput, entries: dict[str, str]) -> dict:
    return {
        "format": BUNDLE_FORMAT,
        "schema_version": output.schema_version,
        "seed": output.seed,
        "target": output.target,
        "task": output.task.value,
        "labels": output.labels,
        "sort_metric": output.sort_metric,
        "models": list(output.models),
        "model_info": output.model_info,
        "prediction_keys": [[n, s] for n, s in output.predictions],
        "leaderboards": {
            s: {"sort_metric": b.sort_metric, "split": b.split, "higher_is_better": b.higher_is_better}
            for s, b in output.leaderboards.items()
        },
        "frames": {"original": _frame_schema(output.original), "preprocessed": _frame_schema(output.data)},
        "metrics": output.metrics,
        "timing": output.timing,
        "config": output.config,
        "inventory": {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(entries.items())},
    }


def bundle_bytes(output: TrainOutput) -> bytes:
    entries = _entries(output)
    entries["manifest.json"] = _json(_manifest(output, entries))
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for name in sorted(entries):
            info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            info.create_system = 3
            zf.writestr(info, entries[name].encode("utf-8"))
    return buf.getvalue()


def save_output(output: TrainOutput, path: str | Path) -> Path:
    path = Path(path)
    data = bundle_bytes(output)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise BundleError(f"cannot write bundle to {path}: {exc.strerror or exc}") from exc
    return path


def load_output(path: str | Path) -> TrainOutput:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise BundleError(f"cannot read bundle {path}: {exc.strerror or exc}") from exc
    try:
        with zipfile.ZipFile(io.BytesIO(raw)) as zf:
            entries = {n: zf.read(n).decode("utf-8") for n in zf.namelist()}
    except (zipfile.BadZipFile, EOFError, zipfile.LargeZipFile, ValueError) as exc:
        raise BundleError(f"{path} is not a readable bundle: {exc}") from exc
    if "manifest.json" not in entries:
        raise BundleError(f"{path} has no manifest")
    m = json.loads(entries.pop("manifest.json"))
    if m.get("format") != BUNDLE_FORMAT:
        raise BundleError(f"{path} is not an {BUNDLE_FORMAT}")
    if m.get("schema_version") != SCHEMA_VERSION:
        raise BundleError(
            f"unsupported bundle schema_version {m.get('schema_version')!r}; this version reads {SCHEMA_VERSION}"
        )
    inventory = m["inventory"]
    if sorted(inventory) != sorted(entries):
        raise BundleError(f"{path}: archive entries do not match the manifest inventory")
    for name, digest in inventory.items():
        if hashlib.sha256(entries[name].encode()).hexdigest() != digest:
            raise BundleError(f"{path}: checksum mismatch for {name}")

    labels = list(m["labels"])
    splits = SplitSet.from_json(json.loads(entries["splits.json"]))
    models = {}
    for name in m["models"]:
        model = TrainedModel.from_json(json.loads(entries[f"models/{name}.json"]))
        models[name] = model
    predictions = {
        (n, s): _read_prediction(entries[f"predictions/{n}/{s}.csv"]) for n, s in m["prediction_keys"]
    }
    leaderboards = {
        s: _read_leaderboard(entries[f"leaderboards/{s}.csv"], meta) for s, meta in m["leaderboards"].items()
    }
    check = DataCheckReport.from_json(json.loads(entries["check.json"])) if "check.json" in entries else None
    output = TrainOutput(
        target=m["target"],
        task=TaskType(m["task"]),
        labels=labels,
        original=_read_frame(entries["data/original.csv"], m["frames"]["original"]),
        data=_read_frame(entries["data/preprocessed.csv"], m["frames"]["preprocessed"]),
        splits=splits,
        check=check,
        log=PreprocessLog.from_json(json.loads(entries["preprocess_log.json"])),
        models=models,
        model_info=m["model_info"],
        predictions=predictions,
        leaderboards=leaderboards,
        metrics=m["metrics"],
        seed=m["seed"],
        sort_metric=m["sort_metric"],
        timing=m["timing"],
        tuning=json.loads(entries["tuning.json"]),
        config=m["config"],
        schema_version=m["schema_version"],
    )
    output.validate()
    return output


def select_models(output: TrainOutput, names) -> TrainOutput:
    """Keep only ``names``; shared artifacts are retained and leaderboards
    re-sorted."""
    names = list(dict.fromkeys(names))
    if not names:
        raise ValueError("select at least one model")
    unknown = [n for n in names if n not in output.models]
    if unknown:
        raise KeyError(f"unknown model(s): {', '.join(unknown)}; available: {', '.join(output.models)}")
    keep = set(names)
    boards = {}
    for split, board in output.leaderboards.items():
        rows = [r for r in board.rows if r.model in keep]
        boards[split] = rank_models(rows, board.sort_metric, board.split, board.higher_is_better)
    return replace(
        output,
        models={n: m for n, m in output.models.items() if n in keep},
        model_info={n: v for n, v in output.model_info.items() if n in keep},
        predictions={k: v for k, v in output.predictions.items() if k[0] in keep},
        leaderboards=boards,
        timing={n: v for n, v in output.timing.items() if n in keep},
    )


def outputs_equal(a: TrainOutput, b: TrainOutput) -> bool:
    """Structural equality used by the round-trip tests."""
    return bundle_bytes(a) == bundle_bytes(b)


__all__ = [
    "BUNDLE_SUFFIX",
    "BundleError",
    "SCHEMA_VERSION",
    "SPLITS",
    "TrainOutput",
    "bundle_bytes",
    "load_output",
    "outputs_equal",
    "save_output",
    "select_models",
]
