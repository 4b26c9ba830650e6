"""Assemble the seven-section training report."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import charts
from ..evaluation import (
    DEFAULT_REGISTRY,
    SPLITS,
    Leaderboard,
    auc_score,
    confusion_matrix,
    rank_models,
    roc_curve,
)
from ..explain import permutation_importance
from ..frame import TaskType
from ..persist import TrainOutput
from .document import Document, write_document

SECTION_TITLES = (
    "1. Dataset summary",
    "2. Data check",
    "3. Preprocessing",
    "4. Ranked models",
    "5. Model comparison",
    "6. Diagnostics",
    "7. Feature importance",
)
TABLE_METRICS = {
    TaskType.BINARY: ("accuracy", "auc", "f1", "balanced_accuracy"),
    TaskType.MULTICLASS: ("accuracy", "f1_macro", "f1_weighted"),
    TaskType.REGRESSION: ("rmse", "mae", "r2"),
}
DIAGNOSTIC_SPLIT = "valid"


class ReportError(OSError):
    pass


@dataclass(frozen=True)
class ReportSpec:
    path: str | Path = "report.md"
    format: str = "markdown"  # or "html"
    top_n: int = 10
    sort_metric: str | None = None  # defaults to the training output's metric
    split: str = "test"
    importance_repeats: int = 5

    def __post_init__(self) -> None:
        if self.top_n < 1:
            raise ValueError("top_n must be at least 1")
        if self.format not in ("markdown", "html"):
            raise ValueError("format must be 'markdown' or 'html'")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}")


def _num(v) -> str:
    return "" if v is None else f"{v:.4f}"


def ranked_board(output: TrainOutput, spec: ReportSpec) -> Leaderboard:
    metric = spec.sort_metric or output.sort_metric
    board = output.leaderboards[spec.split]
    if board.sort_metric == metric and board.split == spec.split:
        return board
    return rank_models(board.rows, metric, spec.split, registry=DEFAULT_REGISTRY)


def _dataset_section(doc: Document, out: TrainOutput) -> None:
    doc.heading(SECTION_TITLES[0])
    o, d = out.original, out.data
    items = [
        f"Target: {out.target} ({out.task.value})",
        f"Raw data: {o.n_rows} rows, {o.n_cols} columns",
        f"After preprocessing: {d.n_rows} rows, {d.n_cols} columns",
        "Split sizes (train/test/validation): "
        + "/".join(str(len(out.splits.indices(s))) for s in SPLITS)
        + (" (stratified)" if out.splits.stratified else ""),
        f"Seed: {out.seed}",
    ]
    if out.task.is_classification:
        col = d.column(out.target)
        counts = {lab: 0 for lab in out.labels}
        for t in col.text():
            counts[t] = counts.get(t, 0) + 1
        items.append("Class counts: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    doc.bullets(items)
    header = ["column", "kind", "missing", "summary"]
    rows = []
    for name in o.names:
        col = o.column(name)
        if col.kind.value == "numeric":
            vals = col.present()
            summ = (
                f"mean {vals.mean():.4g}, sd {vals.std():.4g}, range [{vals.min():.4g}, {vals.max():.4g}]"
                if len(vals)
                else "empty"
            )
        else:
            levels = col.levels()
            summ = f"{len(levels)} levels: " + ", ".join(levels[:6]) + (", ..." if len(levels) > 6 else "")
        rows.append([name, col.kind.value, str(col.n_missing), summ])
    doc.table(header, rows)


def _check_section(doc: Document, out: TrainOutput) -> None:
    doc.heading(SECTION_TITLES[1])
    if out.check is None:
        doc.para("No data check was recorded for this run.")
        return
    if not out.check.issues:
        doc.para("No issues found.")
        return
    rows = [
        [i.severity, i.kind.value, ", ".join(str(s) for s in i.subjects[:8]) + (" ..." if len(i.subjects) > 8 else ""), i.detail]
        for i in out.check.issues
    ]
    doc.table(["severity", "issue", "subjects", "detail"], rows)


def _preprocess_section(doc: Document, out: TrainOutput) -> None:
    doc.heading(SECTION_TITLES[2])
    if not out.log.actions:
        doc.para("No preprocessing actions were needed.")
        return
    rows = [[a.stage, str(a.subject), a.reason] for a in out.log.actions]
    doc.table(["stage", "subject", "reason"], rows)


def _ranked_section(doc: Document, out: TrainOutput, board: Leaderboard, spec: ReportSpec) -> list[str]:
    doc.heading(SECTION_TITLES[3])
    shown = board.rows[: min(spec.top_n, len(board.rows))]
    direction = "higher is better" if board.higher_is_better else "lower is better"
    doc.para(
        f"Top {len(shown)} of {len(board.rows)} models, sorted by {board.sort_metric} on the "
        f"{board.split} split ({direction}). The validation split was not used for training or tuning."
    )
    metrics = list(dict.fromkeys((board.sort_metric,) + TABLE_METRICS[out.task]))
    header = ["rank", "model", "engine", "origin"] + [f"{m} ({s})" for m in metrics for s in ("test", "valid")]
    rows = []
    for i, r in enumerate(shown, 1):
        rows.append([str(i), r.model, r.engine, r.origin] + [_num(r.get(m, s)) for m in metrics for s in ("test", "valid")])
    doc.table(header, rows)
    doc.para(f"Best model: {shown[0].model}")
    return [r.model for r in shown]


def _comparison_section(doc: Document, out: TrainOutput, board: Leaderboard, names: list[str]) -> None:
    doc.heading(SECTION_TITLES[4])
    metric = board.sort_metric
    by_name = {r.model: r for r in board.rows}
    series = {s: [by_name[n].get(metric, s) for n in names] for s in SPLITS}
    svg = charts.grouped_bar_chart(names, series, f"{metric} by evaluation split", metric)
    doc.figure("comparison", svg, f"{metric} of the ranked models on the train, test and validation splits")


def _diagnostics_section(doc: Document, out: TrainOutput, best: str) -> None:
    doc.heading(SECTION_TITLES[5])
    split = DIAGNOSTIC_SPLIT
    view = out.split_frame(split)
    model = out.models[best]
    truths = model.recipe.encode_target(view)
    pred = out.predictions[(best, split)]
    if out.task is TaskType.BINARY:
        doc.subheading("ROC curve")
        fpr, tpr = roc_curve(truths, pred[:, 1])
        auc = auc_score(truths, pred[:, 1])
        auc_txt = "undefined" if auc is None else f"{auc:.4f}"
        svg = charts.line_chart(
            fpr, {"ROC": tpr}, f"ROC, {best} (AUC {auc_txt})", "false positive rate", "true positive rate",
            diagonal=True, xlim=(0, 1), ylim=(0, 1),
        )
        doc.figure("roc", svg, f"ROC curve of {best} on the validation split, AUC {auc_txt}")
    if out.task.is_classification:
        doc.subheading("Confusion matrix")
        cm = confusion_matrix(truths, np.argmax(pred, axis=1), len(out.labels))
        svg = charts.heatmap(cm, out.labels, f"Confusion matrix, {best}", "predicted", "true")
        doc.figure("confusion", svg, f"Confusion matrix of {best} on the validation split (rows: true class)")
        doc.table(["true \\ predicted"] + out.labels, [[lab] + [str(int(v)) for v in row] for lab, row in zip(out.labels, cm)])
    else:
        doc.subheading("Predicted versus true")
        svg = charts.scatter_chart(truths, pred, f"Predicted vs true, {best}", "true", "predicted")
        doc.figure("scatter", svg, f"Predicted against true values of {best} on the validation split")


def _importance_section(doc: Document, out: TrainOutput, best: str, spec: ReportSpec) -> None:
    doc.heading(SECTION_TITLES[6])
    model = out.models[best]
    view = out.split_frame(DIAGNOSTIC_SPLIT)
    metric = "rmse" if out.task is TaskType.REGRESSION else "accuracy"
    result = permutation_importance(model, view, metric, spec.importance_repeats, out.seed)
    doc.para(
        f"Permutation importance of {best} on the validation split: mean drop in {metric} over "
        f"{spec.importance_repeats} shuffles of each feature."
    )
    doc.figure("importance", result.to_svg(f"Permutation importance, {best}"), f"Feature importance of {best}")
    doc.table(
        ["feature", "importance", "std"],
        [[f, f"{v:+.4f}", f"{result.std[f]:.4f}"] for f, v in result.ranked()],
    )


def build_report(output: TrainOutput, spec: ReportSpec | None = None) -> Document:
    spec = spec or ReportSpec()
    if not output.models:
        raise ValueError("the training output has no models")
    board = ranked_board(output, spec)
    doc = Document(f"Training report: {output.target}")
    _dataset_section(doc, output)
    _check_section(doc, output)
    _preprocess_section(doc, output)
    names = _ranked_section(doc, output, board, spec)
    _comparison_section(doc, output, board, names)
    _diagnostics_section(doc, output, names[0])
    _importance_section(doc, output, names[0], spec)
    return doc


def generate_report(output: TrainOutput, spec: ReportSpec | None = None) -> Path:
    spec = spec or ReportSpec()
    doc = build_report(output, spec)
    try:
        return write_document(doc, spec.path, "html" if spec.format == "html" else "markdown")
    except OSError as exc:
        raise ReportError(f"cannot write report to {spec.path}: {exc.strerror or exc}") from exc


__all__ = [
    "ReportError",
    "ReportSpec",
    "SECTION_TITLES",
    "build_report",
    "generate_report",
    "ranked_board",
]
