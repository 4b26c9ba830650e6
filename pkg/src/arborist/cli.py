"""Command-line interface: check, preprocess, train, report, explain, select.

Exit codes: 0 success, 2 usage error, 3 data error, 4 file error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .data_check import CheckThresholds, check_data
from .engines import EngineKind, ParamError
from .evaluation import MetricError
from .frame import FrameError, write_csv
from .persist import BUNDLE_SUFFIX, BundleError, load_output, save_output, select_models
from .preprocess import (
    IMPUTE_KINDS,
    SELECT_KINDS,
    ImputeMethod,
    PreprocessConfig,
    SelectMethod,
    custom_preprocessing,
)
from .tuning import SpaceError, TuningConfig, load_spaces
from .workflow import load_dataset, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 2, 3, 4
ENGINE_NAMES = [e.value for e in EngineKind]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Every setting of a run; loadable from JSON, overridable by flags."""

    data: str = ""
    target: str = ""
    engines: list[str] = field(default_factory=lambda: list(ENGINE_NAMES))
    defaults: bool = True
    random_n: int = 10
    bayes_budget: int = 20
    init_points: int = 8
    metric: str | None = None
    seed: int = 0
    ratios: list[float] = field(default_factory=lambda: [0.6, 0.2, 0.2])
    k: float = 0.99
    l: float = 0.5
    m: float = 0.5
    n: float = 0.7
    preprocess: str = "basic"  # or "custom"
    remove_correlated: bool = False
    impute: str = "median_frequency"
    k_neighbors: int = 5
    mice_iterations: int = 5
    select: str = "none"
    top_k: int = 10
    spaces: str | None = None  # JSON file overriding parameter spaces
    out: str = "run" + BUNDLE_SUFFIX
    report: str | None = None
    threads: int = 1
    timing: bool = False

    @classmethod
    def from_sources(cls, file_doc: dict, flags: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(file_doc) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        merged = {**file_doc, **{k: v for k, v in flags.items() if k in known}}
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.data:
            raise UsageError("--data is required")
        if not self.target:
            raise UsageError("--target is required")
        bad = [e for e in self.engines if e not in ENGINE_NAMES]
        if bad or not self.engines:
            raise UsageError(f"invalid engine(s) {bad}; valid engines: {', '.join(ENGINE_NAMES)}")
        if self.preprocess not in ("basic", "custom"):
            raise UsageError("--preprocess must be 'basic' or 'custom'")
        try:
            self.tuning_config()
            self.preprocess_config()
            self.thresholds()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if len(self.ratios) != 3:
            raise UsageError("--ratios needs three fractions")
        if self.threads < 1:
            raise UsageError("--threads must be at least 1")

    def thresholds(self) -> CheckThresholds:
        return CheckThresholds(self.k, self.l, self.m, self.n)

    def tuning_config(self) -> TuningConfig:
        return TuningConfig(self.defaults, self.random_n, self.bayes_budget, self.init_points)

    def preprocess_config(self) -> PreprocessConfig | None:
        if self.preprocess == "basic":
            return None
        impute = ImputeMethod(self.impute, k_neighbors=self.k_neighbors, iterations=self.mice_iterations)
        return PreprocessConfig(
            remove_correlated=self.remove_correlated,
            thresholds=self.thresholds(),
            impute=impute,
            select=SelectMethod(self.select, top_k=self.top_k),
            seed=self.seed,
        )

    def to_json(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------- parser


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--k", type=float, default=S, help="static column: modal share threshold (default 0.99)")
    p.add_argument("--l", type=float, default=S, help="sparse column: minimum present share (default 0.5)")
    p.add_argument("--m", type=float, default=S, help="corrupted row: minimum present share (default 0.5)")
    p.add_argument("--n", type=float, default=S, help="correlation threshold (default 0.7)")


def _add_preprocess(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--remove-correlated", dest="remove_correlated", action="store_true", default=S,
                   help="drop features until no pair reaches the correlation threshold --n")
    p.add_argument("--impute", choices=IMPUTE_KINDS, default=S, help="imputation method (default median_frequency)")
    p.add_argument("--k-neighbors", dest="k_neighbors", type=int, default=S, help="neighbours for knn imputation (default 5)")
    p.add_argument("--mice-iterations", dest="mice_iterations", type=int, default=S, help="sweeps for mice imputation (default 5)")
    p.add_argument("--select", choices=SELECT_KINDS, default=S, help="feature selection method (default none)")
    p.add_argument("--top-k", dest="top_k", type=int, default=S, help="features kept by mutual_info and mcfs (default 10)")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="arborist", description="Tree-model AutoML for tabular data.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the data quality check")
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--target", required=True, help="target column")
    _add_thresholds(p)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--out", help="also write the JSON report to this file")

    p = sub.add_parser("preprocess", help="run custom preprocessing and write the result as CSV")
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--target", required=True, help="target column")
    p.add_argument("--config", help="JSON run config supplying any of the options below")
    _add_thresholds(p)
    _add_preprocess(p)
    p.add_argument("--seed", type=int, default=S, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--log", help="write the preprocessing log as JSON to this file")
    p.add_argument("--json", action="store_true", help="print the log as JSON")

    p = sub.add_parser("train", help="check, preprocess, train and rank models, save a bundle")
    p.add_argument("--config", help="JSON run config; flags given on the command line win")
    p.add_argument("--data", default=S, help="CSV file")
    p.add_argument("--target", default=S, help="target column")
    p.add_argument("--engines", type=_csv_list, default=S, help=f"comma-separated subset of {','.join(ENGINE_NAMES)}")
    p.add_argument("--no-defaults", dest="defaults", action="store_false", default=S, help="skip default-parameter models")
    p.add_argument("--random-n", dest="random_n", type=int, default=S, help="random-search candidates per engine (default 10)")
    p.add_argument("--bayes-budget", dest="bayes_budget", type=int, default=S, help="Bayesian optimization evaluations per engine, 0 to skip (default 20)")
    p.add_argument("--init-points", dest="init_points", type=int, default=S, help="initial design size for Bayesian optimization (default 8)")
    p.add_argument("--metric", default=S, help="sort and tuning metric (default accuracy, or rmse for regression)")
    p.add_argument("--seed", type=int, default=S, help="random seed (default 0)")
    p.add_argument("--ratios", type=_float_list, default=S, help="train,test,validation fractions (default 0.6,0.2,0.2)")
    p.add_argument("--preprocess", choices=("basic", "custom"), default=S, help="preprocessing mode (default basic)")
    _add_thresholds(p)
    _add_preprocess(p)
    p.add_argument("--spaces", default=S, help="JSON file overriding the parameter spaces")
    p.add_argument("--out", default=S, help=f"bundle path (default run{BUNDLE_SUFFIX})")
    p.add_argument("--report", default=S, help="also write a report (.md or .html)")
    p.add_argument("--threads", type=int, default=S, help="worker threads for forests (default 1)")
    p.add_argument("--timing", action="store_true", default=S, help="store fit times (makes bundles differ between runs)")
    p.add_argument("--top", type=int, default=10, help="leaderboard rows to print (default 10)")
    p.add_argument("--json", action="store_true", help="print the leaderboard as JSON")

    p = sub.add_parser("report", help="write a training report from a bundle")
    p.add_argument("--bundle", required=True, help="bundle written by train")
    p.add_argument("--out", required=True, help="report path (.md or .html)")
    p.add_argument("--format", choices=("markdown", "html"), help="output format (default from the file suffix)")
    p.add_argument("--top-n", dest="top_n", type=int, default=10, help="models in the ranked list (default 10)")
    p.add_argument("--metric", help="sort metric (default: the training metric)")
    p.add_argument("--split", choices=("train", "test", "valid"), default="test", help="split to sort on (default test)")

    p = sub.add_parser("explain", help="permutation importance or partial dependence for a model")
    p.add_argument("--bundle", required=True, help="bundle written by train")
    p.add_argument("--model", default="best", help="model name, or 'best' for the top of the leaderboard")
    p.add_argument("--feature", help="feature for a partial dependence profile; omit for importance")
    p.add_argument("--split", choices=("train", "test", "valid"), default="valid", help="rows to explain on (default valid)")
    p.add_argument("--metric", help="importance metric (default accuracy, or rmse for regression)")
    p.add_argument("--repeats", type=int, default=5, help="shuffles per feature (default 5)")
    p.add_argument("--grid-size", dest="grid_size", type=int, default=20, help="partial dependence grid points (default 20)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--svg", help="also write the chart to this SVG file")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("select", help="keep a subset of models in a bundle")
    p.add_argument("--bundle", required=True, help="bundle written by train")
    p.add_argument("--models", type=_csv_list, required=True, help="comma-separated model names")
    p.add_argument("--out", required=True, help="path of the new bundle")
    return parser


# --------------------------------------------------------------- commands


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return doc


def _flags(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose", "json", "top")}


def cmd_check(args) -> int:
    try:
        thresholds = CheckThresholds(
            getattr(args, "k", 0.99), getattr(args, "l", 0.5), getattr(args, "m", 0.5), getattr(args, "n", 0.7)
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    frame = load_dataset(args.data, args.target)
    report = check_data(frame, args.target, thresholds)
    if args.out:
        Path(args.out).write_text(report.dumps() + "\n", encoding="utf-8")
    print(report.dumps() if args.json else report.to_text())
    return EXIT_OK


def cmd_preprocess(args) -> int:
    doc = _load_config_file(args.config)
    flags = {k: v for k, v in _flags(args).items() if k not in ("out", "log")}
    cfg = RunConfig.from_sources({**doc, "preprocess": "custom"}, flags)
    frame = load_dataset(cfg.data, cfg.target)
    data, plog = custom_preprocessing(frame, cfg.target, cfg.preprocess_config())
    write_csv(data, args.out)
    if args.log:
        Path(args.log).write_text(json.dumps(plog.to_json(), indent=2) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps(plog.to_json(), indent=2))
    else:
        print(plog.to_text())
        print(f"wrote {data.n_rows} rows x {data.n_cols} columns to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = RunConfig.from_sources(_load_config_file(args.config), _flags(args))
    spaces = None
    if cfg.spaces:
        try:
            spaces = load_spaces(Path(cfg.spaces).read_text(encoding="utf-8"))
        except (SpaceError, json.JSONDecodeError) as exc:
            raise UsageError(f"invalid parameter spaces: {exc}") from None
    frame = load_dataset(cfg.data, cfg.target)
    output = train(
        frame,
        cfg.target,
        engines=[EngineKind(e) for e in cfg.engines],
        tuning=cfg.tuning_config(),
        metric=cfg.metric,
        seed=cfg.seed,
        preprocess=cfg.preprocess_config(),
        ratios=cfg.ratios,
        thresholds=cfg.thresholds(),
        spaces=spaces,
        threads=cfg.threads,
        record_timing=cfg.timing,
        # destinations are left out so a run is reproducible wherever it is saved
        config={k: v for k, v in cfg.to_json().items() if k not in ("out", "report")},
    )
    save_output(output, cfg.out)
    if cfg.report:
        from .report import ReportSpec, generate_report

        fmt = "html" if cfg.report.endswith((".html", ".htm")) else "markdown"
        generate_report(output, ReportSpec(cfg.report, fmt))
    board = output.leaderboard("test")
    if args.json:
        print(json.dumps(board.to_json(), indent=1))
    else:
        print(board.to_text(splits=("test", "valid"), top=args.top))
        print(f"saved {len(output.models)} models to {cfg.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import ReportSpec, generate_report

    output = load_output(args.bundle)
    fmt = args.format or ("html" if args.out.endswith((".html", ".htm")) else "markdown")
    try:
        spec = ReportSpec(args.out, fmt, args.top_n, args.metric, args.split)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    path = generate_report(output, spec)
    print(f"wrote report to {path}")
    return EXIT_OK


def cmd_explain(args) -> int:
    from .explain import importance_text, partial_dependence, permutation_importance

    output = load_output(args.bundle)
    name = output.leaderboard("test").best().model if args.model == "best" else args.model
    if name not in output.models:
        raise FrameError(f"unknown model {name!r}; available: {', '.join(output.models)}")
    model = output.models[name]
    view = output.split_frame(args.split)
    if args.feature:
        result = partial_dependence(model, view, args.feature, args.grid_size)
        text = "\n".join(
            [f"Partial dependence of {name} on {args.feature}"]
            + [f"  {g}: " + ", ".join(f"{k}={v[i]:.4f}" for k, v in result.values.items()) for i, g in enumerate(result.grid)]
        )
    else:
        result = permutation_importance(model, view, args.metric, args.repeats, args.seed)
        text = f"Model: {name}\n" + importance_text(result)
    if args.svg:
        Path(args.svg).write_text(result.to_svg(), encoding="utf-8")
    print(json.dumps({"model": name, **result.to_json()}, indent=2) if args.json else text)
    return EXIT_OK


def cmd_select(args) -> int:
    output = load_output(args.bundle)
    try:
        subset = select_models(output, args.models)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    save_output(subset, args.out)
    print(f"kept {len(subset.models)} of {len(output.models)} models; wrote {args.out}")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "report": cmd_report,
    "explain": cmd_explain,
    "select": cmd_select,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"arborist {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BundleError, OSError) as exc:
        print(f"arborist {args.command}: file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FrameError, MetricError, ParamError, ValueError, KeyError) as exc:
        print(f"arborist {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
