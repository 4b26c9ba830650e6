"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time

import numpy as np
import pytest

from helpers import blobs, linear_regression, multiclass, with_missing
from oracles import binary_oracle, close, multiclass_oracle, regression_oracle

from arborist.data_check import check_data
from arborist.datasets import HEART_TARGET, load_heart
from arborist.engines import DEFAULT_PARAMS, EngineKind, fit_gbdt, fit_random_forest, fit_tree
from arborist.evaluation import binary_metrics, multiclass_metrics, regression_metrics
from arborist.frame import Column, Frame, frame_from_dict, record_row_access, split_frame
from arborist.persist import load_output, outputs_equal, save_output
from arborist.preprocess import ImputeMethod, boruta_history, impute, remove_correlated
from arborist.report import SECTION_TITLES, ReportSpec, build_report, generate_report
from arborist.stats import pearson_complete
from arborist.tuning import Dimension, ParamSpace, TuningConfig, bayes_opt, run_training
from arborist.workflow import train


@pytest.fixture
def verdict(capsys):
    def emit(name, checks, detail=""):
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        with capsys.disabled():
            line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
            print("\n" + line + (f" [failed: {', '.join(failed)}]" if failed else ""))
        assert ok, failed

    return emit


def row_of(out, name):
    return next(r for r in out.leaderboards["valid"].rows if r.model == name)


def test_metric_oracle(verdict):
    start = time.perf_counter()
    bad = 0
    for i in range(200):
        rng = np.random.default_rng(i)
        n = int(rng.integers(5, 80))
        kind = i % 3
        if kind == 0:
            y = rng.integers(0, 2, n)
            y[:2] = [0, 1]
            s = np.round(rng.random(n), int(rng.integers(1, 4)))
            ours, ref = binary_metrics(y, s), binary_oracle(y.tolist(), s.tolist())
        elif kind == 1:
            k = int(rng.integers(3, 7))
            y = rng.integers(0, k, n)
            p = rng.dirichlet(np.ones(k), n)
            ours, ref = multiclass_metrics(y, p), multiclass_oracle(y.tolist(), p.tolist())
        else:
            y = rng.normal(size=n)
            p = y + rng.normal(size=n)
            ours, ref = regression_metrics(y, p), regression_oracle(y.tolist(), p.tolist())
        bad += not all(close(ours[key], v, 1e-9) for key, v in ref.items())
    elapsed = time.perf_counter() - start
    verdict("metric oracle", {"agree": bad == 0, "runtime": elapsed < 10}, f"{200 - bad}/200 fixtures agree at 1e-9 in {elapsed:.1f}s")


def brute_force_gain(X, g, h, lam):
    best = -np.inf
    for j in range(X.shape[1]):
        for thr in np.unique(X[:, j])[:-1]:
            left = X[:, j] <= thr
            gl, hl, gr, hr = g[left].sum(), h[left].sum(), g[~left].sum(), h[~left].sum()
            G, H = gl + gr, hl + hr
            best = max(best, 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - G * G / (H + lam)))
    return best


def test_engine_equivalences(verdict):
    same = 0
    for seed in range(10):
        f = (multiclass, blobs, linear_regression)[seed % 3](seed=seed)
        p = len(f.names) - 1
        growth = DEFAULT_PARAMS[EngineKind.TREE]
        tree = fit_tree(f, "y")
        rf = fit_random_forest(f, "y", {**growth, "n_trees": 1, "sample_fraction": 1.0, "mtry": p}, seed=seed)
        same += np.array_equal(tree.predict(f), rf.predict(f))
    gain_err = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 51))
        X = rng.normal(size=(n, 3)).round(1)
        y = (X[:, 0] + rng.normal(size=n) > 0).astype(int)
        f = Frame([Column.numeric(f"x{j}", X[:, j]) for j in range(3)] + [Column.categorical("y", np.array(["a", "b"])[y])], "y")
        lam = float(rng.uniform(0.1, 3))
        m = fit_gbdt(f, "y", {"n_rounds": 1, "reg_lambda": lam, "min_child_weight": 0.0, "max_depth": 1})
        q = y.mean()
        gain_err = max(gain_err, abs(m.trees[0].gain[0] - brute_force_gain(X, q - y, np.full(n, q * (1 - q)), lam)))
    monotone = 0
    for seed in range(20):
        f = (blobs, multiclass, linear_regression)[seed % 3](seed=seed)
        m = fit_gbdt(f, "y", {"n_rounds": 15}, growth=("depthwise", "leafwise")[seed % 2])
        monotone += bool(np.all(np.diff(m.loss_history) <= 1e-12))
    verdict(
        "engine equivalences",
        {"rf_equals_tree": same == 10, "gain": gain_err <= 1e-9, "loss": monotone == 20},
        f"RF==tree {same}/10, max gain error {gain_err:.1e}, loss non-increasing {monotone}/20",
    )


def test_separable_floor(verdict):
    # Each class mean sits 3 sigma from the Bayes boundary: means 6 sigma apart.
    start = time.perf_counter()
    out = train(blobs(n=1000, p=5, margin=6.0, seed=0), "y", tuning=TuningConfig(random_n=0, bayes_budget=0), record_timing=False)
    elapsed = time.perf_counter() - start
    acc = {e.value: row_of(out, f"{e.value}_model").get("accuracy", "valid") for e in EngineKind}
    checks = {e: a >= 0.95 for e, a in acc.items()}
    checks["runtime"] = elapsed < 60
    verdict("separable-data floor", checks, ", ".join(f"{e}={a:.3f}" for e, a in acc.items()) + f" in {elapsed:.1f}s")


def test_tuning_improvement(verdict):
    fixtures = [blobs(n=150, margin=1.5, seed=s) if s % 2 == 0 else linear_regression(n=150, noise=1.0, seed=s) for s in range(5)]
    fails = 0
    for s, f in enumerate(fixtures):
        out = run_training(f, "y", split_frame(f, seed=s, target="y"), tuning=TuningConfig(random_n=0, bayes_budget=4, init_points=3), seed=s, record_timing=False)
        for e in EngineKind:
            fails += out.model_info[f"{e.value}_bayes"]["objective_value"] < out.model_info[f"{e.value}_model"]["objective_value"]
    toy = ParamSpace((Dimension("x", "real", 0.0, 1.0),))
    errs = []
    for s in range(10):
        best, _ = bayes_opt(EngineKind.TREE, toy, lambda c: -((c.params["x"] - 0.3) ** 2), budget=25, init_points=5, seed=s)
        errs.append(abs(best.params["x"] - 0.3))
    verdict(
        "tuning improvement",
        {"bayes_ge_default": fails == 0, "toy": max(errs) <= 0.05},
        f"bayes < default in {fails}/20 engine-fixtures, toy max |x-0.3| = {max(errs):.4f}",
    )


def correlated_linear(n, p, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n)
    cols = {f"x{j}": z * rng.uniform(0.5, 2.0) + 0.3 * rng.normal(size=n) for j in range(p)}
    cols["y"] = sum(cols.values()) + rng.normal(size=n)
    return frame_from_dict({k: v.tolist() for k, v in cols.items()}, "y")


def boruta_fixture(seed):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=200)
    d = {"x1": x1.tolist(), **{f"x{i}": rng.normal(size=200).tolist() for i in range(2, 6)}}
    d["y"] = ["a" if v > 0 else "b" for v in x1]
    return frame_from_dict(d, "y")


def test_preprocessing_properties(verdict):
    methods = [ImputeMethod.median_other(), ImputeMethod.median_frequency(), ImputeMethod.knn(5), ImputeMethod.mice(2)]
    cells = altered = 0
    seed = 0
    while cells < 100_000:
        f = with_missing(multiclass(n=1500, seed=seed), rate=0.2, seed=seed)
        out = impute(f, methods[seed % 4], seed=seed)
        for name in f.names:
            a, b = f.column(name), out.column(name)
            keep = ~a.missing
            cells += int(keep.sum())
            altered += int((a.values[keep] != b.values[keep]).sum())
        seed += 1

    worst_margin = np.inf
    for s in range(50):
        rng = np.random.default_rng(s)
        n = float(rng.uniform(0.3, 0.95))
        f = correlated_linear(100, int(rng.integers(3, 9)), s)
        kept, _ = remove_correlated(f, n, "y")
        names = [c for c in kept.names if c != "y"]
        top = max((abs(pearson_complete(kept.column(a), kept.column(b))) for i, a in enumerate(names) for b in names[i + 1 :]), default=0.0)
        worst_margin = min(worst_margin, n - top)

    knn_wins = 0
    for s in range(20):
        full = correlated_linear(300, 5, 100 + s)
        holed = with_missing(full, rate=0.2, seed=s)
        err = {}
        for label, method in (("knn", ImputeMethod.knn(5)), ("median", ImputeMethod.median_other())):
            out = impute(holed, method, seed=s)
            sq = [(out.column(c).values[m] - full.column(c).values[m]) ** 2 for c in full.names if c != "y" for m in [holed.column(c).missing]]
            err[label] = float(np.sqrt(np.concatenate(sq).mean()))
        knn_wins += err["knn"] <= err["median"]

    boruta_ok = 0
    for s in range(20):
        final = boruta_history(boruta_fixture(s), "y", max_iter=30, seed=s, n_trees=50)["final"]
        boruta_ok += final["x1"] == "confirmed" and sum(final[f"x{i}"] == "rejected" for i in range(2, 6)) >= 3

    verdict(
        "preprocessing properties",
        {"present_cells": altered == 0 and cells >= 100_000, "correlated": worst_margin > 0, "knn": knn_wins >= 18, "boruta": boruta_ok >= 18},
        f"{altered} of {cells} present cells altered, min (n - max|r|) = {worst_margin:.3f}, "
        f"KNN <= median {knn_wins}/20, Boruta {boruta_ok}/20",
    )


def test_validation_isolation(verdict):
    reads = 0
    tuning_rows = 0
    for s, f in enumerate([blobs(n=150, seed=1), linear_regression(n=150, seed=2), multiclass(n=150, seed=3)]):
        splits = split_frame(f, seed=s, target="y")
        with record_row_access() as rec:
            run_training(f, "y", splits, tuning=TuningConfig(random_n=2, bayes_budget=4, init_points=3), seed=s, record_timing=False)
        valid = {int(r) for r in f.row_ids[splits.valid]}
        reads += len(rec.rows("tuning") & valid)
        tuning_rows += len(rec.rows("tuning"))
    verdict("validation isolation", {"zero_reads": reads == 0, "instrumented": tuning_rows > 0}, f"{reads} validation-row reads among {tuning_rows} tuning reads")


def test_end_to_end_heart(verdict, tmp_path):
    start = time.perf_counter()
    frame = load_heart()
    check = check_data(frame, HEART_TARGET)
    out = train(frame, HEART_TARGET, tuning=TuningConfig(random_n=10, bayes_budget=20), seed=0, record_timing=False)
    path = generate_report(out, ReportSpec(tmp_path / "heart.html", "html"))
    elapsed = time.perf_counter() - start
    doc = build_report(out)
    table = next(b for i, b in enumerate(doc.blocks) if b[0] == "table" and b[1][:2] == ["rank", "model"])
    header, rows = table[1], table[2]
    col = header.index("accuracy (test)")
    accs = [float(r[col]) for r in rows]
    best = max(r.get("accuracy", "valid") for r in out.leaderboards["valid"].rows)
    baseline = row_of(out, "random_forest_model").get("accuracy", "valid")
    verdict(
        "end-to-end heart",
        {
            "runtime": elapsed < 300,
            "sections": doc.headings == list(SECTION_TITLES) and path.exists(),
            "sorted": accs == sorted(accs, reverse=True),
            "rows": 0 < len(rows) <= 10,
            "accuracy": best >= 0.80,
        },
        f"{len(out.models)} models, {len(check.issues)} check issues, {len(rows)} ranked rows, "
        f"best valid accuracy {best:.3f} (default RF {baseline:.3f}), {elapsed:.0f}s",
    )


def test_persistence(verdict, binary_output, multiclass_output, regression_output, tmp_path):
    exact = identical = 0
    for i, out in enumerate((binary_output, multiclass_output, regression_output)):
        a = save_output(out, tmp_path / f"a{i}.bundle")
        b = save_output(out, tmp_path / f"b{i}.bundle")
        back = load_output(a)
        preds = all(np.array_equal(back.models[m].predict(back.split_frame(s)), p) for (m, s), p in out.predictions.items())
        exact += outputs_equal(out, back) and preds
        identical += a.read_bytes() == b.read_bytes()
    verdict("persistence", {"round_trip": exact == 3, "byte_identical": identical == 3}, f"exact round trip {exact}/3, byte-identical saves {identical}/3")
