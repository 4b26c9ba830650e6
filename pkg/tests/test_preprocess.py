import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import blobs, multiclass, with_missing

from arborist.frame import Column, Frame, FrameError, frame_from_dict
from arborist.preprocess import (
    ImputationError,
    ImputeMethod,
    NoFeaturesError,
    PreprocessConfig,
    PreprocessLog,
    SelectMethod,
    apply_selection,
    basic_preprocessing,
    boruta_history,
    custom_preprocessing,
    impute,
    mcfs_scores,
    remove_correlated,
    select_boruta,
    select_mcfs,
    select_mutual_info,
    select_permutation_vi,
)
from arborist.stats import pearson_complete


def target_copy_frame(n=200, seed=0, noise=3):
    rng = np.random.default_rng(seed)
    y = rng.choice(["a", "b"], n)
    d = {f"noise{j}": rng.normal(size=n).tolist() for j in range(noise)}
    d["copy"] = [1.0 if v == "b" else 0.0 for v in y]
    d["y"] = y.tolist()
    return frame_from_dict(d, "y")


# ------------------------------------------------------------ custom recipe


def test_all_off_is_identity():
    f = blobs(seed=1)
    out, log = custom_preprocessing(f, "y", PreprocessConfig.all_off(impute=ImputeMethod.median_frequency()))
    assert out.equals(f) and len(log) == 0


def test_duplicate_column_dropped_and_logged():
    f = blobs(seed=1)
    f = Frame(f.columns() + [f.column("x0").renamed("twin")], "y")
    out, log = custom_preprocessing(f, "y", PreprocessConfig.all_off(remove_duplicates=True))
    assert out.n_cols == f.n_cols - 1
    assert [a.stage for a in log.actions] == ["remove_columns"]


def test_knn_leaves_no_missing():
    f = with_missing(multiclass(seed=2), rate=0.2, seed=2)
    out, _ = custom_preprocessing(f, "y", PreprocessConfig(impute=ImputeMethod.knn(5)))
    assert sum(c.n_missing for c in out.columns()) == 0


def test_log_replay_and_determinism():
    rng = np.random.default_rng(4)
    n = 120
    f = Frame([
        Column.numeric("id", np.arange(n)),
        Column.numeric("x", rng.normal(size=n)),
        Column.numeric("static", np.ones(n)),
        Column.numeric("sparse", np.where(rng.random(n) < 0.7, np.nan, 1.0)),
        Column.numeric("w", np.where(rng.random(n) < 0.1, np.nan, rng.normal(size=n))),
        Column.categorical("y", np.where(rng.random(n) < 0.05, None, rng.choice(["a", "b"], n))),
    ], "y")
    cfg = PreprocessConfig(impute=ImputeMethod.knn(3))
    out, log = custom_preprocessing(f, "y", cfg)
    again, log2 = custom_preprocessing(f, "y", cfg)
    assert out.equals(again) and log.to_json() == log2.to_json()
    replayed = log.replay(f)
    assert replayed.names == out.names and replayed.row_ids.tolist() == out.row_ids.tolist()
    assert {"id", "static", "sparse"} <= set(log.removed_columns())
    assert out.column("y").n_missing == 0 and "y" in out.names
    assert PreprocessLog.from_json(json.loads(json.dumps(log.to_json()))).to_json() == log.to_json()


def test_config_json_round_trip():
    cfg = PreprocessConfig(remove_correlated=True, impute=ImputeMethod.mice(3), select=SelectMethod("mcfs", top_k=2))
    assert PreprocessConfig.from_json(json.loads(cfg.dumps())) == cfg


def test_no_features_remain():
    f = frame_from_dict({"c": [1.0] * 20, "y": ["a", "b"] * 10}, "y")
    with pytest.raises(NoFeaturesError, match="no features remain"):
        custom_preprocessing(f, "y", PreprocessConfig())


@pytest.mark.parametrize("bad", [dict(kind="nope"), dict(kind="knn", k_neighbors=0)])
def test_impute_method_validation(bad):
    with pytest.raises(ValueError):
        ImputeMethod(**bad)


@pytest.mark.parametrize("bad", [dict(top_k=0), dict(fraction=0.0), dict(alpha=1.0)])
def test_select_method_validation(bad):
    with pytest.raises(ValueError):
        SelectMethod(kind="mcfs", **bad)


# ------------------------------------------------------- removal of pairs


def test_remove_correlated_pair():
    rng = np.random.default_rng(0)
    x = rng.normal(size=300)
    f = frame_from_dict({"x": x.tolist(), "x2": (2 * x).tolist(), "z": rng.normal(size=300).tolist()})
    out, removed = remove_correlated(f, 0.9)
    assert len(removed) == 1 and removed[0] in ("x", "x2") and "z" in out.names


def test_remove_correlated_chain_drops_middle():
    rng = np.random.default_rng(0)
    n = 4000
    a = rng.normal(size=n)
    c = 0.7 * a + np.sqrt(1 - 0.49) * rng.normal(size=n)
    b = (a + c) / 2
    f = frame_from_dict({"a": a.tolist(), "b": b.tolist(), "c": c.tolist()})
    assert abs(pearson_complete(f.column("a"), f.column("c"))) < 0.9
    _, removed = remove_correlated(f, 0.9)
    assert removed == ["b"]


def test_remove_correlated_nothing_to_do():
    f = blobs(seed=5)
    out, removed = remove_correlated(f, 0.9, target="y")
    assert removed == [] and out.equals(f)


def test_remove_correlated_bad_threshold():
    with pytest.raises(ValueError):
        remove_correlated(blobs(), 0.0)


# ----------------------------------------------------------------- impute


def test_median_other():
    f = Frame([Column.numeric("a", [1, None, 3]), Column.categorical("c", ["x", None, "y"])])
    out = impute(f, ImputeMethod.median_other())
    assert out.column("a").values.tolist() == [1.0, 2.0, 3.0]
    assert out.column("c").text() == ["x", "other", "y"]


def test_median_frequency_mode():
    f = Frame([Column.categorical("c", ["a", "a", "b", None])])
    assert impute(f, ImputeMethod.median_frequency()).column("c").text() == ["a", "a", "b", "a"]


def test_knn_copies_twin():
    f = Frame([
        Column.numeric("a", [1.0, 1.0, 5.0, 9.0]),
        Column.categorical("c", ["p", "p", "q", "r"]),
        Column.numeric("t", [42.0, None, 0.0, -7.0]),
    ])
    assert impute(f, ImputeMethod.knn(1)).column("t").values[1] == 42.0


def test_unimputable_column():
    f = Frame([Column.numeric("a", [None, None]), Column.numeric("b", [1.0, None])])
    with pytest.raises(ImputationError, match="unimputable"):
        impute(f, ImputeMethod.median_frequency())


def test_target_is_never_imputed():
    f = Frame([Column.numeric("a", [1.0, None, 3.0]), Column.categorical("y", ["p", None, "q"])], "y")
    out = impute(f, ImputeMethod.median_frequency())
    assert out.column("y").missing.tolist() == [False, True, False]


@pytest.mark.parametrize("method", [ImputeMethod.median_other(), ImputeMethod.median_frequency(), ImputeMethod.knn(3), ImputeMethod.mice(2)])
@given(seed=st.integers(0, 10_000), rate=st.floats(0.05, 0.5))
@settings(max_examples=8, deadline=None)
def test_imputation_preserves_present_cells(method, seed, rate):
    f = with_missing(multiclass(n=60, seed=seed), rate=rate, seed=seed)
    out = impute(f, method, seed=seed)
    for name in f.names:
        a, b = f.column(name), out.column(name)
        keep = ~a.missing
        assert list(a.values[keep]) == list(b.values[keep])
        if name != "y":
            assert b.n_missing == 0


# -------------------------------------------------------------- selection


def test_mutual_info_picks_copy_first():
    f = target_copy_frame()
    picked = select_mutual_info(f, "y", 2)
    assert picked[0] == "copy"
    assert sorted(select_mutual_info(f, "y", 99)) == sorted(n for n in f.names if n != "y")


def test_mutual_info_regression_target():
    rng = np.random.default_rng(0)
    x = rng.normal(size=300)
    f = frame_from_dict({"noise": rng.normal(size=300).tolist(), "x": x.tolist(), "y": (x * 3).tolist()}, "y")
    assert select_mutual_info(f, "y", 1) == ["x"]


def test_boruta_confirms_signal():
    rng = np.random.default_rng(0)
    n = 200
    x1 = rng.normal(size=n)
    d = {"x1": x1.tolist(), **{f"x{i}": rng.normal(size=n).tolist() for i in range(2, 6)}}
    d["y"] = ["a" if v > 0 else "b" for v in x1]
    f = frame_from_dict(d, "y")
    kept = select_boruta(f, "y", max_iter=20, seed=0, n_trees=30)
    assert "x1" in kept and "y" not in kept


def test_boruta_all_noise_confirms_little():
    rng = np.random.default_rng(1)
    n = 200
    d = {f"x{i}": rng.normal(size=n).tolist() for i in range(4)}
    d["y"] = rng.choice(["a", "b"], n).tolist()
    record = boruta_history(frame_from_dict(d, "y"), "y", max_iter=15, seed=1, n_trees=30)
    assert sum(s == "confirmed" for s in record["final"].values()) <= 1


def test_boruta_needs_an_iteration():
    with pytest.raises(ValueError, match="at least one iteration"):
        select_boruta(target_copy_frame(), "y", max_iter=0)


def test_mcfs_ranks_copy_first():
    f = target_copy_frame()
    assert select_mcfs(f, "y", projections=40, fraction=0.5, top_k=1, seed=0) == ["copy"]
    everything = select_mcfs(f, "y", projections=10, top_k=99)
    assert sorted(everything) == sorted(n for n in f.names if n != "y")
    with pytest.raises(ValueError):
        mcfs_scores(f, "y", projections=0)


def test_mcfs_single_projection_is_tree_importance():
    from arborist.engines import fit_tree

    f = target_copy_frame(noise=2)
    scores = mcfs_scores(f, "y", projections=1, fraction=1.0, seed=3)
    rng = np.random.default_rng([3, 0])
    rng.choice(3, 3, replace=False)
    boot = rng.integers(0, f.n_rows, f.n_rows)
    tree = fit_tree(f.take(boot), "y", seed=3)
    imp = tree.feature_importance()
    ranked = lambda d: sorted(d, key=lambda k: (-d[k], k))
    assert ranked(scores) == ranked({k: imp.get(k, 0.0) for k in scores})


def test_permutation_vi():
    f = target_copy_frame(noise=3)
    kept = select_permutation_vi(f, "y", n_repeats=3, seed=0)
    assert "copy" in kept and not any(k.startswith("noise") for k in kept)
    one = frame_from_dict({"x": [float(i % 2) for i in range(40)], "y": ["a", "b"] * 20}, "y")
    assert select_permutation_vi(one, "y") == ["x"]


@pytest.mark.parametrize("kind", ["none", "mutual_info", "mcfs", "permutation_vi", "boruta"])
def test_selection_returns_feature_subset(kind):
    f = target_copy_frame(n=120)
    kept = apply_selection(f, "y", SelectMethod(kind, top_k=2, max_iter=5, projections=10, n_repeats=2), seed=0)
    assert set(kept) <= set(f.names) - {"y"}


def test_selection_requires_complete_features():
    f = with_missing(target_copy_frame(), 0.2)
    with pytest.raises(FrameError, match="impute"):
        select_mutual_info(f, "y", 2)


# --------------------------------------------------------------- fallback


def test_basic_clean_unchanged():
    f = blobs(seed=3)
    out, log = basic_preprocessing(f, "y")
    assert out.equals(f) and len(log) == 0


def test_basic_drops_constant_and_imputes():
    f = with_missing(blobs(seed=3), 0.1)
    f = Frame(f.columns() + [Column.numeric("const", np.ones(f.n_rows))], "y")
    out, log = basic_preprocessing(f, "y")
    assert "const" not in out.names
    assert sum(c.n_missing for c in out.columns()) == 0


def test_basic_normalizes_labels():
    f = frame_from_dict({"x": [float(i) for i in range(6)], "y": ["Yes ", " yes", "no", "No", "yes", "no"]}, "y")
    out, log = basic_preprocessing(f, "y")
    assert out.column("y").levels() == ["no", "yes"]
    assert any(a.stage == "labels" for a in log.actions)
