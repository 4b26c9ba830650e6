import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import auc_pairs, binary_oracle, close, multiclass_oracle, regression_oracle

from arborist.evaluation import (
    Leaderboard,
    LeaderboardRow,
    Metric,
    MetricError,
    MetricRegistry,
    auc_score,
    binary_metrics,
    default_sort_metric,
    multiclass_metrics,
    rank_models,
    regression_metrics,
    roc_curve,
)
from arborist.frame import TaskType


def test_auc_example():
    assert auc_score(np.array([0, 0, 1, 1]), np.array([0.1, 0.4, 0.35, 0.8])) == 0.75


def test_perfect_binary():
    m = binary_metrics([0, 1, 1, 0], np.array([0.1, 0.9, 0.8, 0.2]))
    assert m["accuracy"] == m["precision"] == m["recall"] == m["f1"] == 1.0


def test_constant_scores_give_half_auc():
    assert auc_score(np.array([0, 1] * 10), np.full(20, 0.5)) == 0.5


def test_single_class_auc_undefined():
    m = binary_metrics([1, 1, 1], np.array([0.2, 0.6, 0.9]))
    assert m["auc"] is None and "auc" in m.flags


def test_zero_denominator_flagged():
    m = binary_metrics([0, 0, 1], np.array([0.1, 0.2, 0.3]))
    assert m["precision"] == 0.0 and "precision" in m.flags


def test_multiclass_example():
    m = multiclass_metrics([0, 0, 1, 2], np.eye(3)[[0, 1, 1, 2]])
    assert m["accuracy"] == 0.75
    assert m["recall_macro"] == pytest.approx((0.5 + 1 + 1) / 3)


def test_balanced_weighted_equals_macro():
    truths = [0, 1, 2] * 4
    preds = np.eye(3)[[0, 1, 2, 1, 1, 2, 0, 0, 2, 2, 1, 0]]
    m = multiclass_metrics(truths, preds)
    for kind in ("precision", "recall", "f1"):
        assert m[f"{kind}_weighted"] == pytest.approx(m[f"{kind}_macro"])


def test_regression_examples():
    m = regression_metrics([1, 2, 3], [1, 2, 3])
    assert m["mse"] == m["rmse"] == m["mae"] == m["mad"] == 0 and m["r2"] == 1
    assert regression_metrics([1, 2, 3], [2, 2, 2])["r2"] == 0
    m = regression_metrics([1, 2, 3], [2, 2, 2])
    assert m["mse"] == pytest.approx(2 / 3) and m["mae"] == pytest.approx(2 / 3)
    assert m["rmse"] == pytest.approx(0.8165, abs=1e-4)
    const = regression_metrics([2, 2, 2], [1, 2, 3])
    assert const["r2"] is None and "r2" in const.flags


def test_roc_area_equals_auc():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 200)
    s = np.round(rng.random(200), 1)
    fpr, tpr = roc_curve(y, s)
    area = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    assert area == pytest.approx(auc_score(y, s), abs=1e-12)


@given(st.integers(0, 100_000), st.integers(4, 60))
@settings(max_examples=60, deadline=None)
def test_binary_matches_oracle(seed, n):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    s = np.round(rng.random(n), int(rng.integers(1, 4)))
    ours = binary_metrics(y, s)
    ref = binary_oracle(y.tolist(), s.tolist())
    assert all(close(ours[k], v) for k, v in ref.items())
    assert ours["balanced_accuracy"] == (ours["sensitivity"] + ours["specificity"]) / 2


@given(st.integers(0, 100_000), st.integers(3, 60), st.integers(3, 6))
@settings(max_examples=60, deadline=None)
def test_multiclass_matches_oracle(seed, n, k):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, k, n)
    p = rng.dirichlet(np.ones(k), n)
    ours = multiclass_metrics(y, p)
    ref = multiclass_oracle(y.tolist(), p.tolist())
    assert all(close(ours[key], v) for key, v in ref.items())
    assert close(ours["f1_micro"], ours["accuracy"])


@given(st.integers(0, 100_000), st.integers(2, 60))
@settings(max_examples=60, deadline=None)
def test_regression_matches_oracle(seed, n):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=n)
    p = y + rng.normal(size=n)
    ours = regression_metrics(y, p)
    ref = regression_oracle(y.tolist(), p.tolist())
    assert all(close(ours[k], v) for k, v in ref.items())


@given(st.integers(0, 100_000))
@settings(max_examples=30, deadline=None)
def test_metric_invariances(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, 40)
    s = rng.random(40)
    perm = rng.permutation(40)
    assert binary_metrics(y, s) == binary_metrics(y[perm], s[perm])
    assert auc_score(y, s) == pytest.approx(auc_score(y, np.exp(3 * s) - 7), abs=1e-12)
    assert auc_score(y, s) == pytest.approx(auc_pairs(y.tolist(), s.tolist()), abs=1e-12)


# -------------------------------------------------------------- registry


def cost_metric(name="cost@0.3"):
    def compute(truths, probs):
        pred = np.asarray(probs)[:, 1] >= 0.3
        return float(np.sum(pred & (np.asarray(truths) == 0)) + 5 * np.sum(~pred & (np.asarray(truths) == 1)))

    return Metric(name, "lower", frozenset({TaskType.BINARY}), compute)


def test_custom_metric_registration_and_sorting():
    reg = MetricRegistry()
    reg.register(cost_metric())
    with pytest.raises(MetricError, match="already"):
        reg.register(cost_metric())
    y = np.array([0, 1, 1, 0, 1])
    preds = {"a": np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.5, 0.5], [0.1, 0.9]]),
             "b": np.array([[0.1, 0.9], [0.9, 0.1], [0.9, 0.1], [0.5, 0.5], [0.9, 0.1]])}
    rows = []
    for name, p in preds.items():
        row = LeaderboardRow(name, "tree", "default")
        for k, v in reg.evaluate(TaskType.BINARY, y, p).items():
            row.values[(k, "test")] = v
        rows.append(row)
    board = rank_models(rows, "cost@0.3", registry=reg)
    costs = [r.get("cost@0.3", "test") for r in board.rows]
    assert costs == sorted(costs) and not board.higher_is_better
    with pytest.raises(MetricError):
        reg.unregister("accuracy")
    reg.unregister("cost@0.3")
    assert "cost@0.3" not in reg


def test_custom_accuracy_ranks_like_accuracy():
    reg = MetricRegistry()
    reg.register(Metric("my_acc", "higher", frozenset({TaskType.MULTICLASS}),
                        lambda t, p: float(np.mean(np.argmax(p, axis=1) == t))))
    rng = np.random.default_rng(1)
    y = rng.integers(0, 3, 50)
    rows = []
    for i in range(8):
        p = rng.dirichlet(np.ones(3), 50)
        row = LeaderboardRow(f"m{i}", "tree", "random")
        for k, v in reg.evaluate(TaskType.MULTICLASS, y, p).items():
            row.values[(k, "test")] = v
        rows.append(row)
    assert rank_models(rows, "my_acc", registry=reg).names == rank_models(rows, "accuracy", registry=reg).names


def test_metric_direction_validated():
    with pytest.raises(MetricError):
        Metric("x", "sideways", frozenset(), lambda t, p: 0.0)


def test_check_rejects_wrong_task():
    with pytest.raises(MetricError):
        MetricRegistry().check("rmse", TaskType.BINARY)
    with pytest.raises(MetricError, match="unknown"):
        MetricRegistry().get("nope")


# ----------------------------------------------------------- leaderboard


def rows_with(metric, values):
    return [LeaderboardRow(n, "tree", "default", {(metric, "test"): v}) for n, v in values.items()]


def test_rank_examples():
    assert rank_models(rows_with("accuracy", {"b": 0.8, "a": 0.9}), "accuracy").names == ["a", "b"]
    assert rank_models(rows_with("rmse", {"a": 2.0, "b": 1.0}), "rmse").names == ["b", "a"]
    assert rank_models(rows_with("accuracy", {"z": 0.5, "a": 0.5, "m": 0.5}), "accuracy").names == ["a", "m", "z"]


def test_rank_none_values_last():
    board = rank_models(rows_with("auc", {"a": None, "b": 0.6}), "auc")
    assert board.names == ["b", "a"]


def test_rank_idempotent_and_serializable():
    rng = np.random.default_rng(0)
    rows = rows_with("accuracy", {f"m{i}": float(rng.integers(0, 4)) / 4 for i in range(12)})
    board = rank_models(rows, "accuracy")
    assert rank_models(board.rows, "accuracy").names == board.names
    back = Leaderboard.from_json(json.loads(json.dumps(board.to_json())))
    assert back.names == board.names and back.to_csv() == board.to_csv()
    assert board.to_csv().splitlines()[0].startswith("model,engine,origin")
    vals = [r.get("accuracy", "test") for r in board.rows]
    assert vals == sorted(vals, reverse=True)


def test_default_sort_metric():
    assert default_sort_metric(TaskType.BINARY) == "accuracy"
    assert default_sort_metric(TaskType.REGRESSION) == "rmse"
