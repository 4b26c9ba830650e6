import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arborist.data_check import (
    CheckThresholds,
    DataCheckReport,
    IssueKind,
    check_data,
    detect_corrupted_rows,
    detect_duplicate_columns,
    detect_high_correlation,
    detect_id_like,
    detect_imbalance,
    detect_outliers,
    detect_sparse,
    detect_static,
    outlier_mask,
)
from arborist.frame import Column, Frame, FrameError, frame_from_dict


def clean_frame(n=300, seed=0):
    rng = np.random.default_rng(seed)
    return Frame(
        [Column.numeric(f"x{j}", rng.normal(size=n)) for j in range(4)]
        + [Column.categorical("c", rng.choice(list("abc"), n)), Column.categorical("y", rng.choice(["p", "q"], n))],
        "y",
    )


def kinds(issues):
    return [i.kind for i in issues]


def test_duplicates_grouped_once():
    f = frame_from_dict({"a": [1, 2, 3], "b": [1, 2, 3], "c": [1, 2, 3], "d": [3, 2, 1]})
    issues = detect_duplicate_columns(f)
    assert len(issues) == 1 and set(issues[0].subjects) == {"a", "b", "c"}


def test_duplicates_respect_missing_mask():
    f = Frame([Column.numeric("a", [1, 2, 3]), Column.numeric("b", [1, 2, 3], [False, False, True])])
    assert detect_duplicate_columns(f) == []


def test_check_data_duplicate_pair():
    f = clean_frame()
    f = Frame(f.columns() + [f.column("x0").renamed("copy")], "y")
    dup = check_data(f, "y").of_kind(IssueKind.DUPLICATE_COLUMNS)
    assert len(dup) == 1 and set(dup[0].subjects) == {"x0", "copy"}


def test_id_like():
    rng = np.random.default_rng(0)
    f = frame_from_dict({
        "user_id": rng.normal(size=20).tolist(),
        "code": [float(v) for v in rng.permutation(1000)[:20]],
        "rep": [float(i % 3) for i in range(20)],
    })
    flagged = {i.subjects[0] for i in detect_id_like(f)}
    assert flagged == {"user_id", "code"}


def test_check_data_sequence_is_id_like():
    f = clean_frame()
    f = Frame(f.columns() + [Column.numeric("rowno", np.arange(1, f.n_rows + 1))], "y")
    ids = check_data(f, "y").of_kind(IssueKind.ID_LIKE_COLUMN)
    assert [i.subjects for i in ids] == [("rowno",)]


def test_static_examples():
    f = frame_from_dict({"const": [1.0] * 100, "s99": [0.0] * 99 + [1.0], "s98": [0.0] * 98 + [1.0, 2.0]})
    assert {i.subjects[0] for i in detect_static(f, 0.99)} == {"const", "s99"}
    assert {i.subjects[0] for i in detect_static(f, 1.0)} == {"const"}


def test_sparse_examples():
    n = 10
    f = Frame([
        Column.numeric("empty", [None] * n),
        Column.numeric("p40", [1.0] * 4 + [None] * 6),
        Column.numeric("p60", [1.0] * 6 + [None] * 4),
    ])
    assert {i.subjects[0] for i in detect_sparse(f, 0.5)} == {"empty", "p40"}


def test_corrupted_rows():
    f = Frame([
        Column.numeric("a", [1, None, 3, 4]),
        Column.numeric("b", [1, None, 3, 4]),
        Column.categorical("y", ["p", "q", None, "p"]),
    ], "y")
    issues = detect_corrupted_rows(f, "y", 0.5)
    assert sorted(issues[0].subjects) == [1, 2]


def test_high_correlation_examples():
    rng = np.random.default_rng(1)
    x = rng.random(1000)
    f = frame_from_dict({"x": x.tolist(), "dbl": (2 * x).tolist(), "neg": (-x).tolist(), "ind": rng.random(1000).tolist()})
    stats = {frozenset(i.subjects): i.statistic for i in detect_high_correlation(f, 0.7)}
    assert stats[frozenset({"x", "dbl"})] == pytest.approx(1.0)
    assert stats[frozenset({"x", "neg"})] == pytest.approx(-1.0)
    assert not any("ind" in k for k in stats)


def test_outliers_examples():
    f = frame_from_dict({"spike": [0.0] * 100 + [1000.0], "const": [5.0] * 101})
    flagged = {i.subjects[0]: i for i in detect_outliers(f)}
    assert set(flagged) == {"spike"} and flagged["spike"].severity == "info"
    g = frame_from_dict({"normal": np.random.default_rng(0).normal(size=100).tolist()})
    assert all(i.severity == "info" for i in detect_outliers(g))


def test_outlier_mask_brute_force():
    rng = np.random.default_rng(3)
    v = rng.standard_cauchy(500)
    q1, q3 = np.percentile(v, [25, 75])
    iqr = q3 - q1
    expected = (v < q1 - 3 * iqr) | (v > q3 + 3 * iqr)
    assert np.array_equal(outlier_mask(v), expected)


def test_binary_indicator_not_outlier():
    f = frame_from_dict({"flag": [0.0] * 95 + [1.0] * 5})
    assert detect_outliers(f) == []


def test_imbalance_examples():
    even = frame_from_dict({"y": ["a", "b"] * 50})
    skew = frame_from_dict({"y": ["a"] * 80 + ["b"] * 20})
    reg = frame_from_dict({"y": [float(i) for i in range(100)]})
    assert detect_imbalance(even, "y") == []
    (issue,) = detect_imbalance(skew, "y")
    assert issue.statistic == pytest.approx(4.0)
    assert detect_imbalance(reg, "y") == []


def test_clean_frame_has_no_structural_issues():
    report = check_data(clean_frame(), "y")
    structural = set(list(IssueKind)[:7])
    assert not [i for i in report.issues if i.kind in structural]


def test_empty_frame():
    f = Frame([Column.numeric("x", []), Column.categorical("y", [])], "y")
    report = check_data(f, "y")
    assert report.issues == [] and report.summary["n_rows"] == 0


def test_missing_target_raises():
    with pytest.raises(FrameError):
        check_data(clean_frame(), "nope")


def test_report_ordering_json_and_text():
    rng = np.random.default_rng(2)
    n = 200
    x = rng.normal(size=n)
    f = Frame([
        Column.numeric("id", np.arange(n)),
        Column.numeric("x", x),
        Column.numeric("x2", x),
        Column.numeric("sparse", np.where(rng.random(n) < 0.8, np.nan, 1.0)),
        Column.categorical("y", ["a"] * 170 + ["b"] * 30),
    ], "y")
    a, b = check_data(f, "y"), check_data(f, "y")
    assert a.dumps() == b.dumps()
    order = [list(IssueKind).index(k) for k in kinds(a.issues)]
    assert order == sorted(order)
    back = DataCheckReport.from_json(json.loads(a.dumps()))
    assert back.dumps() == a.dumps()
    assert "target_imbalance" in a.to_text()
    for issue in a.issues:
        assert issue.subjects


def test_check_does_not_mutate():
    f = clean_frame()
    before = [c.values.copy() for c in f.columns()]
    check_data(f, "y")
    assert all(np.array_equal(a.astype(str), c.values.astype(str)) for a, c in zip(before, f.columns()))


@given(st.integers(0, 1000), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
@settings(max_examples=30, deadline=None)
def test_threshold_monotonicity(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    rng = np.random.default_rng(seed)
    n = 40
    cols = []
    for j in range(5):
        vals = rng.integers(0, 1 + j, n).astype(float)
        vals[rng.random(n) < rng.random()] = np.nan
        cols.append(Column.numeric(f"c{j}", vals))
    cols.append(Column.categorical("y", rng.choice(["a", "b"], n)))
    f = Frame(cols, "y")
    count = lambda issues: sum(len(i.subjects) for i in issues)
    # static flags share >= k and correlation flags |r| >= n: raising them never adds
    assert count(detect_static(f, hi)) <= count(detect_static(f, lo))
    assert count(detect_high_correlation(f, hi)) <= count(detect_high_correlation(f, lo))
    # sparse and corrupted flag shares below l and m: lowering them never adds
    assert count(detect_sparse(f, lo)) <= count(detect_sparse(f, hi))
    assert count(detect_corrupted_rows(f, "y", lo)) <= count(detect_corrupted_rows(f, "y", hi))


def test_thresholds_validated():
    with pytest.raises(ValueError):
        CheckThresholds(k=1.5)
