"""Seeded fixtures shared by the test modules."""

import numpy as np

from arborist.frame import Column, Frame


def blobs(n=200, p=3, margin=3.0, seed=0, labels=("neg", "pos")):
    """Two Gaussian classes whose means differ by ``margin`` along every axis."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.normal(size=(n, p)) + margin * y[:, None] / np.sqrt(p)
    cols = [Column.numeric(f"x{j}", X[:, j]) for j in range(p)]
    cols.append(Column.categorical("y", [labels[v] for v in y]))
    return Frame(cols, "y")


def linear_regression(n=200, p=3, noise=0.1, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X @ np.arange(1, p + 1) + noise * rng.normal(size=n)
    cols = [Column.numeric(f"x{j}", X[:, j]) for j in range(p)]
    cols.append(Column.numeric("y", y))
    return Frame(cols, "y")


def multiclass(n=300, k=3, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, k, n)
    X = rng.normal(size=(n, 2)) + 3 * np.column_stack([np.cos(y * 2.1), np.sin(y * 2.1)])
    cat = np.where(rng.random(n) < 0.7, np.array(list("abc"))[y % 3], "z")
    cols = [Column.numeric("u", X[:, 0]), Column.numeric("v", X[:, 1]), Column.categorical("c", cat)]
    cols.append(Column.categorical("y", [f"class{v}" for v in y]))
    return Frame(cols, "y")


def with_missing(frame, rate=0.1, seed=0, target="y"):
    """MCAR holes in every feature column."""
    rng = np.random.default_rng(seed)
    out = []
    for col in frame.columns():
        if col.name == target:
            out.append(col)
            continue
        holes = rng.random(len(col)) < rate
        if col.kind.value == "numeric":
            out.append(Column.numeric(col.name, col.values, col.missing | holes))
        else:
            out.append(Column.categorical(col.name, col.values, col.missing | holes))
    return Frame(out, frame.target, frame.row_ids)
