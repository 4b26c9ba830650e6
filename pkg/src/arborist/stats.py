"""Small statistical helpers shared by the check and preprocessing stages."""

from __future__ import annotations

import numpy as np

from .frame import Column, ColumnKind


def pearson_complete(a: Column, b: Column) -> float | None:
    """Pearson r over rows where both cells are present; ``None`` if undefined."""
    keep = ~(a.missing | b.missing)
    if keep.sum() < 2:
        return None
    x = a.values[keep].astype(float)
    y = b.values[keep].astype(float)
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt((x * x).sum() * (y * y).sum())
    if denom == 0:
        return None
    return float(np.clip((x * y).sum() / denom, -1.0, 1.0))


def codes(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    levels, inv = np.unique(values.astype(str), return_inverse=True)
    return levels, inv


def contingency(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Joint count table of two integer code vectors."""
    nx, ny = int(x.max()) + 1, int(y.max()) + 1
    table = np.zeros((nx, ny))
    np.add.at(table, (x, y), 1.0)
    return table


def cramers_v(a: Column, b: Column) -> float | None:
    keep = ~(a.missing | b.missing)
    if keep.sum() < 2:
        return None
    _, x = codes(a.values[keep])
    _, y = codes(b.values[keep])
    table = contingency(x, y)
    r, c = table.shape
    if min(r, c) < 2:
        return None
    n = table.sum()
    expected = table.sum(1, keepdims=True) * table.sum(0, keepdims=True) / n
    chi2 = ((table - expected) ** 2 / expected).sum()
    return float(np.sqrt(chi2 / (n * (min(r, c) - 1))))


def equal_frequency_bins(values: np.ndarray, n_bins: int = 10) -> np.ndarray:
    """Integer bin codes from quantile edges (ties stay in one bin)."""
    edges = np.unique(np.quantile(values, np.linspace(0, 1, n_bins + 1)[1:-1]))
    return np.searchsorted(edges, values, side="right")


def mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information (nats) of two discrete code vectors."""
    table = contingency(x, y)
    joint = table / table.sum()
    px = joint.sum(1, keepdims=True)
    py = joint.sum(0, keepdims=True)
    nz = joint > 0
    return float((joint[nz] * np.log(joint[nz] / (px @ py)[nz])).sum())


def discretize(col: Column, n_bins: int = 10) -> np.ndarray:
    """Codes for a fully present column; numeric columns are quantile-binned."""
    if col.kind is ColumnKind.NUMERIC:
        return equal_frequency_bins(col.values.astype(float), n_bins)
    return codes(col.values)[1]
